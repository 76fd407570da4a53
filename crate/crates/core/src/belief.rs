//! Posterior beliefs, the decision maker's expected payoff and her action.
//!
//! On path, beliefs follow Bayes' rule from the equilibrium strategies. For a
//! conflicting pair `r_1 ≥ 0 ≥ r_2` the likelihood of θ has three parts: both
//! senders misreport (`f ψ_1 ψ_2`, a density on an interval), or exactly one
//! of them tells the truth (a point mass at `θ = r_1` or `θ = r_2`). Matching
//! reports reveal the state.
//!
//! Off path the decision maker rationalises the deviation as coming from a
//! single sender: with two positive reports she believes sender 2, with two
//! negative reports sender 1, and for a conflicting pair nobody delivers she
//! believes whichever report wins the swing comparison. Reports pointing the
//! "wrong" way for both senders (`r_1 < 0 < r_2`) and conflicting pairs with
//! both reports beyond the conflict region are split evenly between the two
//! literal readings.
//!
//! The action rule is the swing rule `⊕ iff r_1 ≥ s(r_2)` on conflicting
//! pairs; [`BeliefEngine::decide_bayes`] is the independent route through the
//! sign of the posterior expected payoff.

use serde::Serialize;

use crate::error::{Result, SigError};
use crate::model::{GameConfig, Sender};
use crate::strategy::StrategyProfile;

/// The decision maker's two alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Plus,
    Minus,
}

impl Action {
    /// Ties go to ⊕.
    pub fn from_payoff(u: f64) -> Action {
        if u >= 0.0 {
            Action::Plus
        } else {
            Action::Minus
        }
    }

    pub fn is_plus(self) -> bool {
        self == Action::Plus
    }
}

/// How a belief was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefKind {
    /// Matching reports: the state is the common report.
    Matching,
    /// `(0, 0)` is never delivered by a single deviation; its belief is pinned
    /// only by indifference.
    DoubleDeviation,
    /// Both reports non-negative (and not matching): sender 2 is believed.
    TrustSenderTwo,
    /// Both reports non-positive (and not matching): sender 1 is believed.
    TrustSenderOne,
    /// A conflicting pair with positive likelihood: Bayes' rule.
    Bayes,
    /// A conflicting pair nobody delivers: the swing winner is believed.
    SwingWinner,
    /// Even split between the two literal readings of the reports.
    LiteralMix,
}

/// A posterior over θ: point masses plus an optional continuous part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    pub r_1: f64,
    pub r_2: f64,
    pub kind: BeliefKind,
    /// Smallest and largest state with positive belief.
    pub support_lo: f64,
    pub support_hi: f64,
    /// `(θ, probability)` point masses.
    pub points: Vec<(f64, f64)>,
    /// Interval carrying the continuous part, and its probability.
    pub continuous: Option<(f64, f64)>,
    pub continuous_mass: f64,
    /// `U_dm(r_1, r_2)`.
    pub u_dm_expected: f64,
    /// The action prescribed by the decision rule.
    pub action: Action,
}

impl Posterior {
    /// A belief concentrated on a single state.
    pub fn is_degenerate(&self, width: f64) -> bool {
        self.support_hi - self.support_lo <= width
    }

    fn point(r_1: f64, r_2: f64, kind: BeliefKind, theta: f64, cfg: &GameConfig, action: Action) -> Self {
        Posterior {
            r_1,
            r_2,
            kind,
            support_lo: theta,
            support_hi: theta,
            points: vec![(theta, 1.0)],
            continuous: None,
            continuous_mass: 0.0,
            u_dm_expected: cfg.u_dm.eval(theta),
            action,
        }
    }
}

/// Which states can have produced a pair, without any quadrature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefStructure {
    pub kind: BeliefKind,
    /// Interval on which both senders misreport with positive density.
    pub interval: Option<(f64, f64)>,
    /// Point masses with their unnormalised likelihood weights.
    pub points: Vec<(f64, f64)>,
}

impl BeliefStructure {
    /// True when the belief is concentrated on one state.
    pub fn is_degenerate(&self, width: f64) -> bool {
        match self.kind {
            BeliefKind::Matching
            | BeliefKind::DoubleDeviation
            | BeliefKind::TrustSenderOne
            | BeliefKind::TrustSenderTwo
            | BeliefKind::SwingWinner => true,
            BeliefKind::LiteralMix => false,
            BeliefKind::Bayes => {
                let interval = self.interval.is_some_and(|(lo, hi)| hi - lo > width);
                let points = self.points.iter().filter(|p| p.1 > 0.0).count();
                !interval && points <= 1
            }
        }
    }
}

/// Noise densities for the vanishing-noise limit of beliefs: each report is
/// misread with probability `ε_j` and replaced by a draw from `g_j`.
pub struct NoiseModel<'a> {
    pub g_1: &'a dyn Fn(f64) -> f64,
    pub g_2: &'a dyn Fn(f64) -> f64,
    /// `ε_1 / ε_2` in the limit.
    pub eps_ratio: f64,
}

/// Pairs this close to the swing locus count as ties (resolved to ⊕): the
/// tabulated swing function is its own inverse only to rounding.
pub const LOCUS_TIE: f64 = 1e-10;

/// Largest accepted quadrature error in a posterior integral, relative to the
/// posterior normaliser.
const POSTERIOR_REL_ERR: f64 = 1e-8;

/// Beliefs and decisions for a given equilibrium profile.
#[derive(Debug, Clone, Copy)]
pub struct BeliefEngine<'a> {
    profile: &'a StrategyProfile,
}

/// Outcome of the comparison between the swing rule and Bayes' rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    /// Conflicting pairs checked.
    pub pairs: usize,
    /// Pairs within the exclusion band around the swing locus.
    pub near_locus: usize,
    /// Pairs (outside the band) where sign(U_dm) disagrees with the swing rule.
    pub disagreements: usize,
    /// Largest |U_dm| among disagreeing pairs.
    pub worst_disagreement: f64,
    /// Example disagreeing pair `(r_1, r_2, U_dm)`.
    pub example: Option<(f64, f64, f64)>,
    /// Adjacent grid pairs where U_dm decreases in a report (beyond noise).
    pub fosd_violations: usize,
}

impl<'a> BeliefEngine<'a> {
    pub fn new(profile: &'a StrategyProfile) -> Self {
        BeliefEngine { profile }
    }

    pub fn profile(&self) -> &'a StrategyProfile {
        self.profile
    }

    fn cfg(&self) -> &GameConfig {
        self.profile.cfg()
    }

    /// The decision rule. Includes the profile's swing-shift mutation, which
    /// corrupts only the decision maker.
    pub fn decide(&self, r_1: f64, r_2: f64) -> Action {
        let cfg = self.cfg();
        let u = |t: f64| cfg.u_dm.eval(t);
        if r_1 == r_2 {
            return Action::from_payoff(u(r_1));
        }
        if r_1 >= 0.0 && r_2 > 0.0 {
            return Action::Plus;
        }
        if r_1 < 0.0 && r_2 <= 0.0 {
            return Action::Minus;
        }
        if r_1 < 0.0 {
            return Action::from_payoff(u(r_1) + u(r_2));
        }
        // Conflicting: r_1 ≥ 0 ≥ r_2.
        let (lower, upper) = self.profile.swing().domain();
        if r_1 > upper && r_2 < lower {
            return Action::from_payoff(u(r_1) + u(r_2));
        }
        let threshold = self.profile.swing().eval_ext(r_2) + self.profile.mutation().swing_shift;
        if r_1 >= threshold - LOCUS_TIE {
            Action::Plus
        } else {
            Action::Minus
        }
    }

    /// States in which `r` is a misreport on sender's equilibrium support,
    /// `{θ : r ∈ S_j(θ) \ {θ}}`, from the closed-form supports.
    pub fn misreport_states(&self, sender: Sender, r: f64) -> Option<(f64, f64)> {
        let cfg = self.cfg();
        let s = self.profile.swing();
        let c = self.profile.cutoffs();
        let (lo, hi) = match sender {
            Sender::One if r > 0.0 => (
                c.theta_1.max(s.eval_ext(r)).max(cfg.inv_upper_reach_1_ext(r)),
                c.theta_2.min(r).min(cfg.inv_lower_reach_2_ext(s.eval_ext(r))),
            ),
            Sender::Two if r < 0.0 => (
                c.theta_1.max(r).max(cfg.inv_upper_reach_1_ext(s.eval_ext(r))),
                c.theta_2.min(s.eval_ext(r)).min(cfg.inv_lower_reach_2_ext(r)),
            ),
            _ => return None,
        };
        (lo < hi).then_some((lo, hi))
    }

    /// Bayes-consistent support limits for a conflicting pair: the states in
    /// which `r_1` and `r_2` are both misreports on the equilibrium supports.
    pub fn bayes_interval(&self, r_1: f64, r_2: f64) -> Option<(f64, f64)> {
        let (a, b) = self.misreport_states(Sender::One, r_1)?;
        let (c, d) = self.misreport_states(Sender::Two, r_2)?;
        let (lo, hi) = (a.max(c), b.min(d));
        (lo < hi).then_some((lo, hi))
    }

    /// Classify a report pair and collect the states that can have produced it.
    pub fn structure(&self, r_1: f64, r_2: f64) -> BeliefStructure {
        let kind = |kind| BeliefStructure { kind, interval: None, points: Vec::new() };
        if r_1 == r_2 {
            return kind(if r_1 == 0.0 { BeliefKind::DoubleDeviation } else { BeliefKind::Matching });
        }
        if r_1 >= 0.0 && r_2 > 0.0 {
            return kind(BeliefKind::TrustSenderTwo);
        }
        if r_1 < 0.0 && r_2 <= 0.0 {
            return kind(BeliefKind::TrustSenderOne);
        }
        if r_1 < 0.0 {
            return kind(BeliefKind::LiteralMix);
        }
        let p = self.profile;
        let cfg = self.cfg();
        let width = cfg.settings.degenerate_width;
        let interval = self.bayes_interval(r_1, r_2).filter(|(lo, hi)| hi - lo > width);
        let mut points = Vec::new();
        // Sender 1 truthful, sender 2 misreporting.
        if p.cutoffs().contains(r_1) {
            let w = cfg.f(r_1) * p.atom(Sender::One, r_1) * p.density(Sender::Two, r_2, r_1);
            if w > 0.0 {
                points.push((r_1, w));
            }
        }
        // Sender 2 truthful, sender 1 misreporting.
        if p.cutoffs().contains(r_2) {
            let w = cfg.f(r_2) * p.atom(Sender::Two, r_2) * p.density(Sender::One, r_1, r_2);
            if w > 0.0 {
                points.push((r_2, w));
            }
        }
        if interval.is_some() || !points.is_empty() {
            return BeliefStructure { kind: BeliefKind::Bayes, interval, points };
        }
        let (lower, upper) = p.swing().domain();
        if r_1 > upper && r_2 < lower {
            kind(BeliefKind::LiteralMix)
        } else {
            kind(BeliefKind::SwingWinner)
        }
    }

    /// The continuous likelihood `f(θ) ψ_1(r_1, θ) ψ_2(r_2, θ)`.
    pub fn joint_density(&self, r_1: f64, r_2: f64, theta: f64) -> f64 {
        let p = self.profile;
        self.cfg().f(theta) * p.density(Sender::One, r_1, theta) * p.density(Sender::Two, r_2, theta)
    }

    /// The posterior for a report pair, with `U_dm` and the rule's action.
    pub fn posterior(&self, r_1: f64, r_2: f64) -> Result<Posterior> {
        let cfg = self.cfg();
        let action = self.decide(r_1, r_2);
        let st = self.structure(r_1, r_2);
        match st.kind {
            BeliefKind::Matching => Ok(Posterior::point(r_1, r_2, st.kind, r_1, cfg, action)),
            BeliefKind::DoubleDeviation => {
                let mut post = Posterior::point(r_1, r_2, st.kind, 0.0, cfg, action);
                post.u_dm_expected = 0.0;
                Ok(post)
            }
            BeliefKind::TrustSenderTwo => Ok(Posterior::point(r_1, r_2, st.kind, r_2, cfg, action)),
            BeliefKind::TrustSenderOne => Ok(Posterior::point(r_1, r_2, st.kind, r_1, cfg, action)),
            BeliefKind::SwingWinner => {
                let theta = if action.is_plus() { r_1 } else { r_2 };
                Ok(Posterior::point(r_1, r_2, st.kind, theta, cfg, action))
            }
            BeliefKind::LiteralMix => {
                let (a, b) = (r_1.min(r_2), r_1.max(r_2));
                Ok(Posterior {
                    r_1,
                    r_2,
                    kind: st.kind,
                    support_lo: a,
                    support_hi: b,
                    points: vec![(r_1, 0.5), (r_2, 0.5)],
                    continuous: None,
                    continuous_mass: 0.0,
                    u_dm_expected: 0.5 * (cfg.u_dm.eval(r_1) + cfg.u_dm.eval(r_2)),
                    action,
                })
            }
            BeliefKind::Bayes => self.bayes_posterior(r_1, r_2, st, action),
        }
    }

    fn bayes_posterior(&self, r_1: f64, r_2: f64, st: BeliefStructure, action: Action) -> Result<Posterior> {
        let cfg = self.cfg();
        let (cont_z, cont_u) = match st.interval {
            Some((lo, hi)) => {
                // The joint density can jump inside the interval (a support edge
                // of one sender moving with θ), where the recursion exhausts its
                // depth with a negligible error estimate; accept such results
                // when the estimate is small against the posterior mass.
                let quad = cfg.settings.quad_relative();
                let z = quad.integrate(|t| self.joint_density(r_1, r_2, t), lo, hi);
                let u = quad.integrate(|t| cfg.u_dm.eval(t) * self.joint_density(r_1, r_2, t), lo, hi);
                let limit = POSTERIOR_REL_ERR * z.value.abs();
                for r in [z, u] {
                    if !r.converged && !(r.error <= limit * cfg.payoff_scale().max(1.0)) {
                        return Err(SigError::QuadratureTolerance { lo, hi, estimate: r.error });
                    }
                }
                (z.value, u.value)
            }
            None => (0.0, 0.0),
        };
        let point_z: f64 = st.points.iter().map(|p| p.1).sum();
        let z = cont_z + point_z;
        let u = (cont_u + st.points.iter().map(|&(t, w)| w * cfg.u_dm.eval(t)).sum::<f64>()) / z;
        let points: Vec<(f64, f64)> = st.points.iter().map(|&(t, w)| (t, w / z)).collect();
        let lo = st.interval.map(|i| i.0).into_iter().chain(points.iter().map(|p| p.0)).fold(f64::INFINITY, f64::min);
        let hi = st.interval.map(|i| i.1).into_iter().chain(points.iter().map(|p| p.0)).fold(f64::NEG_INFINITY, f64::max);
        Ok(Posterior {
            r_1,
            r_2,
            kind: BeliefKind::Bayes,
            support_lo: lo,
            support_hi: hi,
            points,
            continuous: st.interval,
            continuous_mass: cont_z / z,
            u_dm_expected: u,
            action,
        })
    }

    /// `U_dm(r_1, r_2)`.
    pub fn u_dm(&self, r_1: f64, r_2: f64) -> Result<f64> {
        Ok(self.posterior(r_1, r_2)?.u_dm_expected)
    }

    /// The action from the sign of the posterior expected payoff.
    pub fn decide_bayes(&self, r_1: f64, r_2: f64) -> Result<Action> {
        Ok(Action::from_payoff(self.u_dm(r_1, r_2)?))
    }

    /// Posterior CDF at θ.
    pub fn posterior_cdf(&self, post: &Posterior, theta: f64) -> Result<f64> {
        let atoms: f64 = post.points.iter().filter(|p| p.0 <= theta).map(|p| p.1).sum();
        let cont = match post.continuous {
            Some((lo, hi)) if theta > lo && post.continuous_mass > 0.0 => {
                let quad = self.cfg().settings.quad_relative();
                let f = |t: f64| self.joint_density(post.r_1, post.r_2, t);
                let total = quad.integrate_checked(f, lo, hi)?;
                let part = quad.integrate_checked(f, lo, theta.min(hi))?;
                post.continuous_mass * part / total
            }
            _ => 0.0,
        };
        Ok((atoms + cont).min(1.0))
    }

    /// Posterior quantiles by bisection on the CDF.
    pub fn posterior_quantiles(&self, post: &Posterior, probs: &[f64]) -> Result<Vec<f64>> {
        probs
            .iter()
            .map(|&q| {
                let (mut a, mut b) = (post.support_lo, post.support_hi);
                if self.posterior_cdf(post, a)? >= q {
                    return Ok(a);
                }
                while b - a > 1e-10 {
                    let m = 0.5 * (a + b);
                    if self.posterior_cdf(post, m)? >= q {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                Ok(b)
            })
            .collect()
    }

    /// The vanishing-noise limit of beliefs. On-path pairs keep their Bayes
    /// posterior; otherwise the observation is attributed to a misread of
    /// exactly one sender, and the other sender's strategy is inverted.
    pub fn limit_beliefs_eps(&self, r_1: f64, r_2: f64, noise: &NoiseModel<'_>) -> Result<Posterior> {
        let cfg = self.cfg();
        let p = self.profile;
        let st = self.structure(r_1, r_2);
        let on_path = matches!(st.kind, BeliefKind::Matching | BeliefKind::Bayes);
        if on_path || st.kind == BeliefKind::DoubleDeviation {
            let mut post = self.posterior(r_1, r_2)?;
            if !on_path {
                post.u_dm_expected = 0.0;
            }
            return Ok(post);
        }
        // Component A: r_1 was misread, r_2 is an equilibrium report.
        // Component B: r_2 was misread, r_1 is an equilibrium report.
        let quad = cfg.settings.quad_relative();
        let mut weighted_points: Vec<(f64, f64)> = Vec::new();
        let mut cont_z = 0.0;
        let mut cont_u = 0.0;
        let mut cont_lo = f64::INFINITY;
        let mut cont_hi = f64::NEG_INFINITY;
        for (sender, r, weight) in [
            (Sender::Two, r_2, noise.eps_ratio * (noise.g_1)(r_1)),
            (Sender::One, r_1, (noise.g_2)(r_2)),
        ] {
            if weight <= 0.0 {
                continue;
            }
            if (cfg.theta_min..=cfg.theta_max).contains(&r) {
                let w = weight * cfg.f(r) * p.atom(sender, r);
                if w > 0.0 {
                    weighted_points.push((r, w));
                }
            }
            if let Some((lo, hi)) = self.misreport_states(sender, r) {
                let dens = |t: f64| cfg.f(t) * p.density(sender, r, t);
                let z = quad.integrate_checked(dens, lo, hi)?;
                if z > 0.0 {
                    cont_z += weight * z;
                    cont_u += weight * quad.integrate_checked(|t| cfg.u_dm.eval(t) * dens(t), lo, hi)?;
                    cont_lo = cont_lo.min(lo);
                    cont_hi = cont_hi.max(hi);
                }
            }
        }
        let z = cont_z + weighted_points.iter().map(|p| p.1).sum::<f64>();
        if !(z > 0.0) {
            return self.posterior(r_1, r_2);
        }
        let u = (cont_u + weighted_points.iter().map(|&(t, w)| w * cfg.u_dm.eval(t)).sum::<f64>()) / z;
        let points: Vec<(f64, f64)> = weighted_points.iter().map(|&(t, w)| (t, w / z)).collect();
        let lo = points.iter().map(|p| p.0).fold(cont_lo, f64::min);
        let hi = points.iter().map(|p| p.0).fold(cont_hi, f64::max);
        Ok(Posterior {
            r_1,
            r_2,
            kind: st.kind,
            support_lo: lo,
            support_hi: hi,
            points,
            continuous: (cont_z > 0.0).then_some((cont_lo, cont_hi)),
            continuous_mass: cont_z / z,
            u_dm_expected: u,
            action: Action::from_payoff(u),
        })
    }

    /// Compare the swing rule with the sign of `U_dm` on an `n × n` grid of
    /// conflicting on-path pairs `(0, r_1(0)] × [r_2(0), 0)`, skipping pairs
    /// with `|r_1 − s(r_2)| ≤ band`, and check that `U_dm` is nondecreasing in
    /// each report along the grid.
    pub fn consistency_check(&self, n: usize, band: f64) -> Result<ConsistencyReport> {
        use rayon::prelude::*;
        let (lower, upper) = self.profile.swing().domain();
        let r1s: Vec<f64> = (1..=n).map(|i| upper * i as f64 / (n as f64 + 1.0)).collect();
        let r2s: Vec<f64> = (1..=n).map(|j| lower * j as f64 / (n as f64 + 1.0)).collect();
        let rows: Vec<Vec<f64>> = r1s
            .par_iter()
            .map(|&a| r2s.iter().map(|&b| self.u_dm(a, b)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        let s = self.profile.swing();
        let mut report = ConsistencyReport {
            pairs: n * n,
            near_locus: 0,
            disagreements: 0,
            worst_disagreement: 0.0,
            example: None,
            fosd_violations: 0,
        };
        for (i, &a) in r1s.iter().enumerate() {
            for (j, &b) in r2s.iter().enumerate() {
                let u = rows[i][j];
                if (a - s.eval_ext(b)).abs() <= band {
                    report.near_locus += 1;
                    continue;
                }
                if Action::from_payoff(u) != self.decide(a, b) {
                    report.disagreements += 1;
                    if u.abs() > report.worst_disagreement {
                        report.worst_disagreement = u.abs();
                        report.example = Some((a, b, u));
                    }
                }
            }
        }
        // r_1 increases with i; r_2 decreases with j (so U must not increase in j).
        let noise = 1e-9 * self.cfg().payoff_scale();
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n && rows[i + 1][j] < rows[i][j] - noise {
                    report.fosd_violations += 1;
                }
                if j + 1 < n && rows[i][j + 1] > rows[i][j] + noise {
                    report.fosd_violations += 1;
                }
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_config, RawSpec};
    use approx::assert_abs_diff_eq;
    use std::sync::OnceLock;

    fn symq() -> &'static StrategyProfile {
        static P: OnceLock<StrategyProfile> = OnceLock::new();
        P.get_or_init(|| StrategyProfile::solve(&build_config(&RawSpec::symmetric_quadratic()).unwrap()).unwrap())
    }

    #[test]
    fn decision_examples() {
        let e = BeliefEngine::new(symq());
        assert_eq!(e.decide(0.4, -0.3), Action::Plus);
        assert_eq!(e.decide(0.2, -0.3), Action::Minus);
        assert_eq!(e.decide(0.0, 0.0), Action::Plus);
        assert_eq!(e.decide(0.3, -0.3), Action::Plus);
        assert_eq!(e.decide(0.1, 0.2), Action::Plus);
        assert_eq!(e.decide(-0.1, -0.2), Action::Minus);
    }

    #[test]
    fn matching_and_trust_beliefs() {
        let e = BeliefEngine::new(symq());
        let p = e.posterior(0.4, 0.4).unwrap();
        assert_eq!(p.kind, BeliefKind::Matching);
        assert!(p.is_degenerate(1e-9) && p.support_lo == 0.4 && p.action == Action::Plus);
        let p = e.posterior(0.3, 0.1).unwrap();
        assert_eq!(p.kind, BeliefKind::TrustSenderTwo);
        assert_eq!((p.support_lo, p.action), (0.1, Action::Plus));
        let p = e.posterior(0.0, 0.0).unwrap();
        assert_eq!(p.kind, BeliefKind::DoubleDeviation);
        assert_eq!((p.u_dm_expected, p.action), (0.0, Action::Plus));
    }

    #[test]
    fn swing_pair_is_indifferent() {
        let e = BeliefEngine::new(symq());
        let p = e.posterior(0.3, -0.3).unwrap();
        assert_eq!(p.kind, BeliefKind::Bayes);
        assert_abs_diff_eq!(p.u_dm_expected, 0.0, epsilon = 1e-4);
        assert_eq!(p.action, Action::Plus);
        let total: f64 = p.points.iter().map(|q| q.1).sum::<f64>() + p.continuous_mass;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // the continuous part lives on the interval from the support lemma
        let cfg = symq().cfg();
        let (lo, hi) = p.continuous.unwrap();
        let expect_lo = (-0.3f64).max(cfg.inv_upper_reach_1(0.3).unwrap()).max(symq().cutoffs().theta_1);
        let expect_hi = 0.3f64.min(cfg.inv_lower_reach_2(-0.3).unwrap()).min(symq().cutoffs().theta_2);
        // θ + √(θ + ½) = 0.3
        assert_abs_diff_eq!(expect_lo, ((4.2f64.sqrt() - 1.0) / 2.0).powi(2) - 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(lo, expect_lo, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, expect_hi, epsilon = 1e-9);
        let q = e.posterior_quantiles(&p, &[0.5]).unwrap();
        assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn off_path_conflict_follows_swing_winner() {
        let e = BeliefEngine::new(symq());
        // every conflicting pair inside the conflict region is on path
        assert_eq!(e.structure(0.7, -0.01).kind, BeliefKind::Bayes);
        assert_eq!(e.structure(0.7, -0.7).kind, BeliefKind::Bayes);
        // r_1 beyond the conflict region: no state delivers it against r_2
        let p = e.posterior(0.75, -0.3).unwrap();
        assert_eq!(p.kind, BeliefKind::SwingWinner);
        assert_eq!(p.action, Action::Plus);
        assert!(p.u_dm_expected >= 0.0);
        let p = e.posterior(0.9, -0.9).unwrap();
        assert_eq!(p.kind, BeliefKind::LiteralMix);
        assert_eq!(p.action, Action::Plus);
    }

    #[test]
    fn limit_beliefs() {
        let e = BeliefEngine::new(symq());
        let g_1 = |t: f64| if t < 0.0 { 1e-12 } else { 1.0 };
        let g_2 = |t: f64| if t > 0.0 { 1e-12 } else { 1.0 };
        let noise = NoiseModel { g_1: &g_1, g_2: &g_2, eps_ratio: 1.0 };
        let p = e.limit_beliefs_eps(0.1, 0.2, &noise).unwrap();
        let at_02: f64 = p.points.iter().filter(|q| q.0 == 0.2).map(|q| q.1).sum();
        assert!(at_02 > 1.0 - 1e-9, "{p:?}");
        assert_eq!(p.action, Action::Plus);
        let on = e.limit_beliefs_eps(0.3, -0.3, &noise).unwrap();
        assert_eq!(on, e.posterior(0.3, -0.3).unwrap());
        let dd = e.limit_beliefs_eps(0.0, 0.0, &noise).unwrap();
        assert_eq!(dd.kind, BeliefKind::DoubleDeviation);
        assert_eq!(dd.u_dm_expected, 0.0);
    }
}

//! Benchmark outcomes and the fully revealing pure-strategy equilibrium.
//!
//! The receiver-efficient witness has sender 1 pool on `r_1(0)` over
//! `[0, r_1(0)]` and report truthfully elsewhere, while sender 2 always tells
//! the truth. Under its discontinuous supporting beliefs nobody deviates; under
//! unprejudiced beliefs (trust the separating sender) sender 1 profits from
//! telling the truth inside the pooling interval.

use rayon::prelude::*;
use serde::Serialize;

use crate::belief::Action;
use crate::error::{Result, SigError};
use crate::model::{GameConfig, RawSpec, Sender, UtilitySpec};

/// A pure reporting rule `θ ↦ ρ(θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PureRule {
    Identity,
    /// `ρ(θ) = report` on `[lo, hi]`, truthful elsewhere.
    Pool { lo: f64, hi: f64, report: f64 },
}

impl PureRule {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            PureRule::Identity => theta,
            PureRule::Pool { lo, hi, report } if theta >= lo && theta <= hi => report,
            PureRule::Pool { .. } => theta,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, PureRule::Identity)
    }

    /// `(θ, ρ(θ))` on an equispaced grid of `n` states over `[lo, hi]`.
    pub fn tabulate(&self, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (t, self.eval(t))
            })
            .collect()
    }
}

/// How the decision maker reads report pairs that no state produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PureBeliefPolicy {
    /// The discontinuous beliefs that support the pooling witness: ⊕ iff
    /// `r_1 ≥ r_1(0)`.
    Supporting,
    /// Unprejudiced: the deviation is attributed to the pooling sender, so the
    /// state is the separating sender's report.
    TrustSeparating,
    /// Unprejudiced, with prior-weighted mass on both reports as candidate
    /// states (each consistent with one sender telling the truth).
    SplitCandidates,
}

/// A pure-strategy profile with an off-path belief policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PureProfile {
    pub reporting_rule_1: PureRule,
    pub reporting_rule_2: PureRule,
    pub belief_policy: PureBeliefPolicy,
}

impl PureProfile {
    /// Both senders truthful.
    pub fn truthful(policy: PureBeliefPolicy) -> Self {
        PureProfile { reporting_rule_1: PureRule::Identity, reporting_rule_2: PureRule::Identity, belief_policy: policy }
    }

    pub fn with_policy(&self, policy: PureBeliefPolicy) -> Self {
        PureProfile { belief_policy: policy, ..*self }
    }

    pub fn rule(&self, sender: Sender) -> PureRule {
        match sender {
            Sender::One => self.reporting_rule_1,
            Sender::Two => self.reporting_rule_2,
        }
    }

    /// The report pair sent in state θ.
    pub fn reports(&self, theta: f64) -> (f64, f64) {
        (self.reporting_rule_1.eval(theta), self.reporting_rule_2.eval(theta))
    }

    /// The state producing `(r_1, r_2)` on path, if any. One sender separates,
    /// so the candidate state is that sender's report.
    pub fn on_path_state(&self, r_1: f64, r_2: f64) -> Option<f64> {
        let candidate = if self.reporting_rule_2.is_identity() { r_2 } else { r_1 };
        (self.reports(candidate) == (r_1, r_2)).then_some(candidate)
    }

    /// The decision maker's action at a report pair.
    pub fn decide(&self, r_1: f64, r_2: f64, cfg: &GameConfig) -> Action {
        if let Some(theta) = self.on_path_state(r_1, r_2) {
            return Action::from_payoff(cfg.u_dm.eval(theta));
        }
        match self.belief_policy {
            PureBeliefPolicy::Supporting => {
                let anchor = match self.reporting_rule_1 {
                    PureRule::Pool { report, .. } => report,
                    PureRule::Identity => 0.0,
                };
                if r_1 >= anchor {
                    Action::Plus
                } else {
                    Action::Minus
                }
            }
            PureBeliefPolicy::TrustSeparating => {
                let theta = if self.reporting_rule_2.is_identity() { r_2 } else { r_1 };
                Action::from_payoff(cfg.u_dm.eval(theta))
            }
            PureBeliefPolicy::SplitCandidates => {
                let weight = |x: f64| {
                    if x >= cfg.theta_min && x <= cfg.theta_max {
                        cfg.f(x)
                    } else {
                        0.0
                    }
                };
                Action::from_payoff(weight(r_1) * cfg.u_dm.eval(r_1) + weight(r_2) * cfg.u_dm.eval(r_2))
            }
        }
    }

    /// `w_j(r_j, β, θ)` when sender j reports `r` and the other follows its rule.
    pub fn payoff(&self, sender: Sender, r: f64, theta: f64, cfg: &GameConfig) -> f64 {
        let (r_1, r_2) = match sender {
            Sender::One => (r, self.reporting_rule_2.eval(theta)),
            Sender::Two => (self.reporting_rule_1.eval(theta), r),
        };
        let win = if self.decide(r_1, r_2, cfg).is_plus() { cfg.u(sender, theta) } else { 0.0 };
        win - cfg.misreport_cost(sender, r, theta)
    }

    /// Whether the on-path action is the full-information one in state θ.
    pub fn is_receiver_efficient_at(&self, theta: f64, cfg: &GameConfig) -> bool {
        let (r_1, r_2) = self.reports(theta);
        self.decide(r_1, r_2, cfg) == Action::from_payoff(cfg.u_dm.eval(theta))
    }
}

/// The SYMQ variant with `u_2 = θ − 0.9`, whose threshold τ_2 = 0.9 exceeds
/// `r_1(0) = √0.5` so the pooling witness exists.
pub fn fre_example_spec() -> RawSpec {
    let mut raw = RawSpec::symmetric_quadratic();
    raw.utilities.sender_2 = UtilitySpec::Affine { slope: 1.0, intercept: -0.9 };
    raw
}

/// Sender 1 pools on `r_1(0)` over `[0, r_1(0)]`; sender 2 is truthful; the
/// supporting discontinuous beliefs handle off-path pairs.
pub fn build_fre_profile(cfg: &GameConfig) -> Result<PureProfile> {
    let reach = cfg.upper_reach_1(0.0);
    if !(reach < cfg.tau_2) {
        return Err(SigError::FreAssumption { reach, tau_2: cfg.tau_2 });
    }
    Ok(PureProfile {
        reporting_rule_1: PureRule::Pool { lo: 0.0, hi: reach, report: reach },
        reporting_rule_2: PureRule::Identity,
        belief_policy: PureBeliefPolicy::Supporting,
    })
}

/// Best grid deviation for one sender in one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PureDeviation {
    pub theta: f64,
    pub sender: Sender,
    pub equilibrium_payoff: f64,
    pub best_report: f64,
    pub gain: f64,
}

/// Outcome of [`check_equilibrium`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub policy: PureBeliefPolicy,
    pub max_gain_1: f64,
    pub max_gain_2: f64,
    pub worst: Option<PureDeviation>,
    pub states: Vec<PureDeviation>,
}

impl DeviationReport {
    pub fn max_gain(&self) -> f64 {
        self.max_gain_1.max(self.max_gain_2)
    }
}

/// The default deviation grid: `n` equispaced reports on the conflict region.
pub fn default_report_grid(cfg: &GameConfig, n: usize) -> Vec<f64> {
    let (lower, upper) = cfg.conflict_region();
    let n = n.max(2);
    (0..n).map(|i| lower + (upper - lower) * i as f64 / (n - 1) as f64).collect()
}

/// Equispaced state grid over Θ.
pub fn state_grid(cfg: &GameConfig, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| cfg.theta_min + (cfg.theta_max - cfg.theta_min) * i as f64 / (n - 1) as f64).collect()
}

fn best_deviation(profile: &PureProfile, cfg: &GameConfig, sender: Sender, theta: f64, grid: &[f64]) -> PureDeviation {
    let on_path = profile.rule(sender).eval(theta);
    let equilibrium_payoff = profile.payoff(sender, on_path, theta, cfg);
    let (mut best, mut best_report) = (equilibrium_payoff, on_path);
    for &r in grid.iter().chain([theta].iter()) {
        let w = profile.payoff(sender, r, theta, cfg);
        if w > best {
            best = w;
            best_report = r;
        }
    }
    PureDeviation { theta, sender, equilibrium_payoff, best_report, gain: best - equilibrium_payoff }
}

/// For every state and sender, the largest gain from a grid report (plus the
/// truth) over the equilibrium payoff.
pub fn check_equilibrium(profile: &PureProfile, cfg: &GameConfig, states: &[f64], report_grid: &[f64]) -> DeviationReport {
    let jobs: Vec<(f64, Sender)> = states.iter().flat_map(|&t| [(t, Sender::One), (t, Sender::Two)]).collect();
    let devs: Vec<PureDeviation> =
        jobs.par_iter().map(|&(t, j)| best_deviation(profile, cfg, j, t, report_grid)).collect();
    let max_for = |j: Sender| devs.iter().filter(|d| d.sender == j).map(|d| d.gain).fold(0.0, f64::max);
    let worst = devs.iter().copied().max_by(|a, b| a.gain.total_cmp(&b.gain));
    DeviationReport {
        policy: profile.belief_policy,
        max_gain_1: max_for(Sender::One),
        max_gain_2: max_for(Sender::Two),
        worst,
        states: devs,
    }
}

/// Sender 1's gain from reporting `ε` instead of the truth at θ = −ε under the
/// truthful profile: `u_1(−ε) − k_1 C_1(ε, −ε)` when the deviation swings the
/// decision.
pub fn truthful_deviation_gain(cfg: &GameConfig, eps: f64) -> f64 {
    let profile = PureProfile::truthful(PureBeliefPolicy::SplitCandidates);
    let theta = -eps;
    profile.payoff(Sender::One, eps, theta, cfg) - profile.payoff(Sender::One, theta, theta, cfg)
}

/// Welfare benchmarks that need no equilibrium computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkWelfares {
    /// Full information `∫_0^{θ_max} f·u_dm`.
    pub full_information: f64,
    /// Perfectly aligned senders reveal the state: equals full information.
    pub aligned: f64,
    /// Verifiable reports: equals full information.
    pub verifiable: f64,
    /// Cheap-talk babbling: prior-optimal fixed action.
    pub babbling: f64,
    /// Cheap-talk partition `{θ ≤ τ_1, τ_1 < θ < τ_2, θ ≥ τ_2}` with the best
    /// fixed action in each cell (our construction).
    pub partition: f64,
}

fn integrate_f_udm(cfg: &GameConfig, a: f64, b: f64) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    cfg.settings.quad().integrate_checked(|t| cfg.f(t) * cfg.u_dm.eval(t), a, b)
}

pub fn benchmark_welfares(cfg: &GameConfig) -> Result<BenchmarkWelfares> {
    let full_information = integrate_f_udm(cfg, 0.0, cfg.theta_max)?;
    let babbling = integrate_f_udm(cfg, cfg.theta_min, cfg.theta_max)?.max(0.0);
    let cells = [(cfg.theta_min, cfg.tau_1), (cfg.tau_1, cfg.tau_2), (cfg.tau_2, cfg.theta_max)];
    let mut partition = 0.0;
    for (a, b) in cells {
        partition += integrate_f_udm(cfg, a.max(cfg.theta_min), b.min(cfg.theta_max))?.max(0.0);
    }
    Ok(BenchmarkWelfares { full_information, aligned: full_information, verifiable: full_information, babbling, partition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_config;
    use approx::assert_abs_diff_eq;

    fn fre_cfg() -> GameConfig {
        build_config(&fre_example_spec()).unwrap()
    }

    #[test]
    fn fre_assumption_is_checked() {
        let symq = build_config(&RawSpec::symmetric_quadratic()).unwrap();
        assert!(matches!(build_fre_profile(&symq), Err(SigError::FreAssumption { .. })));
        let cfg = fre_cfg();
        let p = build_fre_profile(&cfg).unwrap();
        assert_abs_diff_eq!(cfg.tau_2, 0.9, epsilon = 1e-12);
        assert_eq!(p.reports(0.3), (0.5f64.sqrt(), 0.3));
        assert_eq!(p.reports(-0.3), (-0.3, -0.3));
    }

    #[test]
    fn fre_is_receiver_efficient_and_supported() {
        let cfg = fre_cfg();
        let p = build_fre_profile(&cfg).unwrap();
        for t in state_grid(&cfg, 1000) {
            assert!(p.is_receiver_efficient_at(t, &cfg), "θ = {t}");
        }
        let rep = check_equilibrium(&p, &cfg, &state_grid(&cfg, 129), &default_report_grid(&cfg, 512));
        assert!(rep.max_gain() <= 1e-6, "{:?}", rep.worst);
    }

    #[test]
    fn unprejudiced_beliefs_break_fre() {
        let cfg = fre_cfg();
        let p = build_fre_profile(&cfg).unwrap().with_policy(PureBeliefPolicy::TrustSeparating);
        let reach = 0.5f64.sqrt();
        let t = reach / 2.0;
        let rep = check_equilibrium(&p, &cfg, &[t], &default_report_grid(&cfg, 512));
        // pure cost saving: (r_1(0) − r_1(0)/2)² = 1/8
        assert_abs_diff_eq!(rep.max_gain_1, 0.125, epsilon = 1e-12);
        assert_eq!(rep.states[0].best_report, t);
    }

    #[test]
    fn truthful_profile_invites_deviation() {
        let cfg = build_config(&RawSpec::symmetric_quadratic()).unwrap();
        let eps = 0.05;
        // u_1(−ε) − (2ε)²
        assert_abs_diff_eq!(truthful_deviation_gain(&cfg, eps), 0.45 - 0.01, epsilon = 1e-12);
    }

    #[test]
    fn symq_welfares() {
        let cfg = build_config(&RawSpec::symmetric_quadratic()).unwrap();
        let w = benchmark_welfares(&cfg).unwrap();
        assert_abs_diff_eq!(w.full_information, 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(w.babbling, 0.0, epsilon = 1e-10);
        // ∫_{1/2}^1 θ/2 dθ
        assert_abs_diff_eq!(w.partition, 0.1875, epsilon = 1e-10);
        assert!(w.partition <= w.full_information);
    }
}

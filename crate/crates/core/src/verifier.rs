//! Brute-force ε-equilibrium certification of a strategy profile.
//!
//! For every state on a grid and each sender, the expected payoff
//! `W_j(r, θ) = u_j(θ)·P(⊕ | r_j = r, θ) − k_j C_j(r, θ)` is evaluated over a
//! grid of reports. The win probability treats the decision rule as a black
//! box: the opponent's truth atom is checked directly, and the continuous part
//! integrates the opponent's misreporting density with a fixed composite
//! Simpson rule from the threshold where the rule flips (found by bisection),
//! split at the points where the density has kinks.
//! Because that rule has a known order, the certified gains shrink at a known
//! rate when the grids are refined.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{Action, BeliefEngine, ConsistencyReport};
use crate::error::Result;
use crate::model::Sender;
use crate::numerics::graded_simpson;
use crate::strategy::StrategyProfile;

/// Grids and thresholds of a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierSettings {
    /// States checked, uniformly over Θ.
    pub state_grid_n: usize,
    /// Deviation reports, uniformly over the conflict region (plus θ itself).
    pub report_grid_n: usize,
    /// Simpson panels for the opponent's continuous part.
    pub panels: usize,
    /// Side of the conflicting-pair grid for the decision-maker check (0 skips it).
    pub pair_grid_n: usize,
    /// Certification threshold as a fraction of the payoff scale.
    pub tolerance_factor: f64,
    /// Exclusion band around the swing locus for the decision-maker check.
    pub locus_band: f64,
}

impl Default for VerifierSettings {
    fn default() -> Self {
        VerifierSettings {
            state_grid_n: 65,
            report_grid_n: 512,
            panels: 16,
            pair_grid_n: 50,
            tolerance_factor: 1e-3,
            locus_band: 1e-4,
        }
    }
}

impl VerifierSettings {
    /// Every grid doubled.
    pub fn refined(&self) -> Self {
        VerifierSettings {
            state_grid_n: 2 * self.state_grid_n - 1,
            report_grid_n: 2 * self.report_grid_n,
            panels: 2 * self.panels,
            ..*self
        }
    }
}

/// Result for one sender in one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateCheck {
    pub theta: f64,
    pub sender: Sender,
    /// Equilibrium (truth-telling) payoff.
    pub payoff: f64,
    /// `max_r W(r) − W(θ)` over the report grid (≥ 0 since θ is on the grid).
    pub max_gain: f64,
    /// The maximising report.
    pub best_report: f64,
    /// `max − min` of `W` over θ and the grid reports inside the support.
    pub spread: f64,
    pub support_points: usize,
}

/// A full verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub settings: VerifierSettings,
    pub payoff_scale: f64,
    /// `tolerance_factor × payoff_scale`.
    pub tolerance: f64,
    pub max_gain: f64,
    pub max_spread: f64,
    /// Largest gain among states outside the truthful cutoffs.
    pub max_gain_outside_cutoffs: f64,
    /// Worst (largest) combined violation `max(gain, spread)`.
    pub violation: f64,
    pub worst_state: Option<StateCheck>,
    pub states: Vec<StateCheck>,
    /// Swing rule versus sign of the posterior payoff (not part of the pass flag).
    pub dm_consistency: Option<ConsistencyReport>,
    /// True when both sender thresholds are met.
    pub passed: bool,
}

/// Brute-force payoff evaluation for a profile.
pub struct Verifier<'a> {
    profile: &'a StrategyProfile,
    engine: BeliefEngine<'a>,
    settings: VerifierSettings,
}

impl<'a> Verifier<'a> {
    pub fn new(profile: &'a StrategyProfile, settings: VerifierSettings) -> Self {
        Verifier { profile, engine: BeliefEngine::new(profile), settings }
    }

    fn action(&self, sender: Sender, own: f64, other: f64) -> Action {
        match sender {
            Sender::One => self.engine.decide(own, other),
            Sender::Two => self.engine.decide(other, own),
        }
    }

    /// `P(⊕ | r_j = r, θ)` under the opponent's strategy.
    pub fn plus_probability(&self, sender: Sender, r: f64, theta: f64) -> f64 {
        let p = self.profile;
        let opp = sender.other();
        let st = p.state(opp, theta);
        let mut prob = if self.action(sender, r, theta).is_plus() { st.atom_mass } else { 0.0 };
        if let Some((lo, hi)) = st.support {
            // The rule is monotone in the opponent's report: find where it flips.
            let plus = |x: f64| self.action(sender, r, x).is_plus();
            let (a, b) = match (plus(lo), plus(hi)) {
                (true, true) => (lo, hi),
                (false, false) => (hi, hi),
                (false, true) => (threshold(&plus, lo, hi, false), hi),
                (true, false) => (lo, threshold(&plus, lo, hi, true)),
            };
            if b > a {
                // Integrate piecewise between the density's kinks.
                let smooth = p.cfg().settings.smoothstep();
                let mut cuts = vec![a];
                cuts.extend(p.density_breakpoints(opp, theta).into_iter().filter(|&x| x > a && x < b));
                cuts.push(b);
                prob += cuts
                    .windows(2)
                    .map(|w| graded_simpson(|x| p.density(opp, x, theta), w[0], w[1], self.settings.panels, &smooth))
                    .sum::<f64>();
            }
        }
        prob
    }

    /// `W_j(r, θ)`.
    pub fn sender_payoff(&self, sender: Sender, r: f64, theta: f64) -> f64 {
        let cfg = self.profile.cfg();
        cfg.u(sender, theta) * self.plus_probability(sender, r, theta) - cfg.misreport_cost(sender, r, theta)
    }

    fn report_grid(&self) -> Vec<f64> {
        let (lower, upper) = self.profile.cfg().conflict_region();
        let n = self.settings.report_grid_n.max(2);
        (0..n).map(|i| lower + (upper - lower) * i as f64 / (n - 1) as f64).collect()
    }

    fn state_grid(&self) -> Vec<f64> {
        let cfg = self.profile.cfg();
        let n = self.settings.state_grid_n.max(2);
        (0..n)
            .map(|i| cfg.theta_min + (cfg.theta_max - cfg.theta_min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Check one sender in one state.
    pub fn check_state(&self, sender: Sender, theta: f64, grid: &[f64]) -> StateCheck {
        let w_truth = self.sender_payoff(sender, theta, theta);
        let support = self.profile.state(sender, theta).support;
        let (mut best, mut best_report) = (w_truth, theta);
        let (mut lo_w, mut hi_w) = (w_truth, w_truth);
        let mut support_points = 1;
        for &r in grid {
            let w = self.sender_payoff(sender, r, theta);
            if w > best {
                best = w;
                best_report = r;
            }
            if let Some((a, b)) = support {
                // Interior points only: at the endpoints the opponent's atom can
                // sit exactly on the swing locus (a measure-zero tie).
                if r > a && r < b {
                    lo_w = lo_w.min(w);
                    hi_w = hi_w.max(w);
                    support_points += 1;
                }
            }
        }
        StateCheck {
            theta,
            sender,
            payoff: w_truth,
            max_gain: best - w_truth,
            best_report,
            spread: hi_w - lo_w,
            support_points,
        }
    }

    /// Run the full certification.
    pub fn run(&self) -> Result<VerificationReport> {
        let grid = self.report_grid();
        let states = self.state_grid();
        let jobs: Vec<(f64, Sender)> =
            states.iter().flat_map(|&t| [(t, Sender::One), (t, Sender::Two)]).collect();
        let checks: Vec<StateCheck> = jobs.par_iter().map(|&(t, j)| self.check_state(j, t, &grid)).collect();
        let cfg = self.profile.cfg();
        let scale = cfg.payoff_scale();
        let tolerance = self.settings.tolerance_factor * scale;
        let cutoffs = self.profile.cutoffs();
        let max_gain = checks.iter().map(|c| c.max_gain).fold(0.0, f64::max);
        let max_spread = checks.iter().map(|c| c.spread).fold(0.0, f64::max);
        let max_gain_outside_cutoffs = checks
            .iter()
            .filter(|c| !cutoffs.contains(c.theta))
            .map(|c| c.max_gain)
            .fold(0.0, f64::max);
        let worst_state = checks
            .iter()
            .copied()
            .max_by(|a, b| a.max_gain.max(a.spread).total_cmp(&b.max_gain.max(b.spread)));
        let dm_consistency = if self.settings.pair_grid_n > 0 {
            Some(self.engine.consistency_check(self.settings.pair_grid_n, self.settings.locus_band)?)
        } else {
            None
        };
        let violation = max_gain.max(max_spread);
        Ok(VerificationReport {
            settings: self.settings,
            payoff_scale: scale,
            tolerance,
            max_gain,
            max_spread,
            max_gain_outside_cutoffs,
            violation,
            worst_state,
            states: checks,
            dm_consistency,
            passed: violation.is_finite() && violation <= tolerance,
        })
    }
}

/// Boundary of a monotone predicate on `[lo, hi]`; `true_at_lo` says which end
/// satisfies it.
fn threshold(pred: &impl Fn(f64) -> bool, lo: f64, hi: f64, true_at_lo: bool) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m) == true_at_lo {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Convenience: verify a profile with the given settings.
pub fn verify_direct_equilibrium(profile: &StrategyProfile, settings: VerifierSettings) -> Result<VerificationReport> {
    Verifier::new(profile, settings).run()
}

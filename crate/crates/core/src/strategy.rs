//! The direct-equilibrium reporting strategies.
//!
//! In a state inside the truthful cutoffs each sender tells the truth with
//! probability `α_j(θ)` and otherwise misreports according to the density
//!
//! ```text
//!   ψ_j(r, θ) = k_i / (−u_i(θ)) · d C_i(s(r), θ) / dr,     i ≠ j,
//! ```
//!
//! on a convex support interval. Outside the cutoffs both senders are
//! truthful. Everything except the density is available in closed form given
//! the swing function: the continuous CDF is
//! `Ψ_j(r) = k_i/(−u_i)·[C_i(s(r),θ) − C_i(s(lo),θ)]`, which also inverts
//! exactly through the involution `s(s(x)) = x`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{GameConfig, Sender};
use crate::swing::{build_swing_function, compute_cutoffs, SwingFunction, TruthfulCutoffs};

/// A deliberate corruption of the equilibrium, used to test that the verifier
/// notices deviations from the true profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    /// Truth atoms are multiplied by this factor (and clipped to `[0, 1]`); the
    /// continuous part is rescaled to keep total probability one.
    pub atom_scale: f64,
    /// The far end of each continuous support is moved so the support width is
    /// multiplied by this factor; the density is stretched accordingly.
    pub support_scale: f64,
    /// Added to the swing report used by the decision maker's rule only.
    pub swing_shift: f64,
}

impl Default for Mutation {
    fn default() -> Self {
        Mutation { atom_scale: 1.0, support_scale: 1.0, swing_shift: 0.0 }
    }
}

impl Mutation {
    pub fn is_identity(&self) -> bool {
        *self == Mutation::default()
    }
}

/// One sender's mixed strategy in one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateStrategy {
    pub sender: Sender,
    pub theta: f64,
    /// Probability of reporting exactly θ.
    pub atom_mass: f64,
    /// Continuous support `S_j(θ) \ {θ}`; `None` outside the cutoffs.
    pub support: Option<(f64, f64)>,
}

/// The base (unmutated) continuous part of a state strategy.
#[derive(Debug, Clone, Copy)]
struct BaseStrategy {
    atom: f64,
    support: Option<(f64, f64)>,
}

/// The equilibrium: configuration, swing function, cutoffs and the strategies
/// they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    cfg: GameConfig,
    swing: SwingFunction,
    cutoffs: TruthfulCutoffs,
    mutation: Mutation,
}

impl StrategyProfile {
    /// Solve the swing equation and assemble the equilibrium profile.
    pub fn solve(cfg: &GameConfig) -> Result<Self> {
        let swing = build_swing_function(cfg)?;
        let cutoffs = compute_cutoffs(&swing, cfg)?;
        Ok(Self::new(cfg.clone(), swing, cutoffs))
    }

    pub fn new(cfg: GameConfig, swing: SwingFunction, cutoffs: TruthfulCutoffs) -> Self {
        StrategyProfile { cfg, swing, cutoffs, mutation: Mutation::default() }
    }

    /// The same equilibrium with a corruption applied.
    pub fn mutated(&self, mutation: Mutation) -> Self {
        StrategyProfile { mutation, ..self.clone() }
    }

    pub fn cfg(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn swing(&self) -> &SwingFunction {
        &self.swing
    }

    pub fn cutoffs(&self) -> TruthfulCutoffs {
        self.cutoffs
    }

    pub fn mutation(&self) -> Mutation {
        self.mutation
    }

    /// `S_j(θ) \ {θ}` from the closed-form support expressions; `None` outside
    /// the open cutoff interval (cutoff states themselves are truthful).
    pub fn base_support(&self, sender: Sender, theta: f64) -> Option<(f64, f64)> {
        if !self.cutoffs.contains(theta) {
            return None;
        }
        let s = &self.swing;
        let cfg = &self.cfg;
        let (lo, hi) = match sender {
            Sender::One => {
                let lo = s.eval_ext(theta).max(theta);
                let hi = cfg.upper_reach_1(theta).min(s.eval_ext(cfg.lower_reach_2(theta)));
                (lo, hi)
            }
            Sender::Two => {
                let lo = cfg.lower_reach_2(theta).max(s.eval_ext(cfg.upper_reach_1(theta)));
                let hi = s.eval_ext(theta).min(theta);
                (lo, hi)
            }
        };
        (lo < hi).then_some((lo, hi))
    }

    /// `α_j(θ)` from the four-branch closed form; 1 outside the cutoffs.
    pub fn base_atom(&self, sender: Sender, theta: f64) -> f64 {
        if !self.cutoffs.contains(theta) {
            return 1.0;
        }
        let cfg = &self.cfg;
        let s = &self.swing;
        let opp = sender.other();
        // k_i / (−u_i(θ)) · C_i(x, θ) for the opponent i: the probability scale
        // at which i is indifferent.
        let scaled = |x: f64| cfg.k(opp) / cfg.u(opp, theta).abs() * cfg.cost(opp).eval(x, theta);
        let value = match (sender, theta >= 0.0) {
            (Sender::One, true) => scaled(s.eval_ext(theta)),
            (Sender::One, false) => 1.0 - scaled(s.eval_ext(cfg.upper_reach_1(theta))),
            (Sender::Two, true) => 1.0 - scaled(s.eval_ext(cfg.lower_reach_2(theta))),
            (Sender::Two, false) => scaled(s.eval_ext(theta)),
        };
        value.clamp(0.0, 1.0)
    }

    fn base(&self, sender: Sender, theta: f64) -> BaseStrategy {
        BaseStrategy { atom: self.base_atom(sender, theta), support: self.base_support(sender, theta) }
    }

    /// Endpoint of the continuous support nearest the truth (kept fixed by the
    /// support mutation).
    fn anchor(sender: Sender, (lo, hi): (f64, f64)) -> f64 {
        match sender {
            Sender::One => lo,
            Sender::Two => hi,
        }
    }

    /// Map a mutated report back to the base support.
    fn unstretch(&self, sender: Sender, support: (f64, f64), r: f64) -> f64 {
        let a = Self::anchor(sender, support);
        a + (r - a) / self.mutation.support_scale
    }

    /// Map a base report to the mutated support.
    fn stretch(&self, sender: Sender, support: (f64, f64), r: f64) -> f64 {
        let a = Self::anchor(sender, support);
        a + (r - a) * self.mutation.support_scale
    }

    /// Weight multiplying the base continuous part after the atom mutation.
    fn continuous_weight(&self, base_atom: f64, atom: f64) -> f64 {
        if base_atom < 1.0 {
            (1.0 - atom) / (1.0 - base_atom)
        } else {
            0.0
        }
    }

    /// The (possibly mutated) strategy of `sender` in state θ.
    pub fn state(&self, sender: Sender, theta: f64) -> StateStrategy {
        let base = self.base(sender, theta);
        let atom = (base.atom * self.mutation.atom_scale).clamp(0.0, 1.0);
        let support = base.support.map(|sup| {
            let far = match sender {
                Sender::One => sup.1,
                Sender::Two => sup.0,
            };
            let far = self.stretch(sender, sup, far);
            match sender {
                Sender::One => (sup.0, far),
                Sender::Two => (far, sup.1),
            }
        });
        let support = if atom >= 1.0 { None } else { support };
        StateStrategy { sender, theta, atom_mass: atom, support }
    }

    pub fn atom(&self, sender: Sender, theta: f64) -> f64 {
        self.state(sender, theta).atom_mass
    }

    /// Base misreporting density `ψ_j(r, θ)` on the base support, by the chain
    /// rule through the interpolated swing function.
    fn base_density(&self, sender: Sender, r: f64, theta: f64) -> f64 {
        let cfg = &self.cfg;
        let opp = sender.other();
        let sr = self.swing.eval_ext(r);
        let ds = self.swing.derivative(r);
        // Approach the truth from the side the swing report sits on.
        let side = if sender == Sender::One { -1.0 } else { 1.0 };
        let slope = cfg.cost(opp).slope(sr - theta, side);
        (cfg.k(opp) / -cfg.u(opp, theta) * slope * ds).max(0.0)
    }

    /// Base continuous CDF `Ψ_j(r, θ)` (mass on `[lo, r]`), closed form.
    fn base_continuous_cdf(&self, sender: Sender, support: (f64, f64), r: f64, theta: f64) -> f64 {
        let cfg = &self.cfg;
        let opp = sender.other();
        let r = r.clamp(support.0, support.1);
        let scale = cfg.k(opp) / -cfg.u(opp, theta);
        let cost = cfg.cost(opp);
        let c = |x: f64| cost.eval(self.swing.eval_ext(x), theta);
        (scale * (c(r) - c(support.0))).max(0.0)
    }

    /// Misreporting density (the continuous part of the strategy); zero off
    /// the continuous support.
    pub fn density(&self, sender: Sender, r: f64, theta: f64) -> f64 {
        let base = self.base(sender, theta);
        let Some(sup) = base.support else { return 0.0 };
        let atom = (base.atom * self.mutation.atom_scale).clamp(0.0, 1.0);
        let x = self.unstretch(sender, sup, r);
        if !(x >= sup.0 && x <= sup.1) {
            return 0.0;
        }
        self.continuous_weight(base.atom, atom) * self.base_density(sender, x, theta) / self.mutation.support_scale
    }

    /// Interior points of the continuous support where the density is not
    /// smooth: the swing function changes regime at the truthful cutoffs and
    /// at their swing images, where a reach limit starts to bind.
    pub fn density_breakpoints(&self, sender: Sender, theta: f64) -> Vec<f64> {
        let Some(sup) = self.base(sender, theta).support else { return Vec::new() };
        let c = self.cutoffs;
        let mut pts: Vec<f64> = [c.theta_1, c.theta_2, self.swing.eval_ext(c.theta_1), self.swing.eval_ext(c.theta_2)]
            .into_iter()
            .filter(|&x| x > sup.0 && x < sup.1)
            .map(|x| self.stretch(sender, sup, x))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts
    }

    /// Probability of a misreport in `[lo, r]` (continuous part only).
    pub fn continuous_cdf(&self, sender: Sender, r: f64, theta: f64) -> f64 {
        let base = self.base(sender, theta);
        let Some(sup) = base.support else { return 0.0 };
        let atom = (base.atom * self.mutation.atom_scale).clamp(0.0, 1.0);
        let x = self.unstretch(sender, sup, r);
        if x < sup.0 {
            return 0.0;
        }
        self.continuous_weight(base.atom, atom) * self.base_continuous_cdf(sender, sup, x, theta)
    }

    /// Right-continuous CDF of the full report distribution.
    pub fn cdf(&self, sender: Sender, r: f64, theta: f64) -> f64 {
        let st = self.state(sender, theta);
        let atom = if r >= theta { st.atom_mass } else { 0.0 };
        (atom + self.continuous_cdf(sender, r, theta)).min(1.0)
    }

    /// Probability that the report is at least `b` (atom included when θ ≥ b).
    pub fn mass_at_or_above(&self, sender: Sender, b: f64, theta: f64) -> f64 {
        let st = self.state(sender, theta);
        let atom = if theta >= b { st.atom_mass } else { 0.0 };
        let cont = match st.support {
            Some((lo, hi)) if b < hi => {
                let total = self.continuous_cdf(sender, hi, theta);
                total - if b > lo { self.continuous_cdf(sender, b, theta) } else { 0.0 }
            }
            _ => 0.0,
        };
        (atom + cont).clamp(0.0, 1.0)
    }

    /// Draw a report. The atom is an exact branch; the continuous part is
    /// inverted in closed form through `s(s(x)) = x` and polished on the CDF.
    pub fn sample_report<R: Rng + ?Sized>(&self, sender: Sender, theta: f64, rng: &mut R) -> f64 {
        let base = self.base(sender, theta);
        let atom = (base.atom * self.mutation.atom_scale).clamp(0.0, 1.0);
        let u: f64 = rng.random();
        let sup = match base.support {
            Some(sup) if u >= atom => sup,
            _ => return theta,
        };
        let weight = self.continuous_weight(base.atom, atom);
        let target = ((u - atom) / weight).max(0.0);
        let x = self.invert_base_cdf(sender, sup, target, theta);
        self.stretch(sender, sup, x)
    }

    /// Solve `Ψ_j(x) = target` on the base support.
    fn invert_base_cdf(&self, sender: Sender, sup: (f64, f64), target: f64, theta: f64) -> f64 {
        let cfg = &self.cfg;
        let opp = sender.other();
        let cost = cfg.cost(opp);
        let scale = cfg.k(opp) / -cfg.u(opp, theta);
        let level = cost.eval(self.swing.eval_ext(sup.0), theta) + target / scale;
        let d = cost.distance_for(level);
        // The swing report of the sampled report sits below θ for sender 1
        // and above θ for sender 2.
        let y = match sender {
            Sender::One => theta - d,
            Sender::Two => theta + d,
        };
        let (lower, upper) = self.swing.domain();
        let x = self.swing.eval_ext(y.clamp(lower, upper)).clamp(sup.0, sup.1);
        // Polish by bisection on the CDF (the interpolated swing function is
        // not exactly its own inverse off the nodes).
        let tol = cfg.settings.sample_tol;
        let f = |r: f64| self.base_continuous_cdf(sender, sup, r, theta) - target;
        let fx = f(x);
        if fx.abs() <= 1e-15 {
            return x;
        }
        let (mut a, mut b) = if fx > 0.0 { (sup.0, x) } else { (x, sup.1) };
        let w = (tol * 1e3).max(1e-12);
        if fx > 0.0 && f((x - w).max(sup.0)) <= 0.0 {
            a = (x - w).max(sup.0);
        } else if fx < 0.0 && f((x + w).min(sup.1)) >= 0.0 {
            b = (x + w).min(sup.1);
        }
        while b - a > tol {
            let m = 0.5 * (a + b);
            if f(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

//! Ex-ante decision-maker welfare: full information, the direct equilibrium
//! (exact and its upper bound) and the inquisitorial procedure.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, SigError};
use crate::model::{GameConfig, Sender};
use crate::numerics::find_root;
use crate::strategy::StrategyProfile;

/// `W_fi = ∫_0^{θ_max} f·u_dm`.
pub fn w_fi(cfg: &GameConfig) -> Result<f64> {
    cfg.settings.quad().integrate_checked(|t| cfg.f(t) * cfg.u_dm.eval(t), 0.0, cfg.theta_max)
}

/// Welfare of the best fixed action without any information, `max(0, ∫_Θ f·u_dm)`.
pub fn prior_only(cfg: &GameConfig) -> Result<f64> {
    let total = cfg.settings.quad().integrate_checked(|t| cfg.f(t) * cfg.u_dm.eval(t), cfg.theta_min, cfg.theta_max)?;
    Ok(total.max(0.0))
}

/// `W̄_dm = W_fi + ∫_{θ_1}^0 f u_dm (1 − α_1) α_2`: the decision maker errs only
/// when θ ∈ (θ_1, 0), sender 2 tells the truth and sender 1 misreports.
pub fn w_bar(profile: &StrategyProfile) -> Result<f64> {
    let cfg = profile.cfg();
    let theta_1 = profile.cutoffs().theta_1;
    let correction = cfg.settings.quad().integrate_checked(
        |t| {
            cfg.f(t)
                * cfg.u_dm.eval(t)
                * (1.0 - profile.atom(Sender::One, t))
                * profile.atom(Sender::Two, t)
        },
        theta_1,
        0.0,
    )?;
    Ok(w_fi(cfg)? + correction)
}

/// Exact `P(⊕ | θ)` in the direct equilibrium.
///
/// Outside the cutoffs both senders are truthful and the action is the
/// full-information one. Inside, every on-path pair is settled by the swing
/// rule `r_2 ≥ s(r_1)` (matching and same-sign pairs agree with it), so
/// `P(⊕) = E_{r_1}[P(r_2 ≥ s(r_1))]`, integrated over sender 1's atom and
/// density with sender 2's closed-form upper tail.
pub fn plus_probability(profile: &StrategyProfile, theta: f64) -> Result<f64> {
    let cfg = profile.cfg();
    if !profile.cutoffs().contains(theta) {
        return Ok(if cfg.u_dm.eval(theta) >= 0.0 { 1.0 } else { 0.0 });
    }
    let s = profile.swing();
    let shift = profile.mutation().swing_shift;
    let tail = |r_1: f64| profile.mass_at_or_above(Sender::Two, s.eval_ext(r_1 - shift), theta);
    let st = profile.state(Sender::One, theta);
    let mut prob = st.atom_mass * tail(theta);
    if let Some((lo, hi)) = st.support {
        let mut cuts = vec![lo];
        cuts.extend(profile.density_breakpoints(Sender::One, theta));
        cuts.push(hi);
        let quad = cfg.settings.quad();
        for w in cuts.windows(2) {
            prob += quad.integrate_checked(|r| profile.density(Sender::One, r, theta) * tail(r), w[0], w[1])?;
        }
    }
    Ok(prob.clamp(0.0, 1.0))
}

/// Exact direct-equilibrium welfare `∫ f u_dm P(⊕ | θ)`.
pub fn w_de(profile: &StrategyProfile) -> Result<f64> {
    let cfg = profile.cfg();
    let c = profile.cutoffs();
    let quad = cfg.settings.quad();
    // Truthful revelation above θ_2; nothing below θ_1 since ⊖ pays zero.
    let above = quad.integrate_checked(|t| cfg.f(t) * cfg.u_dm.eval(t), c.theta_2, cfg.theta_max)?;
    let mut inside = 0.0;
    for (a, b) in [(c.theta_1, 0.0), (0.0, c.theta_2)] {
        let failure = std::cell::Cell::new(None);
        let v = quad.integrate(
            |t| match plus_probability(profile, t) {
                Ok(p) => cfg.f(t) * cfg.u_dm.eval(t) * p,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            },
            a,
            b,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        if !v.converged {
            return Err(SigError::QuadratureTolerance { lo: a, hi: b, estimate: v.error });
        }
        inside += v.value;
    }
    Ok(above + inside)
}

/// Welfare when the decision maker observes `σ = θ + noise` (Gaussian with
/// standard deviation `noise_sd`, truncated to Θ; `noise_sd = 0` is exact) and
/// plays ⊕ iff `E[u_dm | σ] ≥ 0`.
pub fn signal_welfare(cfg: &GameConfig, noise_sd: f64) -> Result<f64> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(SigError::InvalidParameter("noise_sd must be finite and non-negative".into()));
    }
    if noise_sd == 0.0 {
        return w_fi(cfg);
    }
    let normal = Normal::new(0.0, noise_sd).map_err(|e| SigError::InvalidParameter(e.to_string()))?;
    let (lo, hi) = (cfg.theta_min, cfg.theta_max);
    let quad = cfg.settings.quad();
    let mass = |t: f64| normal.cdf(hi - t) - normal.cdf(lo - t);
    let kernel = |sigma: f64, t: f64| {
        let z = (sigma - t) / noise_sd;
        (-0.5 * z * z).exp() / mass(t)
    };
    // Unnormalised E[u_dm | σ]; increasing in σ by the monotone likelihood ratio.
    let score = |sigma: f64| quad.integrate(|t| cfg.f(t) * cfg.u_dm.eval(t) * kernel(sigma, t), lo, hi).value;
    let cut = match (score(lo) >= 0.0, score(hi) >= 0.0) {
        (true, _) => lo,
        (false, false) => return Ok(0.0),
        (false, true) => find_root(score, lo, hi, cfg.settings.root_tol)?,
    };
    quad.integrate_checked(
        |t| cfg.f(t) * cfg.u_dm.eval(t) * (normal.cdf(hi - t) - normal.cdf(cut - t)) / mass(t),
        lo,
        hi,
    )
}

/// Inquisitorial welfare: with probability `q` the signal, otherwise the
/// prior-optimal action. The adversarial reports are not available.
pub fn w_inq(cfg: &GameConfig, q: f64, noise_sd: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(SigError::InvalidParameter("q must lie in [0, 1]".into()));
    }
    Ok(q * signal_welfare(cfg, noise_sd)? + (1.0 - q) * prior_only(cfg)?)
}

/// Smallest `q` at which the inquisitorial procedure matches `target`, if any.
pub fn crossover_q(cfg: &GameConfig, noise_sd: f64, target: f64) -> Result<Option<f64>> {
    let signal = signal_welfare(cfg, noise_sd)?;
    let prior = prior_only(cfg)?;
    let g = |q: f64| q * signal + (1.0 - q) * prior - target;
    if g(0.0) >= 0.0 {
        return Ok(Some(0.0));
    }
    if g(1.0) < 0.0 {
        return Ok(None);
    }
    Ok(Some(find_root(g, 0.0, 1.0, 1e-14)?))
}

/// One point of the inquisitorial frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierRow {
    pub q: f64,
    pub noise_sd: f64,
    pub w_inq: f64,
    pub beats_adversarial: bool,
}

/// All welfare figures for one profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    pub w_fi: f64,
    pub w_de: f64,
    pub w_bar: f64,
    pub prior_only: f64,
    /// Exact-signal crossover `w_inq(q*, 0) = w_bar`.
    pub q_star: Option<f64>,
    pub frontier: Vec<FrontierRow>,
}

impl WelfareReport {
    /// `w_de ≤ w_bar < w_fi` (with a small slack on the first inequality).
    pub fn ordering_holds(&self, slack: f64) -> bool {
        self.w_de <= self.w_bar + slack && self.w_bar < self.w_fi
    }
}

/// Compute the welfare table and the frontier over `q_grid × noise_sds`.
pub fn welfare_report(profile: &StrategyProfile, q_grid: &[f64], noise_sds: &[f64]) -> Result<WelfareReport> {
    let cfg = profile.cfg();
    let w_fi = w_fi(cfg)?;
    let w_bar = w_bar(profile)?;
    let w_de = w_de(profile)?;
    let prior_only = prior_only(cfg)?;
    let q_star = crossover_q(cfg, 0.0, w_bar)?;
    let mut frontier = Vec::with_capacity(q_grid.len() * noise_sds.len());
    for &noise_sd in noise_sds {
        let signal = signal_welfare(cfg, noise_sd)?;
        for &q in q_grid {
            if !(0.0..=1.0).contains(&q) {
                return Err(SigError::InvalidParameter("q must lie in [0, 1]".into()));
            }
            let w = q * signal + (1.0 - q) * prior_only;
            frontier.push(FrontierRow { q, noise_sd, w_inq: w, beats_adversarial: w > w_de });
        }
    }
    Ok(WelfareReport { w_fi, w_de, w_bar, prior_only, q_star, frontier })
}

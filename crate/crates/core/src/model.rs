//! Game primitives: state distribution, utilities, misreporting costs, thresholds
//! and the reach functions every later stage is built from.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Result, SigError};
use crate::numerics::{find_root, NumericSettings, Pchip};
use crate::simulator::SimulationSettings;

/// One of the two informed players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sender {
    One,
    Two,
}

impl Sender {
    pub fn other(self) -> Sender {
        match self {
            Sender::One => Sender::Two,
            Sender::Two => Sender::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Sender::One => 1,
            Sender::Two => 2,
        }
    }
}

// ---------------------------------------------------------------------------
// Raw (serialisable) specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform,
    TruncatedNormal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum UtilitySpec {
    /// `slope·θ + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `Σ c_i θ^i`, coefficients in increasing degree.
    Polynomial { coefficients: Vec<f64> },
    /// Piecewise-linear through `(θ, u)` points; constant beyond the ends.
    Tabulated { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CostSpec {
    /// `scale·|r − θ|^exponent`
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSection {
    pub theta_min: f64,
    pub theta_max: f64,
    #[serde(flatten)]
    pub family: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitiesSection {
    pub dm: UtilitySpec,
    pub sender_1: UtilitySpec,
    pub sender_2: UtilitySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsSection {
    pub k_1: f64,
    pub k_2: f64,
    pub sender_1: CostSpec,
    pub sender_2: CostSpec,
}

/// The structured parameter set read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub distribution: DistributionSection,
    pub utilities: UtilitiesSection,
    pub costs: CostsSection,
    #[serde(default)]
    pub numerics: NumericSettings,
    #[serde(default)]
    pub simulation: SimulationSettings,
}

impl RawSpec {
    /// The canonical symmetric benchmark: uniform θ on [−1, 1], `u_dm = θ`,
    /// `u_1 = θ + ½`, `u_2 = θ − ½`, unit intensities and quadratic costs.
    pub fn symmetric_quadratic() -> Self {
        Self::symmetric_power(2.0)
    }

    /// The symmetric benchmark with cost `|r − θ|^exponent`.
    pub fn symmetric_power(exponent: f64) -> Self {
        let cost = CostSpec::Power { exponent, scale: 1.0 };
        RawSpec {
            distribution: DistributionSection {
                theta_min: -1.0,
                theta_max: 1.0,
                family: DistributionSpec::Uniform,
            },
            utilities: UtilitiesSection {
                dm: UtilitySpec::Affine { slope: 1.0, intercept: 0.0 },
                sender_1: UtilitySpec::Affine { slope: 1.0, intercept: 0.5 },
                sender_2: UtilitySpec::Affine { slope: 1.0, intercept: -0.5 },
            },
            costs: CostsSection { k_1: 1.0, k_2: 1.0, sender_1: cost.clone(), sender_2: cost },
            numerics: NumericSettings::default(),
            simulation: SimulationSettings::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluable primitives
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum StateDistribution {
    Uniform { lo: f64, hi: f64 },
    TruncatedNormal { lo: f64, hi: f64, normal: Normal, mass_below: f64, mass: f64 },
}

impl StateDistribution {
    fn new(spec: &DistributionSpec, lo: f64, hi: f64) -> Result<Self> {
        Ok(match *spec {
            DistributionSpec::Uniform => StateDistribution::Uniform { lo, hi },
            DistributionSpec::TruncatedNormal { mean, sd } => {
                let normal = Normal::new(mean, sd)
                    .map_err(|_| SigError::InvalidParameter("truncated normal needs sd > 0".into()))?;
                let mass_below = normal.cdf(lo);
                let mass = normal.cdf(hi) - mass_below;
                if !(mass > 0.0) {
                    return Err(SigError::NotFullSupport { theta: lo, value: 0.0 });
                }
                StateDistribution::TruncatedNormal { lo, hi, normal, mass_below, mass }
            }
        })
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        match self {
            StateDistribution::Uniform { lo, hi } => {
                if theta >= *lo && theta <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            StateDistribution::TruncatedNormal { lo, hi, normal, mass, .. } => {
                if theta >= *lo && theta <= *hi {
                    normal.pdf(theta) / mass
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        match self {
            StateDistribution::Uniform { lo, hi } => ((theta - lo) / (hi - lo)).clamp(0.0, 1.0),
            StateDistribution::TruncatedNormal { normal, mass_below, mass, .. } => {
                ((normal.cdf(theta) - mass_below) / mass).clamp(0.0, 1.0)
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            StateDistribution::Uniform { lo, hi } => lo + p * (hi - lo),
            StateDistribution::TruncatedNormal { lo, hi, normal, mass_below, mass } => {
                normal.inverse_cdf(mass_below + p * mass).clamp(*lo, *hi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    Affine { slope: f64, intercept: f64 },
    Polynomial { coefficients: Vec<f64> },
    Tabulated { theta: Vec<f64>, value: Vec<f64> },
}

impl Utility {
    fn new(spec: &UtilitySpec, name: &str) -> Result<Self> {
        Ok(match spec {
            UtilitySpec::Affine { slope, intercept } => {
                if !(slope.is_finite() && intercept.is_finite()) {
                    return Err(SigError::InvalidParameter(format!("utility `{name}` has non-finite parameters")));
                }
                Utility::Affine { slope: *slope, intercept: *intercept }
            }
            UtilitySpec::Polynomial { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(SigError::InvalidParameter(format!(
                        "utility `{name}` needs finite polynomial coefficients"
                    )));
                }
                Utility::Polynomial { coefficients: coefficients.clone() }
            }
            UtilitySpec::Tabulated { points } => {
                if points.len() < 2 || points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(SigError::InvalidParameter(format!(
                        "utility `{name}` table needs ≥ 2 points with increasing θ"
                    )));
                }
                Utility::Tabulated {
                    theta: points.iter().map(|p| p[0]).collect(),
                    value: points.iter().map(|p| p[1]).collect(),
                }
            }
        })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Utility::Affine { slope, intercept } => slope * theta + intercept,
            Utility::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * theta + c),
            Utility::Tabulated { theta: xs, value } => {
                let n = xs.len();
                if theta <= xs[0] {
                    return value[0];
                }
                if theta >= xs[n - 1] {
                    return value[n - 1];
                }
                let k = xs.partition_point(|&x| x <= theta) - 1;
                let w = (theta - xs[k]) / (xs[k + 1] - xs[k]);
                value[k] + w * (value[k + 1] - value[k])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cost {
    Power { exponent: f64, scale: f64 },
}

impl Cost {
    fn new(spec: &CostSpec, name: &str) -> Result<Self> {
        match *spec {
            CostSpec::Power { exponent, scale } => {
                if !(exponent.is_finite() && exponent > 0.0) {
                    return Err(SigError::InvalidParameter(format!("cost exponent of {name} must be positive")));
                }
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(SigError::InvalidParameter(format!("cost scale of {name} must be positive")));
                }
                Ok(Cost::Power { exponent, scale })
            }
        }
    }

    /// `C(r, θ)`
    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        match *self {
            Cost::Power { exponent, scale } => scale * (r - theta).abs().powf(exponent),
        }
    }

    /// `∂C(r, θ)/∂r`. At `r = θ` the one-sided derivative on the side given by
    /// `side` (±1) is returned; it is infinite for exponents below one.
    pub fn d_dr(&self, r: f64, theta: f64, side: f64) -> f64 {
        self.slope(r - theta, side)
    }

    /// `∂C/∂r` as a function of the signed misrepresentation `x = r − θ`.
    pub fn slope(&self, x: f64, side: f64) -> f64 {
        match *self {
            Cost::Power { exponent, scale } => {
                let sign = if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    side.signum()
                };
                if x == 0.0 {
                    return if exponent > 1.0 {
                        0.0
                    } else if exponent == 1.0 {
                        sign * scale
                    } else {
                        sign * f64::INFINITY
                    };
                }
                sign * scale * exponent * x.abs().powf(exponent - 1.0)
            }
        }
    }

    /// The misrepresentation size `|r − θ|` whose cost equals `level`.
    pub fn distance_for(&self, level: f64) -> f64 {
        match *self {
            Cost::Power { exponent, scale } => (level.max(0.0) / scale).powf(1.0 / exponent),
        }
    }

    pub fn exponent(&self) -> f64 {
        match *self {
            Cost::Power { exponent, .. } => exponent,
        }
    }
}

// ---------------------------------------------------------------------------
// Validated configuration
// ---------------------------------------------------------------------------

/// A fully validated game: primitives plus the derived thresholds and the
/// conflict region `Ĥ = [r_2(0), r_1(0)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub theta_min: f64,
    pub theta_max: f64,
    pub dist: StateDistribution,
    pub u_dm: Utility,
    pub u_1: Utility,
    pub u_2: Utility,
    pub cost_1: Cost,
    pub cost_2: Cost,
    pub k_1: f64,
    pub k_2: f64,
    pub tau_1: f64,
    pub tau_2: f64,
    pub settings: NumericSettings,
    hat_lo: f64,
    hat_hi: f64,
}

const MONOTONE_CHECK_N: usize = 1025;

/// Validate a raw specification and derive thresholds and the conflict region.
pub fn build_config(raw: &RawSpec) -> Result<GameConfig> {
    let d = &raw.distribution;
    if !(d.theta_min.is_finite() && d.theta_max.is_finite() && d.theta_min < d.theta_max) {
        return Err(SigError::InvalidParameter("theta_min < theta_max must be finite".into()));
    }
    if !(d.theta_min < 0.0 && d.theta_max > 0.0) {
        return Err(SigError::InvalidParameter("the state space must contain 0 in its interior".into()));
    }
    for (name, k) in [("k_1", raw.costs.k_1), ("k_2", raw.costs.k_2)] {
        if !(k.is_finite() && k > 0.0) {
            return Err(SigError::InvalidParameter(format!("{name} must be positive")));
        }
    }
    raw.numerics.validate()?;
    let (lo, hi) = (d.theta_min, d.theta_max);
    let dist = StateDistribution::new(&d.family, lo, hi)?;
    for i in 0..MONOTONE_CHECK_N {
        let th = lo + (hi - lo) * i as f64 / (MONOTONE_CHECK_N - 1) as f64;
        let v = dist.pdf(th);
        if !(v > 0.0 && v.is_finite()) {
            return Err(SigError::NotFullSupport { theta: th, value: v });
        }
    }

    let u_dm = Utility::new(&raw.utilities.dm, "dm")?;
    let u_1 = Utility::new(&raw.utilities.sender_1, "sender_1")?;
    let u_2 = Utility::new(&raw.utilities.sender_2, "sender_2")?;
    for (name, u) in [("dm", &u_dm), ("sender_1", &u_1), ("sender_2", &u_2)] {
        let mut prev = u.eval(lo);
        for i in 1..MONOTONE_CHECK_N {
            let th = lo + (hi - lo) * i as f64 / (MONOTONE_CHECK_N - 1) as f64;
            let v = u.eval(th);
            if !v.is_finite() || v < prev - 1e-12 * (1.0 + prev.abs()) {
                return Err(SigError::NonMonotoneUtility { player: name.into(), theta: th });
            }
            prev = v;
        }
    }
    let u0 = u_dm.eval(0.0);
    if u0.abs() > 1e-12 {
        return Err(SigError::DmNormalization(u0));
    }

    // Biases must point in opposite directions before any root search makes sense.
    if !(u_1.eval(0.0) > 0.0 && u_2.eval(0.0) < 0.0) {
        let root = |u: &Utility| find_root(|t| u.eval(t), lo, hi, raw.numerics.root_tol).unwrap_or(f64::NAN);
        return Err(SigError::ThresholdOrdering { tau_1: root(&u_1), tau_2: root(&u_2) });
    }
    let threshold = |u: &Utility, name: &str| -> Result<f64> {
        if !(u.eval(lo) <= 0.0 && u.eval(hi) >= 0.0) {
            return Err(SigError::NoThreshold(name.into()));
        }
        find_root(|t| u.eval(t), lo, hi, raw.numerics.root_tol)
    };
    let tau_1 = threshold(&u_1, "sender_1")?;
    let tau_2 = threshold(&u_2, "sender_2")?;
    if !(tau_1 < 0.0 && tau_2 > 0.0) {
        return Err(SigError::ThresholdOrdering { tau_1, tau_2 });
    }

    let mut cfg = GameConfig {
        theta_min: lo,
        theta_max: hi,
        dist,
        u_dm,
        u_1,
        u_2,
        cost_1: Cost::new(&raw.costs.sender_1, "sender_1")?,
        cost_2: Cost::new(&raw.costs.sender_2, "sender_2")?,
        k_1: raw.costs.k_1,
        k_2: raw.costs.k_2,
        tau_1,
        tau_2,
        settings: raw.numerics.clone(),
        hat_lo: 0.0,
        hat_hi: 0.0,
    };
    let upper = cfg.upper_reach_1(0.0);
    let lower = cfg.lower_reach_2(0.0);
    if upper > hi || lower < lo {
        return Err(SigError::StateSpaceTooSmall { theta_min: lo, theta_max: hi, lower, upper });
    }
    cfg.hat_lo = lower;
    cfg.hat_hi = upper;
    Ok(cfg)
}

impl GameConfig {
    /// The conflict region `Ĥ = [r_2(0), r_1(0)]`.
    pub fn conflict_region(&self) -> (f64, f64) {
        (self.hat_lo, self.hat_hi)
    }

    pub fn f(&self, theta: f64) -> f64 {
        self.dist.pdf(theta)
    }

    pub fn u(&self, sender: Sender, theta: f64) -> f64 {
        match sender {
            Sender::One => self.u_1.eval(theta),
            Sender::Two => self.u_2.eval(theta),
        }
    }

    pub fn k(&self, sender: Sender) -> f64 {
        match sender {
            Sender::One => self.k_1,
            Sender::Two => self.k_2,
        }
    }

    pub fn cost(&self, sender: Sender) -> &Cost {
        match sender {
            Sender::One => &self.cost_1,
            Sender::Two => &self.cost_2,
        }
    }

    /// Scaled misreporting cost `k_j C_j(r, θ)`.
    pub fn misreport_cost(&self, sender: Sender, r: f64, theta: f64) -> f64 {
        self.k(sender) * self.cost(sender).eval(r, theta)
    }

    /// Largest absolute sender utility over Θ, the natural payoff scale.
    pub fn payoff_scale(&self) -> f64 {
        [self.theta_min, self.theta_max]
            .iter()
            .flat_map(|&t| [self.u_1.eval(t).abs(), self.u_2.eval(t).abs()])
            .fold(0.0, f64::max)
    }

    /// Sender j's gain from having its preferred alternative chosen in state θ,
    /// `(−1)^{1{θ<τ_j}} u_j(θ)`.
    pub fn gain(&self, sender: Sender, theta: f64) -> f64 {
        let tau = match sender {
            Sender::One => self.tau_1,
            Sender::Two => self.tau_2,
        };
        let u = self.u(sender, theta);
        if theta < tau {
            -u
        } else {
            u
        }
        .max(0.0)
    }

    /// Upper reach `r_1(θ)`: the largest report whose cost exactly offsets
    /// sender 1's gain.
    pub fn upper_reach_1(&self, theta: f64) -> f64 {
        theta + self.cost_1.distance_for(self.gain(Sender::One, theta) / self.k_1)
    }

    /// Lower reach `r_2(θ)`: the smallest report whose cost exactly offsets
    /// sender 2's gain.
    pub fn lower_reach_2(&self, theta: f64) -> f64 {
        theta - self.cost_2.distance_for(self.gain(Sender::Two, theta) / self.k_2)
    }

    /// `r_1^{-1}(r)`: the smallest θ with `u_1(θ) = k_1 C_1(r, θ)`.
    pub fn inv_upper_reach_1(&self, r: f64) -> Result<f64> {
        if r < self.tau_1 || !r.is_finite() {
            return Err(SigError::NotInImage(r));
        }
        if r == self.tau_1 {
            return Ok(r);
        }
        let hi = r.min(self.theta_max);
        let h = |t: f64| self.u_1.eval(t) - self.k_1 * self.cost_1.eval(r, t);
        if h(hi) < 0.0 {
            return Err(SigError::NotInImage(r));
        }
        find_root(h, self.tau_1, hi, self.settings.root_tol)
    }

    /// `r_2^{-1}(r)`: the largest θ with `−u_2(θ) = k_2 C_2(r, θ)`.
    pub fn inv_lower_reach_2(&self, r: f64) -> Result<f64> {
        if r > self.tau_2 || !r.is_finite() {
            return Err(SigError::NotInImage(r));
        }
        if r == self.tau_2 {
            return Ok(r);
        }
        let lo = r.max(self.theta_min);
        let h = |t: f64| -self.u_2.eval(t) - self.k_2 * self.cost_2.eval(r, t);
        if h(lo) < 0.0 {
            return Err(SigError::NotInImage(r));
        }
        find_root(h, lo, self.tau_2, self.settings.root_tol)
    }

    /// Inverse upper reach extended to the whole real line: `−∞` below the
    /// image (no state can claim such a low report as its reach) and `+∞` above.
    pub fn inv_upper_reach_1_ext(&self, r: f64) -> f64 {
        if r <= self.tau_1 {
            return if r == self.tau_1 { r } else { f64::NEG_INFINITY };
        }
        self.inv_upper_reach_1(r).unwrap_or(f64::INFINITY)
    }

    /// Inverse lower reach extended to the real line: `+∞` above the image and
    /// `−∞` below it.
    pub fn inv_lower_reach_2_ext(&self, r: f64) -> f64 {
        if r >= self.tau_2 {
            return if r == self.tau_2 { r } else { f64::INFINITY };
        }
        self.inv_lower_reach_2(r).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Reaches tabulated on a uniform θ-grid over the ranges where they are
/// monotone (`[τ_1, θ_max]` for sender 1, `[θ_min, τ_2]` for sender 2).
///
/// The tables are a fast approximate path for plotting and bulk evaluation;
/// equilibrium objects use the exact reaches on [`GameConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReachTable {
    upper_1: Pchip,
    lower_2: Pchip,
}

impl ReachTable {
    pub fn build(cfg: &GameConfig) -> Result<Self> {
        let n = cfg.settings.reach_grid_n;
        let grid = |a: f64, b: f64| -> Vec<f64> { (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect() };
        let x1 = grid(cfg.tau_1, cfg.theta_max);
        let y1 = x1.iter().map(|&t| cfg.upper_reach_1(t)).collect();
        let x2 = grid(cfg.theta_min, cfg.tau_2);
        let y2 = x2.iter().map(|&t| cfg.lower_reach_2(t)).collect();
        Ok(Self { upper_1: Pchip::new(x1, y1)?, lower_2: Pchip::new(x2, y2)? })
    }

    pub fn upper_reach_1(&self, theta: f64) -> f64 {
        self.upper_1.eval(theta)
    }

    pub fn lower_reach_2(&self, theta: f64) -> f64 {
        self.lower_2.eval(theta)
    }

    /// Interpolated inverse: state whose tabulated upper reach equals `r`.
    pub fn inv_upper_reach_1(&self, r: f64) -> f64 {
        self.upper_1.inverse(r)
    }

    pub fn inv_lower_reach_2(&self, r: f64) -> f64 {
        self.lower_2.inverse(r)
    }

    pub fn nodes_1(&self) -> (&[f64], &[f64]) {
        self.upper_1.nodes()
    }

    pub fn nodes_2(&self) -> (&[f64], &[f64]) {
        self.lower_2.nodes()
    }
}

//! Numerical building blocks shared by every solver stage: tolerances, bracketed
//! root-finding, endpoint-regularised adaptive Simpson quadrature and monotone
//! cubic (Fritsch–Carlson) interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SigError};

/// Every tolerance and resolution knob in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericSettings {
    /// Absolute tolerance on roots in the report/state variable.
    pub root_tol: f64,
    /// Absolute tolerance for quadrature of bounded integrands.
    pub quad_tol: f64,
    /// Relative tolerance (against the L1 mass of the integrand) used where
    /// only the sign of an integral matters.
    pub quad_rel_tol: f64,
    /// Maximum bisection depth of the adaptive Simpson recursion.
    pub max_quad_depth: u32,
    /// Order `m` of the endpoint-smoothing substitution; the Jacobian vanishes
    /// like `t^m` at both ends, which tames integrable endpoint singularities.
    pub smoothing_order: u32,
    /// Number of θ-nodes for the tabulated reaches.
    pub reach_grid_n: usize,
    /// Number of nodes of the swing table over the whole conflict region.
    pub swing_grid_n: usize,
    /// Sub-intervals of the uniqueness scan run after each swing solve.
    pub sign_scan_n: usize,
    /// Below this |r| the swing report is extrapolated linearly.
    pub near_zero: f64,
    /// Tolerance on r for inverse-CDF sampling.
    pub sample_tol: f64,
    /// Posterior supports narrower than this are treated as degenerate.
    pub degenerate_width: f64,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self {
            root_tol: 1e-12,
            quad_tol: 1e-10,
            quad_rel_tol: 1e-10,
            max_quad_depth: 40,
            smoothing_order: 5,
            reach_grid_n: 512,
            swing_grid_n: 257,
            sign_scan_n: 64,
            near_zero: 1e-6,
            sample_tol: 1e-9,
            degenerate_width: 1e-9,
        }
    }
}

impl NumericSettings {
    /// Multiply every tolerance by `factor` (resolutions are left alone).
    pub fn scale_tolerances(&self, factor: f64) -> Self {
        Self {
            root_tol: self.root_tol * factor,
            quad_tol: self.quad_tol * factor,
            quad_rel_tol: self.quad_rel_tol * factor,
            sample_tol: self.sample_tol * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("root_tol", self.root_tol),
            ("quad_tol", self.quad_tol),
            ("quad_rel_tol", self.quad_rel_tol),
            ("near_zero", self.near_zero),
            ("sample_tol", self.sample_tol),
            ("degenerate_width", self.degenerate_width),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SigError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.reach_grid_n < 8 || self.swing_grid_n < 9 || self.sign_scan_n < 2 {
            return Err(SigError::InvalidParameter(
                "grid sizes too small (reach_grid_n ≥ 8, swing_grid_n ≥ 9, sign_scan_n ≥ 2)".into(),
            ));
        }
        if self.smoothing_order == 0 || self.smoothing_order > 12 {
            return Err(SigError::InvalidParameter(
                "smoothing_order must lie in 1..=12".into(),
            ));
        }
        Ok(())
    }

    pub fn smoothstep(&self) -> Smoothstep {
        Smoothstep::new(self.smoothing_order)
    }

    pub fn quad(&self) -> Quadrature {
        Quadrature {
            abs_tol: self.quad_tol,
            rel_tol: 0.0,
            max_depth: self.max_quad_depth,
            smooth: self.smoothstep(),
        }
    }

    /// Quadrature driven by a tolerance relative to the integrand's L1 mass.
    pub fn quad_relative(&self) -> Quadrature {
        Quadrature {
            abs_tol: 0.0,
            rel_tol: self.quad_rel_tol,
            max_depth: self.max_quad_depth,
            smooth: self.smoothstep(),
        }
    }
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Bracketed root of `f` on `[a, b]`: regula falsi steps (Illinois variant)
/// safeguarded by bisection whenever the bracket fails to halve.
pub fn find_root<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(SigError::NoSignChange { lo, hi });
    }
    let mut side = 0i8;
    let mut width = hi - lo;
    for iter in 0..300 {
        if hi - lo <= tol {
            break;
        }
        // Every third step is a plain bisection unless the bracket is shrinking fast.
        let force_bisect = iter % 3 == 2 && (hi - lo) > 0.5 * width;
        if iter % 3 == 2 {
            width = hi - lo;
        }
        let mut c = if force_bisect {
            0.5 * (lo + hi)
        } else {
            (lo * fhi - hi * flo) / (fhi - flo)
        };
        if !(c > lo && c < hi) {
            c = 0.5 * (lo + hi);
        }
        if c <= lo || c >= hi {
            break;
        }
        let fc = f(c);
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == flo.signum() {
            lo = c;
            flo = fc;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = c;
            fhi = fc;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locate the switch point of a predicate that is `false` at `lo` and `true` at
/// `hi` (either ordering of the endpoints is allowed). Bisects until the bracket
/// is narrower than `tol` or collapses at machine precision; returns the midpoint.
pub fn bisect_boundary<P>(mut pred: P, lo: f64, hi: f64, tol: f64) -> f64
where
    P: FnMut(f64) -> bool,
{
    let (mut f_side, mut t_side) = (lo, hi);
    for _ in 0..2000 {
        if (t_side - f_side).abs() <= tol {
            break;
        }
        let mid = 0.5 * (f_side + t_side);
        if mid == f_side || mid == t_side {
            break;
        }
        if pred(mid) {
            t_side = mid;
        } else {
            f_side = mid;
        }
    }
    0.5 * (f_side + t_side)
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Polynomial smoothstep `B(t) = I_t(m+1, m+1)` (regularised incomplete beta)
/// with derivative `t^m (1-t)^m / B(m+1, m+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothstep {
    m: u32,
    binom: Vec<f64>,
    norm: f64,
}

impl Smoothstep {
    pub fn new(m: u32) -> Self {
        let n = 2 * m + 1;
        let mut binom = vec![1.0f64; n as usize + 1];
        for j in 1..=n as usize {
            binom[j] = binom[j - 1] * (n as usize + 1 - j) as f64 / j as f64;
        }
        // 1 / Beta(m+1, m+1) = (2m+1)! / (m!)^2
        let mut norm = 1.0;
        for j in 1..=m {
            norm *= (m + j) as f64 / j as f64;
        }
        norm *= n as f64;
        Self { m, binom, norm }
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        if t > 0.5 {
            return 1.0 - self.value(1.0 - t);
        }
        let n = 2 * self.m + 1;
        let u = 1.0 - t;
        (self.m + 1..=n)
            .map(|j| self.binom[j as usize] * t.powi(j as i32) * u.powi((n - j) as i32))
            .sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        self.norm * (t * (1.0 - t)).powi(self.m as i32)
    }
}

/// Outcome of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive Simpson integration after the substitution `x = a + (b-a)·B(t)`.
///
/// The substitution clusters nodes at both endpoints, so integrands that vanish
/// or blow up (integrably) there are handled without special casing; the
/// integrand is never evaluated exactly at an endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub smooth: Smoothstep,
}

const INITIAL_PANELS: usize = 16;

impl Quadrature {
    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> QuadResult
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_with_offsets(|x, _, _| f(x), a, b)
    }

    /// Like [`Quadrature::integrate`], but the integrand also receives the
    /// distances `x − a` and `b − x`, computed without cancellation. Integrands
    /// singular at an endpoint should measure their distance from these.
    pub fn integrate_with_offsets<F>(&self, f: F, a: f64, b: f64) -> QuadResult
    where
        F: Fn(f64, f64, f64) -> f64,
    {
        if !(b > a) {
            return QuadResult { value: 0.0, error: 0.0, converged: true };
        }
        let len = b - a;
        let g = |t: f64| {
            let jac = self.smooth.derivative(t);
            if jac == 0.0 {
                return 0.0;
            }
            let (d_lo, d_hi) = if t <= 0.5 {
                let d = len * self.smooth.value(t);
                (d, len - d)
            } else {
                let d = len * self.smooth.value(1.0 - t);
                (len - d, d)
            };
            let x = if t <= 0.5 { a + d_lo } else { b - d_hi };
            let v = f(x, d_lo, d_hi) * len * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };

        let n = INITIAL_PANELS;
        let h = 1.0 / n as f64;
        let samples: Vec<f64> = (0..=2 * n).map(|i| g(i as f64 * 0.5 * h)).collect();
        let l1: f64 = (0..n)
            .map(|k| {
                h / 6.0
                    * (samples[2 * k].abs() + 4.0 * samples[2 * k + 1].abs() + samples[2 * k + 2].abs())
            })
            .sum();
        if l1 == 0.0 {
            return QuadResult { value: 0.0, error: 0.0, converged: true };
        }
        let eps = self.abs_tol.max(self.rel_tol * l1).max(f64::MIN_POSITIVE);

        let mut total = QuadResult { value: 0.0, error: 0.0, converged: true };
        for k in 0..n {
            let (t0, t2) = (k as f64 * h, (k + 1) as f64 * h);
            let (f0, f1, f2) = (samples[2 * k], samples[2 * k + 1], samples[2 * k + 2]);
            let whole = (t2 - t0) / 6.0 * (f0 + 4.0 * f1 + f2);
            let part = simpson_rec(&g, t0, t2, f0, f1, f2, whole, eps / n as f64, eps * 1e-6, self.max_depth);
            total.value += part.value;
            total.error += part.error;
            total.converged &= part.converged;
        }
        total
    }

    /// Integrate and fail loudly when the tolerance was not reached.
    pub fn integrate_checked<F>(&self, f: F, a: f64, b: f64) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let r = self.integrate(f, a, b);
        if r.converged {
            Ok(r.value)
        } else {
            Err(SigError::QuadratureTolerance { lo: a, hi: b, estimate: r.error })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<G>(
    g: &G,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    eps_min: f64,
    depth: u32,
) -> QuadResult
where
    G: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = g(lm);
    let frm = g(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Below a few ulps of the panel value, or a tiny fraction of the global
    // tolerance, further refinement only chases rounding noise.
    let floor = (64.0 * f64::EPSILON * (left.abs() + right.abs())).max(eps_min);
    if delta.abs() <= 15.0 * eps.max(floor) {
        return QuadResult { value: left + right + delta / 15.0, error: delta.abs() / 15.0, converged: true };
    }
    if depth == 0 || m <= a || m >= b {
        return QuadResult { value: left + right + delta / 15.0, error: delta.abs() / 15.0, converged: false };
    }
    let l = simpson_rec(g, a, m, fa, flm, fm, left, 0.5 * eps, eps_min, depth - 1);
    let r = simpson_rec(g, m, b, fm, frm, fb, right, 0.5 * eps, eps_min, depth - 1);
    QuadResult { value: l.value + r.value, error: l.error + r.error, converged: l.converged && r.converged }
}

/// Fixed-resolution composite Simpson rule in the smoothstep-graded variable.
///
/// Used where a *known* discretisation order is wanted (grid-refinement
/// studies); `panels` is rounded up to an even number.
pub fn graded_simpson<F>(f: F, a: f64, b: f64, panels: usize, smooth: &Smoothstep) -> f64
where
    F: Fn(f64) -> f64,
{
    if !(b > a) {
        return 0.0;
    }
    let n = panels.max(2).div_ceil(2) * 2;
    let len = b - a;
    let h = 1.0 / n as f64;
    let mut acc = 0.0;
    for i in 1..n {
        let t = i as f64 * h;
        let jac = smooth.derivative(t);
        if jac == 0.0 {
            continue;
        }
        let v = f(a + len * smooth.value(t)) * len * jac;
        if v.is_finite() {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
        }
    }
    acc * h / 3.0
}

// ---------------------------------------------------------------------------
// Monotone cubic interpolation
// ---------------------------------------------------------------------------

/// Piecewise-cubic Hermite interpolant with Fritsch–Carlson slopes; preserves
/// monotonicity of the data and is continuously differentiable.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(SigError::InvalidParameter("interpolation needs ≥ 2 matched nodes".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return Err(SigError::InvalidParameter(
                "interpolation nodes must be finite with strictly increasing abscissae".into(),
            ));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.x.len();
        self.x.partition_point(|&xi| xi <= x).clamp(1, n - 1) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.x[k + 1] - self.x[k];
        let t = (x - self.x[k]) / h;
        hermite(t, h, self.y[k], self.y[k + 1], self.d[k], self.d[k + 1])
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.x[k + 1] - self.x[k];
        let t = (x - self.x[k]) / h;
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d[k], self.d[k + 1]);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * (y0 - y1)) / h + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1
    }

    /// Inverse of a strictly monotone interpolant: the `x` with `eval(x) = y`.
    /// Values outside the range of the data are clamped to the nearest end.
    pub fn inverse(&self, y: f64) -> f64 {
        let n = self.x.len();
        let increasing = self.y[n - 1] > self.y[0];
        // Segment k with y between y[k] and y[k+1].
        let k = if increasing {
            self.y.partition_point(|&yi| yi <= y).clamp(1, n - 1) - 1
        } else {
            self.y.partition_point(|&yi| yi >= y).clamp(1, n - 1) - 1
        };
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let lo_y = y0.min(y1);
        let hi_y = y0.max(y1);
        if y <= lo_y {
            return if increasing { x0 } else { x1 };
        }
        if y >= hi_y {
            return if increasing { x1 } else { x0 };
        }
        // Safeguarded Newton inside the segment.
        let sign = if increasing { 1.0 } else { -1.0 };
        let (mut a, mut b) = (x0, x1);
        let mut x = x0 + (x1 - x0) * (y - y0) / (y1 - y0);
        for _ in 0..100 {
            let r = self.eval(x) - y;
            if r == 0.0 {
                return x;
            }
            if sign * r > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let dv = self.derivative(x);
            let mut next = x - r / dv;
            if !(next > a && next < b) || !dv.is_finite() || dv == 0.0 {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) || b - a <= f64::EPSILON * b.abs() {
                return next;
            }
            x = next;
        }
        x
    }
}

fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

//! The swing-report function and the truthful cutoffs.
//!
//! For a report `r > 0` of sender 1, the swing report `s(r) < 0` is the
//! opposing report that leaves the decision maker exactly indifferent. It is
//! the root in `r_2` of
//!
//! ```text
//!   I(r, r_2) = ∫ f(θ) u_dm(θ) / (u_1(θ) u_2(θ)) · ∂C_2(r_2,θ)/∂r_2 · ∂C_1(r,θ)/∂r  dθ
//! ```
//!
//! over `θ ∈ [max{r_2, r_1^{-1}(r)}, min{r, r_2^{-1}(r_2)}]`, and symmetrically
//! for negative reports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SigError};
use crate::model::GameConfig;
use crate::numerics::{find_root, Pchip};

/// The integrand of the swing equation at state θ for the report pair `(r_1, r_2)`.
pub fn swing_integrand(r_1: f64, r_2: f64, theta: f64, cfg: &GameConfig) -> f64 {
    swing_integrand_offsets(theta, theta - r_2, r_1 - theta, cfg)
}

/// The swing integrand with the misrepresentation sizes `θ − r_2` and `r_1 − θ`
/// supplied separately, so they stay accurate next to a singular endpoint.
fn swing_integrand_offsets(theta: f64, gap_2: f64, gap_1: f64, cfg: &GameConfig) -> f64 {
    let weight = cfg.f(theta) * cfg.u_dm.eval(theta) / (cfg.u_1.eval(theta) * cfg.u_2.eval(theta));
    let d2 = cfg.cost_2.slope(-gap_2, -1.0);
    let d1 = cfg.cost_1.slope(gap_1, 1.0);
    weight * d2 * d1
}

/// Integration limits `[max{r_2, r_1^{-1}(r_1)}, min{r_1, r_2^{-1}(r_2)}]` of the
/// swing equation; may be empty (`lo ≥ hi`).
pub fn swing_limits(r_1: f64, r_2: f64, cfg: &GameConfig) -> (f64, f64) {
    let lo = r_2.max(cfg.inv_upper_reach_1_ext(r_1));
    let hi = r_1.min(cfg.inv_lower_reach_2_ext(r_2));
    (lo, hi)
}

/// Like [`swing_limits`] but rejects empty intervals.
pub fn swing_limits_checked(r_1: f64, r_2: f64, cfg: &GameConfig) -> Result<(f64, f64)> {
    let (lo, hi) = swing_limits(r_1, r_2, cfg);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(SigError::DegenerateInterval { lo, hi })
    }
}

/// `I(r_1, r_2)`; zero when the limits are empty.
///
/// Only the sign and the root of `I` matter, so the tolerance is relative to
/// the integrand's L1 mass — this keeps tiny reports near 0 resolvable.
pub fn swing_integral(r_1: f64, r_2: f64, cfg: &GameConfig) -> Result<f64> {
    let (lo, hi) = swing_limits(r_1, r_2, cfg);
    if !(lo < hi) {
        return Ok(0.0);
    }
    // Distances to the reports, measured from the nearer limit.
    let (off_lo, off_hi) = (lo - r_2, r_1 - hi);
    let res = cfg.settings.quad_relative().integrate_with_offsets(
        |t, d_lo, d_hi| swing_integrand_offsets(t, off_lo + d_lo, off_hi + d_hi, cfg),
        lo,
        hi,
    );
    if res.converged {
        Ok(res.value)
    } else {
        Err(SigError::QuadratureTolerance { lo, hi, estimate: res.error })
    }
}

/// `I` oriented so that the unknown is always the opposing report: for
/// `r > 0` the unknown is sender 2's report, for `r < 0` sender 1's.
fn oriented_integral(r: f64, x: f64, cfg: &GameConfig) -> Result<f64> {
    if r > 0.0 {
        swing_integral(r, x, cfg)
    } else {
        swing_integral(x, r, cfg)
    }
}

/// Run `find_root` on a fallible function, surfacing the first evaluation error.
fn find_root_fallible(mut g: impl FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    let mut failure = None;
    // Solve to near machine precision: downstream densities differentiate the
    // interpolated table.
    let root = find_root(
        |x| match g(x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        4.0 * f64::EPSILON * (b - a).abs(),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

/// Number of sign changes of `I(r, ·)` on an equispaced scan of the bracket.
pub fn count_sign_changes(r: f64, cfg: &GameConfig) -> Result<usize> {
    let (lower, upper) = cfg.conflict_region();
    let (a, b) = if r > 0.0 { (lower, 0.0) } else { (0.0, upper) };
    let n = cfg.settings.sign_scan_n;
    let mut changes = 0;
    let mut last = 0.0f64;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let v = oriented_integral(r, x, cfg)?;
        if v != 0.0 {
            if last != 0.0 && v.signum() != last.signum() {
                changes += 1;
            }
            last = v;
        }
    }
    Ok(changes)
}

/// Solve the swing equation for a single report `r ∈ [r_2(0), r_1(0)]`.
///
/// The whole opposing half-domain is bracketed, and the root must be the only
/// sign change of an equispaced scan; otherwise [`SigError::MultipleRoots`] is
/// returned. [`build_swing_function`] instead follows the root branch from
/// `s(0) = 0`, which stays well defined when the integral has extra zeros.
pub fn solve_swing(r: f64, cfg: &GameConfig) -> Result<f64> {
    let (lower, upper) = cfg.conflict_region();
    if !(r >= lower && r <= upper) {
        return Err(SigError::OutOfDomain(r));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let nz = cfg.settings.near_zero;
    if r.abs() < nz {
        // The integrand's magnitude vanishes near 0; extrapolate linearly from ±nz.
        let anchor = solve_swing(nz.copysign(r), cfg)?;
        return Ok(anchor * r.abs() / nz);
    }
    let (a, b) = if r > 0.0 { (lower, 0.0) } else { (0.0, upper) };
    let fa = oriented_integral(r, a, cfg)?;
    let fb = oriented_integral(r, b, cfg)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(SigError::NoSignChange { lo: a, hi: b });
    }
    // The bracket orientation is read off the endpoint values rather than assumed.
    let root = find_root_fallible(|x| oriented_integral(r, x, cfg), a, b)?;

    let changes = count_sign_changes(r, cfg)?;
    if changes > 1 {
        return Err(SigError::MultipleRoots { r, count: changes });
    }
    Ok(root)
}

/// Solve the swing equation at `r` for the root nearest the predicted value
/// `guess`, on the far side of the previous branch value `prev` (the swing
/// function is decreasing).
///
/// The search widens a window around `guess` geometrically, so where a
/// spurious zero of the integral passes close to the branch the smooth
/// continuation wins.
fn continue_swing(r: f64, prev: f64, guess: f64, cfg: &GameConfig) -> Result<f64> {
    let (lower, upper) = cfg.conflict_region();
    let end = if r > 0.0 { lower } else { upper };
    if r.abs() < cfg.settings.near_zero {
        return solve_swing(r, cfg);
    }
    let g = |x: f64| oriented_integral(r, x, cfg);
    if (r == lower || r == upper) && g(end)? == 0.0 {
        return Ok(end);
    }
    // Admissible interval strictly beyond `prev`, up to and including `end`.
    let (lo, hi) = if prev < end { (prev, end) } else { (end, prev) };
    let guess = guess.clamp(lo, hi);
    let g0 = g(guess)?;
    if g0 == 0.0 && guess != prev {
        return Ok(guess);
    }
    let reach = (guess - prev).abs().max(1e-6 * r.abs());
    // Start tight: where another zero branch crosses this one (an X in the
    // zero set of the integral) the roots pair up closely, or touch without a
    // sign change.
    let near = window_search(&g, guess, g0, (lo, hi), 1e-7 * reach, reach)?;
    if let Some(x) = near.root {
        return Ok(x);
    }
    let scale = near.scale;
    let (a, b) = ((guess - reach).max(lo), (guess + reach).min(hi));
    if let Some(x) = tangent_root(&g, a, b, scale)? {
        return Ok(x);
    }
    window_search(&g, guess, g0, (lo, hi), reach, f64::INFINITY)?
        .root
        .ok_or(SigError::NoSignChange { lo, hi })
}

struct WindowResult {
    root: Option<f64>,
    scale: f64,
}

/// Widen a window around `guess` geometrically from `width` up to `max_width`,
/// both sides in step, and solve in the first sub-bracket with a sign change.
fn window_search(
    g: &impl Fn(f64) -> Result<f64>,
    guess: f64,
    g0: f64,
    (lo, hi): (f64, f64),
    mut width: f64,
    max_width: f64,
) -> Result<WindowResult> {
    let mut scale = g0.abs();
    let (mut left, mut g_left) = (guess, g0);
    let (mut right, mut g_right) = (guess, g0);
    loop {
        let mut moved = false;
        if right < hi {
            let x = (guess + width).min(hi);
            let gx = g(x)?;
            scale = scale.max(gx.abs());
            if gx == 0.0 {
                return Ok(WindowResult { root: Some(x), scale });
            }
            if g_right != 0.0 && gx.signum() != g_right.signum() {
                return Ok(WindowResult { root: Some(find_root_fallible(g, right, x)?), scale });
            }
            (right, g_right) = (x, gx);
            moved = true;
        }
        if left > lo {
            let x = (guess - width).max(lo);
            let gx = g(x)?;
            scale = scale.max(gx.abs());
            if gx == 0.0 {
                return Ok(WindowResult { root: Some(x), scale });
            }
            if g_left != 0.0 && gx.signum() != g_left.signum() {
                return Ok(WindowResult { root: Some(find_root_fallible(g, x, left)?), scale });
            }
            (left, g_left) = (x, gx);
            moved = true;
        }
        if !moved || width >= max_width {
            return Ok(WindowResult { root: None, scale });
        }
        width *= 2.0;
    }
}

/// Minimise `|g|` on `[a, b]` by golden-section search; return the minimiser
/// if `g` touches zero there relative to `scale`.
fn tangent_root(g: &impl Fn(f64) -> Result<f64>, a: f64, b: f64, scale: f64) -> Result<Option<f64>> {
    const TOUCH_TOL: f64 = 1e-7;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c)?.abs(), g(d)?.abs());
    while (b - a) > 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
        if gc < gd {
            (b, d, gd) = (d, c, gc);
            c = b - inv_phi * (b - a);
            gc = g(c)?.abs();
        } else {
            (a, c, gc) = (c, d, gd);
            d = a + inv_phi * (b - a);
            gd = g(d)?.abs();
        }
    }
    let (x, gx) = if gc < gd { (c, gc) } else { (d, gd) };
    Ok((gx <= TOUCH_TOL * scale).then_some(x))
}

/// Accuracy diagnostics collected while building the swing table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingDiagnostics {
    /// `|s(r_1(0)) − r_2(0)|` for the solved (unsnapped) endpoint value.
    pub endpoint_error: f64,
    /// Sup-norm of `|s(s(r)) − r|` mixing the interpolated positive branch with the
    /// independently solved negative branch (and vice versa).
    pub involution_error: f64,
    /// Number of nodes on each branch (including 0).
    pub nodes_per_branch: usize,
    /// Nodes where the swing integral has further zeros besides the followed branch.
    pub ambiguous_nodes: usize,
}

/// A strictly decreasing involution on `[r_2(0), r_1(0)]`.
///
/// The positive branch is a monotone cubic through solved nodes; the negative
/// branch is its exact inverse, so `s(s(r)) = r` holds to rounding. The
/// negative branch is also solved independently from the swing equation and
/// kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SwingFunction {
    lower: f64,
    upper: f64,
    positive: Pchip,
    negative_solved: Vec<(f64, f64)>,
    diagnostics: SwingDiagnostics,
}

impl SwingFunction {
    pub fn domain(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn diagnostics(&self) -> SwingDiagnostics {
        self.diagnostics
    }

    fn in_domain(&self, r: f64) -> bool {
        r >= self.lower && r <= self.upper
    }

    /// `s(r)`, or an out-of-domain error outside `[r_2(0), r_1(0)]`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !self.in_domain(r) {
            return Err(SigError::OutOfDomain(r));
        }
        Ok(self.eval_unchecked(r))
    }

    fn eval_unchecked(&self, r: f64) -> f64 {
        if r >= 0.0 {
            self.positive.eval(r)
        } else {
            self.positive.inverse(r)
        }
    }

    /// `s(r)` extended by the sentinels `+∞` below the domain and `−∞` above.
    pub fn eval_ext(&self, r: f64) -> f64 {
        if r < self.lower {
            f64::INFINITY
        } else if r > self.upper {
            f64::NEG_INFINITY
        } else {
            self.eval_unchecked(r)
        }
    }

    /// `s'(r)` inside the domain.
    pub fn derivative(&self, r: f64) -> f64 {
        let r = r.clamp(self.lower, self.upper);
        if r >= 0.0 {
            self.positive.derivative(r)
        } else {
            1.0 / self.positive.derivative(self.positive.inverse(r))
        }
    }

    /// `s^{-1}(y)`; identical to `s(y)` since `s` is an involution.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        self.eval(y)
    }

    /// All table nodes `(r, s(r))`, sorted by `r`.
    pub fn table(&self) -> Vec<(f64, f64)> {
        let (xs, ys) = self.positive.nodes();
        let mut rows: Vec<(f64, f64)> = ys.iter().zip(xs).rev().map(|(&y, &x)| (y, x)).collect();
        rows.pop(); // r = 0 appears on both branches
        rows.extend(xs.iter().zip(ys).map(|(&x, &y)| (x, y)));
        rows
    }

    /// The negative branch as solved directly from the swing equation.
    pub fn negative_branch_solved(&self) -> &[(f64, f64)] {
        &self.negative_solved
    }

    /// Rebuild from a saved [`SwingFunction::table`]. The positive-branch nodes
    /// determine the function exactly; the independently solved negative
    /// branch is not part of the table and comes back empty.
    pub fn from_table(table: &[(f64, f64)], diagnostics: SwingDiagnostics) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = table.iter().copied().filter(|&(r, _)| r >= 0.0).unzip();
        let (Some(&upper), Some(&lower)) = (xs.last(), ys.last()) else {
            return Err(SigError::SwingCheck("swing table has no positive branch".into()));
        };
        if xs[0] != 0.0 || ys[0] != 0.0 || ys.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(SigError::SwingCheck("saved swing table is not a decreasing branch through 0".into()));
        }
        let positive = Pchip::new(xs, ys)?;
        Ok(SwingFunction { lower, upper, positive, negative_solved: Vec::new(), diagnostics })
    }
}

/// Chebyshev–Lobatto nodes on `[0, end]` (dense near both ends).
fn branch_nodes(end: f64, m: usize) -> Vec<f64> {
    (0..=m)
        .map(|i| {
            let c = (std::f64::consts::PI * i as f64 / m as f64).cos();
            end * 0.5 * (1.0 - c)
        })
        .collect()
}

/// Follow the root branch through `nodes` (starting at `nodes[0] = 0`).
fn solve_nodes(nodes: &[f64], cfg: &GameConfig) -> Result<Vec<f64>> {
    let mut ys = Vec::with_capacity(nodes.len());
    ys.push(0.0);
    for i in 1..nodes.len() {
        let r = nodes[i];
        let prev = ys[i - 1];
        let guess = if i >= 2 {
            prev + (prev - ys[i - 2]) * (r - nodes[i - 1]) / (nodes[i - 1] - nodes[i - 2])
        } else {
            -r
        };
        let y = continue_swing(r, prev, guess, cfg).map_err(|e| SigError::SwingNode { r, source: Box::new(e) })?;
        ys.push(y);
    }
    Ok(ys)
}

/// Nodes at which the swing integral has more than one zero in the bracket.
fn ambiguous_nodes(nodes: &[f64], cfg: &GameConfig) -> Result<usize> {
    let counts: Result<Vec<usize>> = nodes
        .par_iter()
        .filter(|&&r| r != 0.0)
        .map(|&r| count_sign_changes(r, cfg))
        .collect();
    Ok(counts?.into_iter().filter(|&c| c > 1).count())
}

const ENDPOINT_TOL: f64 = 1e-4;
const INVOLUTION_TOL: f64 = 1e-3;

/// Tabulate the swing function and check its structural properties.
pub fn build_swing_function(cfg: &GameConfig) -> Result<SwingFunction> {
    let (lower, upper) = cfg.conflict_region();
    let m = cfg.settings.swing_grid_n.div_ceil(2) - 1;

    let xs = branch_nodes(upper, m);
    let neg_r: Vec<f64> = branch_nodes(lower, m);
    let (ys, neg_s) = rayon::join(|| solve_nodes(&xs, cfg), || solve_nodes(&neg_r, cfg));
    let (mut ys, mut neg_s) = (ys?, neg_s?);
    let endpoint_error = (ys[m] - lower).abs();
    ys[0] = 0.0;
    ys[m] = lower;

    let endpoint_error = endpoint_error.max((neg_s[m] - upper).abs());
    neg_s[0] = 0.0;
    neg_s[m] = upper;

    if ys.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SigError::SwingCheck("positive branch is not strictly decreasing".into()));
    }
    if neg_s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SigError::SwingCheck("negative branch is not strictly decreasing".into()));
    }
    if xs.iter().zip(&ys).skip(1).any(|(_, &y)| !(y < 0.0)) || neg_s.iter().skip(1).any(|&v| !(v > 0.0)) {
        return Err(SigError::SwingCheck("swing reports must flip sign".into()));
    }

    let positive = Pchip::new(xs.clone(), ys.clone())?;
    // Negative branch as its own interpolant, for the two-sided involution check.
    let neg_x: Vec<f64> = neg_r.iter().rev().copied().collect();
    let neg_y: Vec<f64> = neg_s.iter().rev().copied().collect();
    let negative = Pchip::new(neg_x, neg_y)?;
    let forward = neg_r.iter().zip(&neg_s).map(|(&r, &s)| (positive.eval(s) - r).abs());
    let backward = xs.iter().zip(&ys).map(|(&r, &s)| (negative.eval(s) - r).abs());
    let involution_error = forward.chain(backward).fold(0.0, f64::max);
    let ambiguous = ambiguous_nodes(&xs, cfg)? + ambiguous_nodes(&neg_r, cfg)?;

    if endpoint_error > ENDPOINT_TOL {
        return Err(SigError::SwingCheck(format!(
            "endpoint identity s(r_1(0)) = r_2(0) off by {endpoint_error:e}"
        )));
    }
    if involution_error > INVOLUTION_TOL {
        return Err(SigError::SwingCheck(format!("involution error {involution_error:e} exceeds {INVOLUTION_TOL}")));
    }

    Ok(SwingFunction {
        lower,
        upper,
        positive,
        negative_solved: neg_r.into_iter().zip(neg_s).collect(),
        diagnostics: SwingDiagnostics {
            endpoint_error,
            involution_error,
            nodes_per_branch: m + 1,
            ambiguous_nodes: ambiguous,
        },
    })
}

/// States beyond which both senders report truthfully.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthfulCutoffs {
    pub theta_1: f64,
    pub theta_2: f64,
}

impl TruthfulCutoffs {
    /// Open interval `(θ_1, θ_2)` membership.
    pub fn contains(&self, theta: f64) -> bool {
        theta > self.theta_1 && theta < self.theta_2
    }
}

/// `θ_2` solves `s(θ) = r_2(θ)` on `(0, r_1(0))`; `θ_1` solves `s(θ) = r_1(θ)`
/// on `(r_2(0), 0)`.
pub fn compute_cutoffs(swing: &SwingFunction, cfg: &GameConfig) -> Result<TruthfulCutoffs> {
    let (lower, upper) = swing.domain();
    let tol = cfg.settings.root_tol;
    let hi = upper.min(cfg.tau_2);
    let theta_2 = find_root(|t| swing.eval_ext(t) - cfg.lower_reach_2(t), 0.0, hi, tol)
        .map_err(|_| SigError::CutoffBracket("theta_2"))?;
    let lo = lower.max(cfg.tau_1);
    let theta_1 = find_root(|t| swing.eval_ext(t) - cfg.upper_reach_1(t), lo, 0.0, tol)
        .map_err(|_| SigError::CutoffBracket("theta_1"))?;
    if !(theta_1 < 0.0 && theta_2 > 0.0) {
        return Err(SigError::CutoffBracket("cutoffs must straddle 0"));
    }
    Ok(TruthfulCutoffs { theta_1, theta_2 })
}

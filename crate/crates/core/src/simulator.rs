//! Monte Carlo play of the direct equilibrium.
//!
//! States are drawn from the prior, reports from the senders' mixed
//! strategies, and the decision maker applies the equilibrium rule. Revelation
//! means the posterior for the drawn pair is concentrated on one state. Draws
//! are split into a fixed number of shards with their own ChaCha stream, and
//! the shard results are merged in shard order, so the output depends only on
//! the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::BeliefEngine;
use crate::error::{Result, SigError};
use crate::model::Sender;
use crate::strategy::StrategyProfile;
use crate::welfare::plus_probability;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    pub draws: usize,
    pub seed: u64,
    /// Uniform θ-bins over Θ.
    pub bins: usize,
    /// Independent random streams; fixed so results do not depend on the
    /// number of threads.
    pub shards: usize,
    /// Sub-points per bin for the bin-averaged analytic curves.
    pub analytic_points: usize,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self { draws: 100_000, seed: 7, bins: 64, shards: 64, analytic_points: 16 }
    }
}

/// Running sums for one θ-bin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
struct Tally {
    n: u64,
    reveal: u64,
    matching: u64,
    plus: u64,
    dm_welfare: f64,
    dm_welfare_sq: f64,
    payoff_1: f64,
    payoff_2: f64,
}

impl Tally {
    fn merge(&mut self, o: &Tally) {
        self.n += o.n;
        self.reveal += o.reveal;
        self.matching += o.matching;
        self.plus += o.plus;
        self.dm_welfare += o.dm_welfare;
        self.dm_welfare_sq += o.dm_welfare_sq;
        self.payoff_1 += o.payoff_1;
        self.payoff_2 += o.payoff_2;
    }
}

/// Monte Carlo estimate of a probability with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

impl Estimate {
    fn proportion(k: u64, n: u64) -> Self {
        if n == 0 {
            return Estimate { mean: f64::NAN, se: f64::NAN, n };
        }
        let p = k as f64 / n as f64;
        Estimate { mean: p, se: (p * (1.0 - p) / n as f64).sqrt(), n }
    }

    /// `|mean − target|` in units of the standard error under the hypothesis
    /// that `target` is the true probability. A target of exactly 0 or 1 must
    /// be matched exactly.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        let se = (target * (1.0 - target) / self.n as f64).sqrt();
        if se > 0.0 {
            d / se
        } else if d <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Per-bin simulation results next to the bin-averaged analytic values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinStats {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub theta_mid: f64,
    pub n: u64,
    pub p_reveal_mc: Estimate,
    pub p_reveal_an: f64,
    pub p_match_mc: Estimate,
    pub p_match_an: f64,
    pub p_plus_mc: Estimate,
    pub p_plus_an: f64,
    /// Mean realised `u_dm(θ)·1{⊕}`.
    pub dm_welfare: f64,
    pub sender_payoff_1: f64,
    pub sender_payoff_2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationStats {
    pub seed: u64,
    pub draws: usize,
    pub bins: Vec<BinStats>,
    /// Mean realised decision-maker welfare over all draws, with its s.e.
    pub dm_welfare: Estimate,
}

impl SimulationStats {
    /// Largest z-score of any MC estimate against its analytic value, over bins
    /// with at least `min_count` draws.
    pub fn max_z(&self, min_count: u64) -> f64 {
        self.bins
            .iter()
            .filter(|b| b.n >= min_count)
            .flat_map(|b| {
                [b.p_reveal_mc.z_score(b.p_reveal_an), b.p_match_mc.z_score(b.p_match_an), b.p_plus_mc.z_score(b.p_plus_an)]
            })
            .fold(0.0, f64::max)
    }
}

/// Analytic `P(the posterior is degenerate | θ)`: outside the cutoffs both
/// senders are truthful; inside, the state is learned exactly when the sender
/// whose preferred alternative is wrong (sender 2 for θ ≥ 0, sender 1 below)
/// tells the truth.
pub fn p_reveal(profile: &StrategyProfile, theta: f64) -> f64 {
    if !profile.cutoffs().contains(theta) {
        return 1.0;
    }
    let informative = if theta >= 0.0 { Sender::Two } else { Sender::One };
    profile.atom(informative, theta)
}

/// Analytic `P(matching reports | θ) = α_1(θ)·α_2(θ)`.
pub fn p_match(profile: &StrategyProfile, theta: f64) -> f64 {
    if !profile.cutoffs().contains(theta) {
        return 1.0;
    }
    profile.atom(Sender::One, theta) * profile.atom(Sender::Two, theta)
}

/// One row of the revelation/matching curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure2Point {
    pub theta: f64,
    pub p_reveal: f64,
    pub p_match: f64,
}

/// Analytic revelation and matching curves on `n` equispaced states.
pub fn figure2_data(profile: &StrategyProfile, n: usize) -> Vec<Figure2Point> {
    let cfg = profile.cfg();
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let theta = cfg.theta_min + (cfg.theta_max - cfg.theta_min) * i as f64 / (n - 1) as f64;
            Figure2Point { theta, p_reveal: p_reveal(profile, theta), p_match: p_match(profile, theta) }
        })
        .collect()
}

fn run_shard(engine: &BeliefEngine<'_>, settings: &SimulationSettings, shard: usize, draws: usize) -> Vec<Tally> {
    let profile = engine.profile();
    let cfg = profile.cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(shard as u64);
    let width = cfg.settings.degenerate_width;
    let span = cfg.theta_max - cfg.theta_min;
    let mut tallies = vec![Tally::default(); settings.bins];
    for _ in 0..draws {
        let theta = cfg.dist.quantile(rng.random::<f64>());
        let r_1 = profile.sample_report(Sender::One, theta, &mut rng);
        let r_2 = profile.sample_report(Sender::Two, theta, &mut rng);
        let plus = engine.decide(r_1, r_2).is_plus();
        let bin = (((theta - cfg.theta_min) / span * settings.bins as f64) as usize).min(settings.bins - 1);
        let t = &mut tallies[bin];
        t.n += 1;
        t.reveal += engine.structure(r_1, r_2).is_degenerate(width) as u64;
        t.matching += (r_1 == r_2) as u64;
        t.plus += plus as u64;
        let win = |j: Sender| if plus { cfg.u(j, theta) } else { 0.0 };
        let w = if plus { cfg.u_dm.eval(theta) } else { 0.0 };
        t.dm_welfare += w;
        t.dm_welfare_sq += w * w;
        t.payoff_1 += win(Sender::One) - cfg.misreport_cost(Sender::One, r_1, theta);
        t.payoff_2 += win(Sender::Two) - cfg.misreport_cost(Sender::Two, r_2, theta);
    }
    tallies
}

/// Prior-weighted average of `g` over `[a, b]` by composite Simpson, split at
/// the cutoffs and at 0 where the curves jump.
fn bin_average(profile: &StrategyProfile, a: f64, b: f64, points: usize, g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let cfg = profile.cfg();
    let c = profile.cutoffs();
    let mut cuts = vec![a];
    cuts.extend([c.theta_1, 0.0, c.theta_2].into_iter().filter(|&x| x > a && x < b));
    cuts.push(b);
    let m = points.max(2).next_multiple_of(2);
    let (mut num, mut den) = (0.0, 0.0);
    for piece in cuts.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        let h = (hi - lo) / m as f64;
        for i in 0..=m {
            // Stay off the piece ends so each side of a jump sees its own value.
            let t = (lo + h * i as f64).clamp(lo + 1e-12 * h, hi - 1e-12 * h);
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let f = cfg.f(t) * h;
            num += w * f * g(t)?;
            den += w * f;
        }
    }
    Ok(num / den)
}

/// Play `settings.draws` rounds and bin the outcomes by θ.
pub fn run_sim(profile: &StrategyProfile, settings: &SimulationSettings) -> Result<SimulationStats> {
    if settings.draws == 0 || settings.bins == 0 || settings.shards == 0 {
        return Err(SigError::InvalidParameter("draws, bins and shards must be positive".into()));
    }
    let engine = BeliefEngine::new(profile);
    let cfg = profile.cfg();
    let per = settings.draws / settings.shards;
    let extra = settings.draws % settings.shards;
    let shards: Vec<Vec<Tally>> = (0..settings.shards)
        .into_par_iter()
        .map(|s| run_shard(&engine, settings, s, per + usize::from(s < extra)))
        .collect();
    let mut tallies = vec![Tally::default(); settings.bins];
    for shard in &shards {
        for (acc, t) in tallies.iter_mut().zip(shard) {
            acc.merge(t);
        }
    }

    let span = cfg.theta_max - cfg.theta_min;
    let bins: Result<Vec<BinStats>> = tallies
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let lo = cfg.theta_min + span * i as f64 / settings.bins as f64;
            let hi = cfg.theta_min + span * (i + 1) as f64 / settings.bins as f64;
            let pts = settings.analytic_points;
            let mean = |x: f64| if t.n > 0 { x / t.n as f64 } else { f64::NAN };
            Ok(BinStats {
                theta_lo: lo,
                theta_hi: hi,
                theta_mid: 0.5 * (lo + hi),
                n: t.n,
                p_reveal_mc: Estimate::proportion(t.reveal, t.n),
                p_reveal_an: bin_average(profile, lo, hi, pts, |x| Ok(p_reveal(profile, x)))?,
                p_match_mc: Estimate::proportion(t.matching, t.n),
                p_match_an: bin_average(profile, lo, hi, pts, |x| Ok(p_match(profile, x)))?,
                p_plus_mc: Estimate::proportion(t.plus, t.n),
                p_plus_an: bin_average(profile, lo, hi, pts, |x| plus_probability(profile, x))?,
                dm_welfare: mean(t.dm_welfare),
                sender_payoff_1: mean(t.payoff_1),
                sender_payoff_2: mean(t.payoff_2),
            })
        })
        .collect();
    let bins = bins?;

    let n = settings.draws as f64;
    let dm_mean = tallies.iter().map(|t| t.dm_welfare).sum::<f64>() / n;
    let dm_sq = tallies.iter().map(|t| t.dm_welfare_sq).sum::<f64>() / n;
    let var = (dm_sq - dm_mean * dm_mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(SimulationStats {
        seed: settings.seed,
        draws: settings.draws,
        bins,
        dm_welfare: Estimate { mean: dm_mean, se: (var / n).sqrt(), n: settings.draws as u64 },
    })
}

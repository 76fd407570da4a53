//! One function per subcommand. Each writes its files into the output
//! directory, prints a short human-readable summary, and records a manifest.

use serde::Serialize;
use sigcomp_core::belief::{BeliefEngine, BeliefKind};
use sigcomp_core::benchmark::{
    benchmark_welfares, build_fre_profile, check_equilibrium, default_report_grid, state_grid,
    truthful_deviation_gain, BenchmarkWelfares, DeviationReport, PureBeliefPolicy,
};
use sigcomp_core::model::Sender;
use sigcomp_core::simulator::run_sim;
use sigcomp_core::strategy::StrategyProfile;
use sigcomp_core::verifier::{verify_direct_equilibrium, VerifierSettings};
use sigcomp_core::welfare::welfare_report;
use sigcomp_core::SigError;

use crate::artifacts::{CutoffsFile, Run, SwingRow, CUTOFFS_JSON, SWING_CSV};
use crate::error::CliError;

// ---------------------------------------------------------------------------
// solve / strategies
// ---------------------------------------------------------------------------

/// `strategies.csv` row; supports are empty where the sender is truthful.
#[derive(Debug, Serialize)]
struct StrategyRow {
    theta: f64,
    alpha_1: f64,
    alpha_2: f64,
    s1_lo: Option<f64>,
    s1_hi: Option<f64>,
    s2_lo: Option<f64>,
    s2_hi: Option<f64>,
}

/// `densities.csv` row: both lying densities at one state and report.
#[derive(Debug, Serialize)]
struct DensityRow {
    theta: f64,
    r: f64,
    psi_1: f64,
    psi_2: f64,
}

fn strategy_rows(profile: &StrategyProfile, n: usize) -> Vec<StrategyRow> {
    let cfg = profile.cfg();
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let theta = cfg.theta_min + (cfg.theta_max - cfg.theta_min) * i as f64 / (n - 1) as f64;
            let s1 = profile.state(Sender::One, theta);
            let s2 = profile.state(Sender::Two, theta);
            StrategyRow {
                theta,
                alpha_1: s1.atom_mass,
                alpha_2: s2.atom_mass,
                s1_lo: s1.support.map(|s| s.0),
                s1_hi: s1.support.map(|s| s.1),
                s2_lo: s2.support.map(|s| s.0),
                s2_hi: s2.support.map(|s| s.1),
            }
        })
        .collect()
}

fn density_rows(profile: &StrategyProfile, thetas: &[f64], n: usize) -> Vec<DensityRow> {
    let (lo, hi) = profile.cfg().conflict_region();
    let n = n.max(2);
    thetas
        .iter()
        .flat_map(|&theta| {
            (0..n).map(move |i| {
                let r = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                DensityRow {
                    theta,
                    r,
                    psi_1: profile.density(Sender::One, r, theta),
                    psi_2: profile.density(Sender::Two, r, theta),
                }
            })
        })
        .collect()
}

fn write_strategies(run: &mut Run<'_>, profile: &StrategyProfile, states: usize, density_at: &[f64]) -> Result<(), CliError> {
    run.write_csv("strategies.csv", strategy_rows(profile, states))?;
    if !density_at.is_empty() {
        run.write_csv("densities.csv", density_rows(profile, density_at, 401))?;
    }
    Ok(())
}

pub fn solve(run: &mut Run<'_>, states: usize, density_at: &[f64]) -> Result<(), CliError> {
    let cfg = run.config.cfg.clone();
    let profile = run.timed("solve", || StrategyProfile::solve(&cfg))?;
    let swing = profile.swing();
    let (conflict_lo, conflict_hi) = cfg.conflict_region();
    let cutoffs = profile.cutoffs();
    let summary = CutoffsFile {
        solve_sha256: run.config.solve_sha256.clone(),
        theta_1: cutoffs.theta_1,
        theta_2: cutoffs.theta_2,
        tau_1: cfg.tau_1,
        tau_2: cfg.tau_2,
        conflict_lo,
        conflict_hi,
        swing_diagnostics: swing.diagnostics(),
    };
    run.write_csv(SWING_CSV, swing.table().into_iter().map(|(r, s_of_r)| SwingRow { r, s_of_r }))?;
    run.write_json(CUTOFFS_JSON, &summary)?;
    write_strategies(run, &profile, states, density_at)?;
    let d = swing.diagnostics();
    println!("conflict region  [{conflict_lo:.6}, {conflict_hi:.6}]");
    println!("cutoffs          θ_1 = {:.9}  θ_2 = {:.9}", cutoffs.theta_1, cutoffs.theta_2);
    println!(
        "swing table      {} nodes/branch, involution error {:.2e}, endpoint error {:.2e}",
        d.nodes_per_branch, d.involution_error, d.endpoint_error
    );
    Ok(())
}

pub fn strategies(run: &mut Run<'_>, states: usize, density_at: &[f64]) -> Result<(), CliError> {
    let profile = run.profile()?;
    write_strategies(run, &profile, states, density_at)?;
    println!("wrote strategies on {} states", states.max(2));
    Ok(())
}

// ---------------------------------------------------------------------------
// beliefs
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct BeliefSummary {
    r_1: f64,
    r_2: f64,
    kind: BeliefKind,
    support: (f64, f64),
    atoms: Vec<(f64, f64)>,
    continuous: Option<(f64, f64)>,
    continuous_mass: f64,
    u_dm: f64,
    action: &'static str,
    bayes_action: &'static str,
    quantiles: Vec<(f64, f64)>,
}

fn action_name(plus: bool) -> &'static str {
    if plus {
        "plus"
    } else {
        "minus"
    }
}

pub fn beliefs(run: &mut Run<'_>, r_1: f64, r_2: f64) -> Result<(), CliError> {
    let profile = run.profile()?;
    let engine = BeliefEngine::new(&profile);
    let post = engine.posterior(r_1, r_2)?;
    let probs = [0.05, 0.25, 0.5, 0.75, 0.95];
    let q = engine.posterior_quantiles(&post, &probs)?;
    let summary = BeliefSummary {
        r_1,
        r_2,
        kind: post.kind,
        support: (post.support_lo, post.support_hi),
        atoms: post.points.clone(),
        continuous: post.continuous,
        continuous_mass: post.continuous_mass,
        u_dm: post.u_dm_expected,
        action: action_name(post.action.is_plus()),
        bayes_action: action_name(post.u_dm_expected >= 0.0),
        quantiles: probs.iter().copied().zip(q).collect(),
    };
    run.write_json("beliefs.json", &summary)?;
    println!("reports          r_1 = {r_1}  r_2 = {r_2}  ({:?})", summary.kind);
    println!("support          [{:.6}, {:.6}]", summary.support.0, summary.support.1);
    println!("U_dm             {:.6}", summary.u_dm);
    println!("action           {} (sign of U_dm: {})", summary.action, summary.bayes_action);
    for (p, v) in &summary.quantiles {
        println!("  q{:<4}          {v:.6}", p * 100.0);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

pub fn verify(run: &mut Run<'_>, settings: VerifierSettings) -> Result<(), CliError> {
    let profile = run.profile()?;
    let report = run.timed("verify", || verify_direct_equilibrium(&profile, settings))?;
    run.write_json("verification.json", &report)?;
    println!(
        "sender incentives: max gain {:.3e}, max support spread {:.3e}, tolerance {:.3e} → {}",
        report.max_gain,
        report.max_spread,
        report.tolerance,
        if report.passed { "PASS" } else { "FAIL" }
    );
    if let Some(w) = report.worst_state {
        println!(
            "worst state:       sender {} at θ = {:.6}, best report {:.6}, gain {:.3e}, spread {:.3e}",
            w.sender.index(),
            w.theta,
            w.best_report,
            w.max_gain,
            w.spread
        );
    }
    if let Some(c) = &report.dm_consistency {
        println!(
            "decision maker (informational): {} of {} off-locus pairs where sign(U_dm) differs from the swing rule, \
             {} monotonicity violations",
            c.disagreements,
            c.pairs - c.near_locus,
            c.fosd_violations
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Threshold(format!(
            "violation {:.3e} exceeds tolerance {:.3e}",
            report.violation, report.tolerance
        )))
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct SimRow {
    theta_bin: f64,
    n: u64,
    p_reveal_mc: f64,
    p_reveal_an: f64,
    p_match_mc: f64,
    p_match_an: f64,
    p_plus: f64,
    dm_welfare: f64,
}

#[derive(Debug, Serialize)]
struct SimSummary {
    seed: u64,
    draws: usize,
    bins: usize,
    dm_welfare: f64,
    dm_welfare_se: f64,
    max_abs_z: f64,
}

pub fn simulate(run: &mut Run<'_>) -> Result<(), CliError> {
    let profile = run.profile()?;
    let settings = run.config.raw.simulation.clone();
    let stats = run.timed("simulate", || run_sim(&profile, &settings))?;
    run.write_csv(
        "simulation.csv",
        stats.bins.iter().map(|b| SimRow {
            theta_bin: b.theta_mid,
            n: b.n,
            p_reveal_mc: b.p_reveal_mc.mean,
            p_reveal_an: b.p_reveal_an,
            p_match_mc: b.p_match_mc.mean,
            p_match_an: b.p_match_an,
            p_plus: b.p_plus_mc.mean,
            dm_welfare: b.dm_welfare,
        }),
    )?;
    let summary = SimSummary {
        seed: stats.seed,
        draws: stats.draws,
        bins: stats.bins.len(),
        dm_welfare: stats.dm_welfare.mean,
        dm_welfare_se: stats.dm_welfare.se,
        max_abs_z: stats.max_z(1000),
    };
    run.write_json("simulation.json", &summary)?;
    println!(
        "{} draws (seed {}), DM welfare {:.6} ± {:.6}, max |z| vs analytic {:.2} over bins with ≥ 1000 draws",
        summary.draws, summary.seed, summary.dm_welfare, summary.dm_welfare_se, summary.max_abs_z
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// welfare
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct WelfareSummary {
    w_fi: f64,
    w_de: f64,
    w_bar: f64,
    prior_only: f64,
    q_star: Option<f64>,
    ordering_holds: bool,
}

pub fn welfare(run: &mut Run<'_>, q_grid: &[f64], noise_sds: &[f64]) -> Result<(), CliError> {
    let profile = run.profile()?;
    let report = run.timed("welfare", || welfare_report(&profile, q_grid, noise_sds))?;
    run.write_csv("frontier.csv", report.frontier.iter())?;
    let summary = WelfareSummary {
        w_fi: report.w_fi,
        w_de: report.w_de,
        w_bar: report.w_bar,
        prior_only: report.prior_only,
        q_star: report.q_star,
        ordering_holds: report.ordering_holds(1e-9),
    };
    run.write_json("welfare.json", &summary)?;
    println!("full information      W_fi  = {:.6}", summary.w_fi);
    println!("direct equilibrium    W_de  = {:.6}", summary.w_de);
    println!("upper bound           W̄     = {:.6}", summary.w_bar);
    println!("prior only                  = {:.6}", summary.prior_only);
    match summary.q_star {
        Some(q) => println!("inquisitorial crossover q* = {q:.6} (exact signal)"),
        None => println!("inquisitorial crossover q*: none in [0, 1]"),
    }
    println!("frontier: {} rows", report.frontier.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// benchmarks
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PolicyTrace {
    policy: PureBeliefPolicy,
    max_gain_1: f64,
    max_gain_2: f64,
    worst_theta: Option<f64>,
    worst_sender: Option<usize>,
    worst_report: Option<f64>,
}

impl From<&DeviationReport> for PolicyTrace {
    fn from(r: &DeviationReport) -> Self {
        PolicyTrace {
            policy: r.policy,
            max_gain_1: r.max_gain_1,
            max_gain_2: r.max_gain_2,
            worst_theta: r.worst.map(|w| w.theta),
            worst_sender: r.worst.map(|w| w.sender.index()),
            worst_report: r.worst.map(|w| w.best_report),
        }
    }
}

#[derive(Debug, Serialize)]
struct FreTrace {
    applicable: bool,
    reason: Option<String>,
    pooling_report: Option<f64>,
    receiver_efficient_states: Option<(usize, usize)>,
    policies: Vec<PolicyTrace>,
    /// Gain predicted for the pooling sender at `r_1(0)/2` under unprejudiced beliefs.
    predicted_unprejudiced_gain: Option<f64>,
    observed_unprejudiced_gain: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BenchmarkSummary {
    welfare: BenchmarkWelfares,
    /// Sender 1's gain from a small lie under truth-telling with literal beliefs.
    truthful_deviation_gain: f64,
    fre: FreTrace,
}

fn fre_trace(cfg: &sigcomp_core::model::GameConfig) -> FreTrace {
    let profile = match build_fre_profile(cfg) {
        Ok(p) => p,
        Err(e @ SigError::FreAssumption { .. }) => {
            return FreTrace {
                applicable: false,
                reason: Some(e.to_string()),
                pooling_report: None,
                receiver_efficient_states: None,
                policies: Vec::new(),
                predicted_unprejudiced_gain: None,
                observed_unprejudiced_gain: None,
            }
        }
        Err(e) => unreachable!("build_fre_profile only checks its assumption: {e}"),
    };
    let reach = cfg.upper_reach_1(0.0);
    let states = state_grid(cfg, 129);
    let grid = default_report_grid(cfg, 512);
    let efficient = state_grid(cfg, 1000).into_iter().filter(|&t| profile.is_receiver_efficient_at(t, cfg)).count();
    let policies: Vec<PolicyTrace> =
        [PureBeliefPolicy::Supporting, PureBeliefPolicy::TrustSeparating, PureBeliefPolicy::SplitCandidates]
            .into_iter()
            .map(|policy| PolicyTrace::from(&check_equilibrium(&profile.with_policy(policy), cfg, &states, &grid)))
            .collect();
    let probe = reach / 2.0;
    let observed =
        check_equilibrium(&profile.with_policy(PureBeliefPolicy::TrustSeparating), cfg, &[probe], &grid).max_gain_1;
    FreTrace {
        applicable: true,
        reason: None,
        pooling_report: Some(reach),
        receiver_efficient_states: Some((efficient, 1000)),
        policies,
        predicted_unprejudiced_gain: Some(cfg.k_1 * cfg.cost_1.eval(reach, probe)),
        observed_unprejudiced_gain: Some(observed),
    }
}

pub fn benchmarks(run: &mut Run<'_>) -> Result<(), CliError> {
    let cfg = run.config.cfg.clone();
    let welfare = benchmark_welfares(&cfg)?;
    let fre = run.timed("fre", || fre_trace(&cfg));
    let summary = BenchmarkSummary { welfare, truthful_deviation_gain: truthful_deviation_gain(&cfg, 0.05), fre };
    run.write_json("benchmarks.json", &summary)?;
    let w = &summary.welfare;
    println!("full information / aligned / verifiable  {:.6}", w.full_information);
    println!("cheap talk: babbling                     {:.6}", w.babbling);
    println!("cheap talk: threshold partition          {:.6}", w.partition);
    println!("truth-telling, sender 1 lies by 0.05:    gain {:.6}", summary.truthful_deviation_gain);
    let f = &summary.fre;
    if !f.applicable {
        println!("pooling witness: not applicable ({})", f.reason.as_deref().unwrap_or(""));
        return Ok(());
    }
    println!("pooling witness: sender 1 reports {:.6} on [0, {0:.6}]", f.pooling_report.unwrap_or(f64::NAN));
    if let Some((k, n)) = f.receiver_efficient_states {
        println!("  receiver-efficient on {k}/{n} states");
    }
    for p in &f.policies {
        println!("  {:<18} max gain sender 1 {:.3e}, sender 2 {:.3e}", format!("{:?}", p.policy), p.max_gain_1, p.max_gain_2);
    }
    println!(
        "  unprejudiced gain at r_1(0)/2: observed {:.6}, predicted {:.6}",
        f.observed_unprejudiced_gain.unwrap_or(f64::NAN),
        f.predicted_unprejudiced_gain.unwrap_or(f64::NAN)
    );
    Ok(())
}

//! `sigcomp`: solve, verify, simulate and evaluate the direct equilibrium of
//! the costly-signalling competition game.
//!
//! Exit codes: 0 on success, 1 when verification thresholds are exceeded or an
//! output cannot be written, 2 for an invalid configuration, 3 when the solver
//! fails numerically.

// `!(a < b)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sigcomp_core::verifier::VerifierSettings;

use crate::artifacts::Run;
use crate::config::Overrides;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "sigcomp", version, about, long_about = None)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Game configuration (TOML).
    #[arg(long, global = true, default_value = "configs/symq.toml")]
    config: PathBuf,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Simulation seed (overrides `[simulation].seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Simulation draws (overrides `[simulation].draws`).
    #[arg(long, global = true)]
    draws: Option<usize>,

    /// Swing-table resolution (overrides `[numerics].swing_grid_n`).
    #[arg(long, global = true)]
    grid_n: Option<usize>,

    /// Multiply every numerical tolerance by this factor.
    #[arg(long, global = true)]
    tol_scale: Option<f64>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct StrategyArgs {
    /// Number of equispaced states in strategies.csv.
    #[arg(long, default_value_t = 201)]
    states: usize,

    /// States at which to tabulate the lying densities (densities.csv).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    density_at: Vec<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the swing function and cutoffs; write swing.csv, cutoffs.json, strategies.csv.
    Solve(StrategyArgs),

    /// Tabulate atoms, supports and optionally densities over a state grid.
    Strategies(StrategyArgs),

    /// Posterior, expected payoff and action for one report pair.
    Beliefs {
        #[arg(long, allow_hyphen_values = true)]
        r1: f64,
        #[arg(long, allow_hyphen_values = true)]
        r2: f64,
    },

    /// Certify the sender incentive constraints; exits 1 when they fail.
    Verify {
        /// States per sender (rounded to the grid).
        #[arg(long, default_value_t = VerifierSettings::default().state_grid_n)]
        states: usize,
        /// Deviation reports across the conflict region.
        #[arg(long, default_value_t = VerifierSettings::default().report_grid_n)]
        reports: usize,
        /// Side of the report-pair grid for the informational Bayes check (0 skips it).
        #[arg(long, default_value_t = VerifierSettings::default().pair_grid_n)]
        pair_grid_n: usize,
        /// Allowed gain as a fraction of the payoff scale.
        #[arg(long, default_value_t = VerifierSettings::default().tolerance_factor)]
        tolerance_factor: f64,
    },

    /// Monte Carlo play of the equilibrium, binned by state.
    Simulate,

    /// Welfare table and the inquisitorial frontier.
    Welfare {
        /// Probability grid `start:end:step`.
        #[arg(long, default_value = "0:1:0.05")]
        q_grid: String,
        /// Noise standard deviations of the inquisitorial signal.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        noise_sd: Vec<f64>,
    },

    /// Cheap-talk and verifiable-report welfare, and the pooling-witness trace.
    Benchmarks,
}

/// Parse `start:end:step` into an inclusive grid.
fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("grid `{spec}` must look like start:end:step with step > 0"));
    let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [start, end, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0 && end >= start && start.is_finite() && end.is_finite()) {
        return Err(bad());
    }
    let steps = ((end - start) / step).round();
    if (start + steps * step - end).abs() > 1e-9 * step.max(end.abs()) {
        return Err(CliError::Config(format!("grid `{spec}`: the step does not divide the range")));
    }
    // Round away the accumulated representation error of `i·step`.
    Ok((0..=steps as usize).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let overrides = Overrides { seed: g.seed, draws: g.draws, grid_n: g.grid_n, tol_scale: g.tol_scale };
    let config = config::load(&g.config, &overrides)?;
    let name = match &cli.command {
        Command::Solve(_) => "solve",
        Command::Strategies(_) => "strategies",
        Command::Beliefs { .. } => "beliefs",
        Command::Verify { .. } => "verify",
        Command::Simulate => "simulate",
        Command::Welfare { .. } => "welfare",
        Command::Benchmarks => "benchmarks",
    };
    let mut run = Run::new(&config, &g.out, name)?;
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(&mut run, a.states, &a.density_at),
        Command::Strategies(a) => commands::strategies(&mut run, a.states, &a.density_at),
        Command::Beliefs { r1, r2 } => commands::beliefs(&mut run, *r1, *r2),
        Command::Verify { states, reports, pair_grid_n, tolerance_factor } => commands::verify(
            &mut run,
            VerifierSettings {
                state_grid_n: *states,
                report_grid_n: *reports,
                pair_grid_n: *pair_grid_n,
                tolerance_factor: *tolerance_factor,
                ..Default::default()
            },
        ),
        Command::Simulate => commands::simulate(&mut run),
        Command::Welfare { q_grid, noise_sd } => {
            parse_grid(q_grid).and_then(|q| commands::welfare(&mut run, &q, noise_sd))
        }
        Command::Benchmarks => commands::benchmarks(&mut run),
    };
    // The manifest is written even when verification fails.
    match result {
        Err(e @ CliError::Threshold(_)) => {
            run.finish()?;
            Err(e)
        }
        Err(e) => Err(e),
        Ok(()) => run.finish(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sigcomp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

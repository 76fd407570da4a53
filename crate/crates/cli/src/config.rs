//! Config ingestion, command-line overrides and content hashing.
//!
//! A config is a TOML file with the sections `[distribution]`, `[utilities]`,
//! `[costs]` and the optional `[numerics]` and `[simulation]`:
//!
//! ```toml
//! [distribution]
//! family = "uniform"            # or "truncated_normal" with `mean`, `sd`
//! theta_min = -1.0
//! theta_max = 1.0
//!
//! [utilities]                   # affine | polynomial | tabulated
//! dm = { family = "affine", slope = 1.0, intercept = 0.0 }
//! sender_1 = { family = "affine", slope = 1.0, intercept = 0.5 }
//! sender_2 = { family = "polynomial", coefficients = [-0.5, 1.0] }
//!
//! [costs]                       # C_j(r, θ) = scale·|r − θ|^exponent
//! k_1 = 1.0
//! k_2 = 1.0
//! sender_1 = { family = "power", exponent = 2.0 }
//! sender_2 = { family = "power", exponent = 2.0, scale = 1.0 }
//! ```
//!
//! `[numerics]` and `[simulation]` accept any subset of the fields of
//! [`NumericSettings`] and [`SimulationSettings`]; unknown keys are rejected.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use sigcomp_core::model::{build_config, GameConfig, RawSpec};
use sigcomp_core::simulator::SimulationSettings;

use crate::error::CliError;

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub grid_n: Option<usize>,
    pub tol_scale: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, raw: &mut RawSpec) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            raw.simulation.seed = seed;
        }
        if let Some(draws) = self.draws {
            raw.simulation.draws = draws;
        }
        if let Some(n) = self.grid_n {
            raw.numerics.swing_grid_n = n;
        }
        if let Some(f) = self.tol_scale {
            if !(f > 0.0 && f.is_finite()) {
                return Err(CliError::Config("--tol-scale must be positive".into()));
            }
            raw.numerics = raw.numerics.scale_tolerances(f);
        }
        Ok(())
    }
}

/// A validated configuration together with its provenance hashes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub raw: RawSpec,
    pub cfg: GameConfig,
    /// SHA-256 of the effective (override-applied) specification.
    pub config_sha256: String,
    /// SHA-256 of everything that determines the solve, i.e. the effective
    /// specification with `[simulation]` reset; solve artifacts are reused
    /// when this matches.
    pub solve_sha256: String,
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn canonical(raw: &RawSpec) -> Result<String, CliError> {
    toml::to_string(raw).map_err(|e| CliError::Config(format!("cannot serialise config: {e}")))
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut raw: RawSpec =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
    overrides.apply(&mut raw)?;
    let cfg = build_config(&raw)?;
    let config_sha256 = sha256_hex(&canonical(&raw)?);
    let solve_sha256 = sha256_hex(&canonical(&RawSpec { simulation: SimulationSettings::default(), ..raw.clone() })?);
    Ok(LoadedConfig { path: path.to_path_buf(), raw, cfg, config_sha256, solve_sha256 })
}

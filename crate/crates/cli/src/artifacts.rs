//! Output files, the run manifest, and reuse of saved solve results.
//!
//! Every CSV starts with a `#` comment line naming the command and the config
//! hash; every JSON document carries a `config_sha256` field. Data files are
//! byte-identical across runs with the same config and seed; only the run
//! manifest records wall-clock timings.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sigcomp_core::numerics::NumericSettings;
use sigcomp_core::strategy::StrategyProfile;
use sigcomp_core::swing::{SwingDiagnostics, SwingFunction, TruthfulCutoffs};

use crate::config::LoadedConfig;
use crate::error::CliError;

pub const SWING_CSV: &str = "swing.csv";
pub const CUTOFFS_JSON: &str = "cutoffs.json";

/// Provenance record for one command invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    pub solve_sha256: String,
    pub numerics: NumericSettings,
    pub seed: u64,
    pub threads: usize,
    pub reused_solve: bool,
    pub outputs: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

/// Collects outputs and timings for one command, then writes its manifest.
pub struct Run<'a> {
    pub config: &'a LoadedConfig,
    pub out_dir: PathBuf,
    command: &'static str,
    outputs: Vec<String>,
    timings: BTreeMap<String, f64>,
    reused_solve: bool,
}

impl<'a> Run<'a> {
    pub fn new(config: &'a LoadedConfig, out_dir: &Path, command: &'static str) -> Result<Self, CliError> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Run {
            config,
            out_dir: out_dir.to_path_buf(),
            command,
            outputs: Vec::new(),
            timings: BTreeMap::new(),
            reused_solve: false,
        })
    }

    /// Time a stage and record it under `name`.
    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let v = f();
        self.timings.insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        v
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    /// Write serialisable rows as CSV behind a provenance comment line.
    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
        let path = self.path(name);
        let mut file = BufWriter::new(File::create(path)?);
        writeln!(file, "# sigcomp {} config_sha256={}", self.command, self.config.config_sha256)?;
        let mut w = csv::Writer::from_writer(file);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write `{ "config_sha256": …, <value fields> }` as pretty JSON.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut doc = serde_json::to_value(value)?;
        let hash = serde_json::Value::String(self.config.config_sha256.clone());
        match doc.as_object_mut() {
            Some(obj) => {
                obj.insert("config_sha256".into(), hash);
            }
            None => doc = serde_json::json!({ "config_sha256": hash, "value": doc }),
        }
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Load the profile, reusing saved solve artifacts when their hash matches.
    pub fn profile(&mut self) -> Result<StrategyProfile, CliError> {
        let start = Instant::now();
        let (profile, reused) = match load_saved(self.config, &self.out_dir) {
            Some(p) => (p, true),
            None => (StrategyProfile::solve(&self.config.cfg)?, false),
        };
        self.reused_solve = reused;
        self.timings.insert(if reused { "load_solve" } else { "solve" }.into(), start.elapsed().as_secs_f64() * 1e3);
        Ok(profile)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        let name = format!("manifest_{}.json", self.command);
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: self.command.to_string(),
            config_path: self.config.path.display().to_string(),
            config_sha256: self.config.config_sha256.clone(),
            solve_sha256: self.config.solve_sha256.clone(),
            numerics: self.config.raw.numerics.clone(),
            seed: self.config.raw.simulation.seed,
            threads: rayon::current_num_threads(),
            reused_solve: self.reused_solve,
            outputs: std::mem::take(&mut self.outputs),
            timings_ms: std::mem::take(&mut self.timings),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.out_dir.join(name), text)?;
        Ok(())
    }
}

/// The scalar solve outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffsFile {
    pub solve_sha256: String,
    pub theta_1: f64,
    pub theta_2: f64,
    pub tau_1: f64,
    pub tau_2: f64,
    pub conflict_lo: f64,
    pub conflict_hi: f64,
    pub swing_diagnostics: SwingDiagnostics,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SwingRow {
    pub r: f64,
    pub s_of_r: f64,
}

fn load_saved(config: &LoadedConfig, dir: &Path) -> Option<StrategyProfile> {
    let text = std::fs::read_to_string(dir.join(CUTOFFS_JSON)).ok()?;
    let saved: CutoffsFile = serde_json::from_str(&text).ok()?;
    if saved.solve_sha256 != config.solve_sha256 {
        return None;
    }
    let mut reader =
        csv::ReaderBuilder::new().comment(Some(b'#')).from_path(dir.join(SWING_CSV)).ok()?;
    let table: Vec<(f64, f64)> =
        reader.deserialize::<SwingRow>().map(|row| row.map(|r| (r.r, r.s_of_r))).collect::<Result<_, _>>().ok()?;
    let swing = SwingFunction::from_table(&table, saved.swing_diagnostics).ok()?;
    if swing.domain() != config.cfg.conflict_region() {
        return None;
    }
    let cutoffs = TruthfulCutoffs { theta_1: saved.theta_1, theta_2: saved.theta_2 };
    Some(StrategyProfile::new(config.cfg.clone(), swing, cutoffs))
}

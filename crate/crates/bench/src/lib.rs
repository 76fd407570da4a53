//! Shared fixtures for the criterion benchmarks.

use sigcomp_core::model::{build_config, GameConfig, RawSpec};
use sigcomp_core::strategy::StrategyProfile;

/// The symmetric quadratic benchmark at a given swing-table resolution.
pub fn symq_config(swing_grid_n: usize) -> GameConfig {
    let mut raw = RawSpec::symmetric_quadratic();
    raw.numerics.swing_grid_n = swing_grid_n;
    build_config(&raw).expect("benchmark config is valid")
}

/// The benchmark with sender 2 facing twice the lying intensity.
pub fn asymmetric_config() -> GameConfig {
    let mut raw = RawSpec::symmetric_quadratic();
    raw.costs.k_2 = 2.0;
    build_config(&raw).expect("benchmark config is valid")
}

/// A solved profile, built once per benchmark binary.
pub fn symq_profile() -> StrategyProfile {
    StrategyProfile::solve(&symq_config(257)).expect("benchmark profile solves")
}

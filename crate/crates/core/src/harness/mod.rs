//! Configuration, canonical experiments, snapshots and the α-sweep study.

mod config;
mod presets;
mod run;
pub mod snapshot;
mod sweep;

pub use config::{DispersionConfig, SimConfig, SweepConfig};
pub use presets::{
    canonical_bathymetry, canonical_buoyancy, canonical_rotation, canonical_vorticity, initial_fields, InitialFields,
    PRESETS,
};
pub use run::{canonical_initial_state, run, snapshot_file, solver_settings, RunSummary, Simulation};
pub use sweep::{alpha_sweep, checkpoint_step, fit_loglog_slope, SlopeFit, SweepReport, SweepRow};

use crate::error::Result;
use crate::stability::{dispersion_csv, growth_rate_scan, k_grid, GrowthCurve};

/// Growth-rate scan described by `config.dispersion`, with its CSV.
pub fn dispersion(config: &DispersionConfig) -> Result<(Vec<GrowthCurve>, String)> {
    let ks = k_grid(config.k_min, config.k_max, config.k_points)?;
    let curves = growth_rate_scan(&config.params, &config.alphas, &ks)?;
    let csv = dispersion_csv(&curves);
    Ok((curves, csv))
}

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, TqgError};
use crate::fem::{CgField, DgField, FemSpaces};

pub const PRESETS: [&str; 3] = ["paper-canonical", "flat-bathymetry", "uniform-buoyancy"];

pub fn canonical_buoyancy(_x: f64, y: f64) -> f64 {
    (2.0 * PI * y).sin() - 1.0
}

pub fn canonical_vorticity(x: f64, y: f64) -> f64 {
    (8.0 * PI * x).sin() * (8.0 * PI * y).sin()
        + 0.4 * (6.0 * PI * x).cos() * (6.0 * PI * y).cos()
        + 0.3 * (10.0 * PI * x).cos() * (4.0 * PI * y).cos()
        + 0.02 * (2.0 * PI * y).sin()
        + 0.02 * (2.0 * PI * x).sin()
}

pub fn canonical_bathymetry(x: f64, _y: f64) -> f64 {
    (2.0 * PI * x).cos() + 0.5 * (4.0 * PI * x).cos() + 0.5 * (6.0 * PI * x).cos()
}

pub fn canonical_rotation(x: f64, y: f64) -> f64 {
    0.4 * (4.0 * PI * x).cos() * (4.0 * PI * y).cos()
}

/// Initial `b`, `ω` and static `h`, `f` of a named preset.
#[derive(Clone, Debug)]
pub struct InitialFields {
    pub b: DgField,
    pub omega: DgField,
    pub h: CgField,
    pub f: CgField,
}

/// - `paper-canonical`: the reference initial data, bathymetry and rotation.
/// - `flat-bathymetry`: as above with `h ≡ 0`.
/// - `uniform-buoyancy`: canonical `ω`, `h`, `f` with `b ≡ −1` set exactly.
pub fn initial_fields(space: &Arc<FemSpaces>, preset: &str) -> Result<InitialFields> {
    let omega = space.project_dg(canonical_vorticity);
    let f = space.interpolate_cg(canonical_rotation)?;
    let h = space.interpolate_cg(canonical_bathymetry)?;
    match preset {
        "paper-canonical" => Ok(InitialFields { b: space.project_dg(canonical_buoyancy), omega, h, f }),
        "flat-bathymetry" => {
            Ok(InitialFields { b: space.project_dg(canonical_buoyancy), omega, h: space.zero_cg(), f })
        }
        "uniform-buoyancy" => {
            // nodal coefficients of a constant are the constant itself
            let b = space.dg_from(vec![-1.0; space.dg_dofs()])?;
            Ok(InitialFields { b, omega, h, f })
        }
        other => Err(TqgError::UnknownPreset(other.to_string())),
    }
}

//! Linear stability of the zonal α-TQG equilibrium: Doppler-shifted phase
//! speeds of thermal Rossby waves and growth-rate scans.
//!
//! For a plane wave of modulus `k` the phase speed `C` solves
//!
//! ```text
//! P C² + X C + Y = 0,    P = (k² + 1)(α k² + 1),  X = U + B − β,  Y = (U − H/2) B
//! ```

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TqgError};

/// Equilibrium gradients: zonal velocity `U`, rotation gradient `β`,
/// buoyancy gradient `B` and bathymetry gradient `H`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    #[serde(rename = "U")]
    pub u: f64,
    pub beta: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

impl Default for DispersionParams {
    fn default() -> Self {
        Self { u: 1.0, beta: 0.0, b: 1.0, h: 0.0 }
    }
}

impl DispersionParams {
    pub fn x(&self) -> f64 {
        self.u + self.b - self.beta
    }

    pub fn y(&self) -> f64 {
        (self.u - 0.5 * self.h) * self.b
    }
}

fn leading(k: f64, alpha: f64) -> f64 {
    (k * k + 1.0) * (alpha * k * k + 1.0)
}

fn check_inputs(k: f64, alpha: f64) -> Result<()> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(TqgError::InvalidParameter(format!("wavenumber must be ≥ 0, got {k}")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(TqgError::InvalidParameter(format!("α must be ≥ 0, got {alpha}")));
    }
    Ok(())
}

/// Both roots, sorted by real part and then by imaginary part.
pub fn phase_speed(params: &DispersionParams, k: f64, alpha: f64) -> Result<[Complex64; 2]> {
    check_inputs(k, alpha)?;
    let p = leading(k, alpha);
    let (x, y) = (params.x(), params.y());
    let root = Complex64::new(x * x - 4.0 * y * p, 0.0).sqrt();
    let mut c = [(-x + root) / (2.0 * p), (-x - root) / (2.0 * p)];
    c.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(c)
}

/// `max Im C` over both branches.
pub fn growth_rate(params: &DispersionParams, k: f64, alpha: f64) -> Result<f64> {
    let c = phase_speed(params, k, alpha)?;
    Ok(c[0].im.max(c[1].im))
}

/// Closed-form instability predicate: complex roots exist iff `Y > 0` and
/// `(k² + 1)(α k² + 1) > X² / (4Y)`.
pub fn predicted_unstable(params: &DispersionParams, k: f64, alpha: f64) -> bool {
    let y = params.y();
    let x = params.x();
    y > 0.0 && leading(k, alpha) > x * x / (4.0 * y)
}

/// One `(α, k)` sample of a scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionRow {
    pub alpha: f64,
    pub k: f64,
    /// Root with the larger (real, imaginary) ordering.
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    pub growth_rate: f64,
}

/// Growth-rate curve for one α.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCurve {
    pub alpha: f64,
    pub rows: Vec<DispersionRow>,
}

impl GrowthCurve {
    /// Wavenumber of maximal growth (first one on ties); `None` when the
    /// curve is stable everywhere.
    pub fn k_max(&self) -> Option<f64> {
        let mut best: Option<&DispersionRow> = None;
        for r in &self.rows {
            if r.growth_rate > 0.0 && best.is_none_or(|b| r.growth_rate > b.growth_rate) {
                best = Some(r);
            }
        }
        best.map(|r| r.k)
    }
}

/// `n` equispaced wavenumbers from `k_min` to `k_max` inclusive.
pub fn k_grid(k_min: f64, k_max: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(k_min >= 0.0 && k_max > k_min && k_max.is_finite()) {
        return Err(TqgError::InvalidParameter(format!("bad k grid [{k_min}, {k_max}] with {n} points")));
    }
    Ok((0..n).map(|i| k_min + (k_max - k_min) * i as f64 / (n - 1) as f64).collect())
}

pub fn growth_rate_scan(params: &DispersionParams, alphas: &[f64], ks: &[f64]) -> Result<Vec<GrowthCurve>> {
    if alphas.is_empty() || ks.is_empty() {
        return Err(TqgError::InvalidParameter("α list and k grid must be non-empty".into()));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let rows = ks
                .iter()
                .map(|&k| {
                    let c = phase_speed(params, k, alpha)?;
                    Ok(DispersionRow { alpha, k, c_plus: c[1], c_minus: c[0], growth_rate: c[0].im.max(c[1].im) })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(GrowthCurve { alpha, rows })
        })
        .collect()
}

pub const DISPERSION_CSV_HEADER: &str = "alpha,k,re_c_plus,im_c_plus,re_c_minus,im_c_minus,growth_rate";

pub fn dispersion_csv(curves: &[GrowthCurve]) -> String {
    let mut s = String::from(DISPERSION_CSV_HEADER);
    s.push('\n');
    for r in curves.iter().flat_map(|c| &c.rows) {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.alpha, r.k, r.c_plus.re, r.c_plus.im, r.c_minus.re, r.c_minus.im, r.growth_rate
        );
    }
    s
}

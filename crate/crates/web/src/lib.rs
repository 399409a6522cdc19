//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export wraps a plain Rust function so the logic stays testable on
//! the host; only the error conversion touches the JS runtime.

use tqg_core::diagnostics::energy;
use tqg_core::elliptic::{manufactured_convergence, SolverSettings};
use tqg_core::fem::{ElementField, FemSpaces};
use tqg_core::harness::{SimConfig, Simulation, PRESETS};
use tqg_core::stability::{growth_rate_scan, k_grid, DispersionParams};
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `[k0, g0, k1, g1, ...]` growth rates of one α on `points` wavenumbers in `[0, k_max]`.
pub fn growth_curve_pairs(alpha: f64, params: DispersionParams, k_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let ks = k_grid(0.0, k_max, points).map_err(|e| e.to_string())?;
    let curves = growth_rate_scan(&params, &[alpha], &ks).map_err(|e| e.to_string())?;
    Ok(curves[0].rows.iter().flat_map(|r| [r.k, r.growth_rate]).collect())
}

#[wasm_bindgen]
pub fn growth_curve(alpha: f64, u: f64, beta: f64, b: f64, h: f64, k_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    growth_curve_pairs(alpha, DispersionParams { u, beta, b, h }, k_max, points).map_err(js)
}

/// `[n, error, rate]` triples of the manufactured Helmholtz problem; the
/// first rate is NaN.
pub fn manufactured_table(degree: usize, alpha: f64) -> Result<Vec<f64>, String> {
    let settings = SolverSettings { tolerance: 1e-12, ..Default::default() };
    let study = manufactured_convergence(degree, alpha, &[8, 16, 32], settings).map_err(|e| e.to_string())?;
    let rates = study.rates();
    Ok(study
        .ns
        .iter()
        .zip(&study.errors)
        .enumerate()
        .flat_map(|(i, (&n, &e))| [n as f64, e, if i == 0 { f64::NAN } else { rates[i - 1] }])
        .collect())
}

#[wasm_bindgen]
pub fn manufactured_check(degree: usize, alpha: f64) -> Result<Vec<f64>, JsError> {
    manufactured_table(degree, alpha).map_err(js)
}

#[wasm_bindgen]
pub fn presets() -> String {
    PRESETS.join(",")
}

/// Blue-white-red map of `v` on `[-m, m]`.
fn diverging(v: f64, m: f64) -> [u8; 3] {
    let s = if m > 0.0 { (v / m).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |c: f64| (255.0 * (1.0 - c)).round() as u8;
    if s >= 0.0 {
        [255, fade(s), fade(s)]
    } else {
        [fade(-s), fade(-s), 255]
    }
}

/// A small live simulation.
#[wasm_bindgen]
pub struct Demo {
    sim: Simulation,
}

impl Demo {
    pub fn create(n: usize, alpha: f64, dt: f64, preset: &str) -> Result<Demo, String> {
        let cfg = SimConfig { n, alpha, dt, preset: preset.to_string(), ..Default::default() };
        Ok(Demo { sim: Simulation::new(&cfg).map_err(|e| e.to_string())? })
    }

    pub fn advance(&mut self, steps: usize) -> Result<f64, String> {
        for _ in 0..steps {
            self.sim.advance().map_err(|e| e.to_string())?;
        }
        Ok(self.sim.state().t)
    }

    /// Row-major RGBA image of `field` sampled at pixel centres, with
    /// `y` increasing upwards.
    pub fn image(&self, field: &str, width: usize) -> Result<Vec<u8>, String> {
        let st = self.sim.state();
        let sample: Box<dyn Fn(f64, f64) -> f64> = match field {
            "b" => Box::new(|x, y| st.b.value_at(x, y)),
            "omega" => Box::new(|x, y| st.omega.value_at(x, y)),
            "psi" => Box::new(|x, y| st.psi.value_at(x, y)),
            other => return Err(format!("unknown field `{other}`")),
        };
        let w = width.max(1);
        let mut values = Vec::with_capacity(w * w);
        for row in 0..w {
            let y = 1.0 - (row as f64 + 0.5) / w as f64;
            for col in 0..w {
                values.push(sample((col as f64 + 0.5) / w as f64, y));
            }
        }
        // b is centred on its mean so the uniform offset does not wash out the map
        let mean = if field == "b" { values.iter().sum::<f64>() / values.len() as f64 } else { 0.0 };
        let m = values.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
        Ok(values.iter().flat_map(|v| { let [r, g, b] = diverging(v - mean, m); [r, g, b, 255] }).collect())
    }

    pub fn space(&self) -> &FemSpaces {
        self.sim.model().space()
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, alpha: f64, dt: f64, preset: &str) -> Result<Demo, JsError> {
        Self::create(n, alpha, dt, preset).map_err(js)
    }

    /// Advances `steps` steps and returns the new time.
    pub fn step(&mut self, steps: usize) -> Result<f64, JsError> {
        self.advance(steps).map_err(js)
    }

    pub fn render(&self, field: &str, width: usize) -> Result<Vec<u8>, JsError> {
        self.image(field, width).map_err(js)
    }

    pub fn time(&self) -> f64 {
        self.sim.state().t
    }

    /// Energy, or NaN if it cannot be evaluated.
    pub fn energy(&self) -> f64 {
        energy(self.sim.state()).unwrap_or(f64::NAN)
    }
}

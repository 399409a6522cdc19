use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, TqgError};
use crate::stability::DispersionParams;

/// Everything needed to reproduce a run, a sweep or a dispersion scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Cells per side.
    pub n: usize,
    pub degree: usize,
    pub alpha: f64,
    pub dt: f64,
    pub steps: usize,
    /// Write snapshots every this many steps; 0 keeps only the initial and
    /// final ones.
    pub snapshot_every: usize,
    pub diagnostics_every: usize,
    pub elliptic_tol: f64,
    pub elliptic_max_iter: usize,
    pub out: PathBuf,
    pub preset: String,
    pub blowup_threshold: f64,
    pub sweep: SweepConfig,
    pub dispersion: DispersionConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub checkpoints: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub params: DispersionParams,
    pub alphas: Vec<f64>,
    pub k_min: f64,
    pub k_max: f64,
    pub k_points: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 64,
            degree: 1,
            alpha: 0.0,
            dt: 0.002,
            steps: 1000,
            snapshot_every: 100,
            diagnostics_every: 1,
            elliptic_tol: 1e-10,
            elliptic_max_iter: 10_000,
            out: PathBuf::from("tqg-out"),
            preset: "paper-canonical".into(),
            blowup_threshold: 100.0,
            sweep: SweepConfig::default(),
            dispersion: DispersionConfig::default(),
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.0, 1.0 / 256.0, 1.0 / 1024.0, 1.0 / 4096.0, 1.0 / 16384.0],
            checkpoints: vec![0.3, 0.4, 0.5, 0.6, 0.7],
        }
    }
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            params: DispersionParams::default(),
            alphas: vec![0.0, 1.0 / 256.0, 1.0 / 64.0, 1.0 / 16.0],
            k_min: 0.0,
            k_max: 10.0,
            k_points: 200,
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| TqgError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| TqgError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML serialisation, hex-encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TqgError::Config(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(1..=3).contains(&self.degree) {
            return bad(format!("degree must be 1, 2 or 3, got {}", self.degree));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha must be ≥ 0, got {}", self.alpha));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.diagnostics_every == 0 {
            return bad("diagnostics_every must be positive".into());
        }
        if !(self.elliptic_tol > 0.0 && self.elliptic_tol < 1.0) {
            return bad(format!("elliptic_tol must lie in (0, 1), got {}", self.elliptic_tol));
        }
        if self.elliptic_max_iter == 0 {
            return bad("elliptic_max_iter must be positive".into());
        }
        if self.blowup_threshold.is_nan() || self.blowup_threshold <= 1.0 {
            return bad(format!("blowup_threshold must exceed 1, got {}", self.blowup_threshold));
        }
        if self.sweep.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("sweep alphas must be ≥ 0".into());
        }
        if self.sweep.checkpoints.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("sweep checkpoints must be ≥ 0".into());
        }
        let d = &self.dispersion;
        if d.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("dispersion alphas must be ≥ 0".into());
        }
        if d.k_points < 2 || !(d.k_min >= 0.0 && d.k_max > d.k_min) {
            return bad("dispersion k grid needs k_points ≥ 2 and 0 ≤ k_min < k_max".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut cfg = SimConfig::default();
        cfg.alpha = 1.0 / 4096.0;
        cfg.out = PathBuf::from("some/dir");
        cfg.sweep.checkpoints = vec![0.1, 0.25];
        cfg.dispersion.params.h = 0.3;
        let text = cfg.to_toml().unwrap();
        assert_eq!(SimConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_files_use_defaults() {
        let cfg = SimConfig::from_toml("n = 16\nalpha = 0.01\n[sweep]\nalphas = [0.0, 0.1]\n").unwrap();
        assert_eq!(cfg.n, 16);
        assert_eq!(cfg.dt, 0.002);
        assert_eq!(cfg.sweep.alphas, vec![0.0, 0.1]);
        assert_eq!(cfg.sweep.checkpoints, SweepConfig::default().checkpoints);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SimConfig::from_toml("alpha = -1.0").is_err());
        assert!(SimConfig::from_toml("dt = 0.0").is_err());
        assert!(SimConfig::from_toml("degree = 4").is_err());
        assert!(SimConfig::from_toml("unknown_key = 1").is_err());
        assert!(SimConfig::from_toml("n = \"big\"").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = SimConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.steps += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}

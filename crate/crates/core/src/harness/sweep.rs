use std::fmt::Write as _;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::diagnostics::relative_errors;
use crate::error::{Result, TqgError};
use crate::transport::SimState;

use super::config::SimConfig;
use super::run::Simulation;

/// Step index of the last step at or before time `t`, and a warning when
/// that step lies more than `Δt/2` before `t`.
pub fn checkpoint_step(t: f64, dt: f64) -> (usize, Option<String>) {
    // guard against 0.3 / 0.002 = 149.999…
    let step = (t / dt * (1.0 + 1e-12)).floor() as usize;
    let gap = t - step as f64 * dt;
    let warning = (gap > 0.5 * dt).then(|| {
        format!("checkpoint t={t} matched to step {step} (t={}), off by {gap:.3e}", step as f64 * dt)
    });
    (step, warning)
}

/// Least-squares slope of `log10 e` against `log10 α` over points with
/// positive α and positive error; `None` with fewer than two such points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(a, e)| *a > 0.0 && *e > 0.0 && e.is_finite())
        .map(|(a, e)| (a.log10(), e.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub checkpoint: f64,
    pub alpha: f64,
    pub e_b: f64,
    pub e_omega: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub checkpoint: f64,
    pub e_b: Option<f64>,
    pub e_omega: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub slopes: Vec<SlopeFit>,
    pub warnings: Vec<String>,
    /// Members that failed, with the error message; their rows are absent.
    pub failures: Vec<(f64, String)>,
    /// Digest of the shared initial `b` and `ω` coefficients.
    pub initial_digest: String,
}

impl SweepReport {
    /// Rows for one checkpoint, in α order.
    pub fn at(&self, checkpoint: f64) -> Vec<&SweepRow> {
        let mut rows: Vec<&SweepRow> = self.rows.iter().filter(|r| r.checkpoint == checkpoint).collect();
        rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("checkpoint,alpha,e_b,e_omega\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:e},{:e},{:e}", r.checkpoint, r.alpha, r.e_b, r.e_omega);
        }
        s.push_str("\n# fitted log-log slopes of error against alpha\ncheckpoint,slope_e_b,slope_e_omega\n");
        let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"));
        for f in &self.slopes {
            let _ = writeln!(s, "{},{},{}", f.checkpoint, fmt(f.e_b), fmt(f.e_omega));
        }
        for (alpha, msg) in &self.failures {
            let _ = writeln!(s, "# member alpha={alpha:e} failed: {msg}");
        }
        s
    }
}

struct Member {
    alpha: f64,
    digest: String,
    states: Vec<SimState>,
}

fn digest(state: &SimState) -> String {
    let mut h = Sha256::new();
    for c in state.b.coeffs.iter().chain(&state.omega.coeffs) {
        h.update(c.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn run_member(base: &SimConfig, alpha: f64, steps: &[usize]) -> Result<Member> {
    let cfg = SimConfig { alpha, ..base.clone() };
    let mut sim = Simulation::new(&cfg)?;
    let digest = digest(sim.state());
    let mut states = Vec::with_capacity(steps.len());
    let last = steps.iter().copied().max().unwrap_or(0);
    let mut next = 0;
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| steps[i]);
    let mut slots: Vec<Option<SimState>> = vec![None; steps.len()];
    for i in 0..=last {
        if i > 0 {
            sim.advance()?;
        }
        while next < order.len() && steps[order[next]] == i {
            slots[order[next]] = Some(sim.state().clone());
            next += 1;
        }
    }
    for s in slots {
        states.push(s.expect("every checkpoint step is reached"));
    }
    Ok(Member { alpha, digest, states })
}

/// Runs every α in `alphas` from the same initial data and compares each
/// positive-α member against the α = 0 reference at each checkpoint.
pub fn alpha_sweep(base: &SimConfig, alphas: &[f64], checkpoints: &[f64]) -> Result<SweepReport> {
    base.validate()?;
    if !alphas.contains(&0.0) {
        return Err(TqgError::InvalidParameter("α list must contain the reference α = 0".into()));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(TqgError::InvalidParameter("α values must be ≥ 0".into()));
    }
    if checkpoints.is_empty() || checkpoints.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(TqgError::InvalidParameter("checkpoints must be a non-empty list of times ≥ 0".into()));
    }
    let mut report = SweepReport::default();
    let steps: Vec<usize> = checkpoints
        .iter()
        .map(|&t| {
            let (s, w) = checkpoint_step(t, base.dt);
            report.warnings.extend(w);
            s
        })
        .collect();

    let mut members: Vec<f64> = alphas.to_vec();
    members.sort_by(f64::total_cmp);
    members.dedup();
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Member>> = members.par_iter().map(|&a| run_member(base, a, &steps)).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Member>> = members.iter().map(|&a| run_member(base, a, &steps)).collect();

    let mut done = Vec::new();
    for (alpha, r) in members.iter().zip(results) {
        match r {
            Ok(m) => done.push(m),
            Err(e) => report.failures.push((*alpha, e.to_string())),
        }
    }
    let Some(reference) = done.iter().find(|m| m.alpha == 0.0) else {
        return Err(TqgError::InvalidParameter(format!(
            "reference run failed: {}",
            report.failures.iter().map(|f| f.1.as_str()).collect::<Vec<_>>().join("; ")
        )));
    };
    if done.iter().any(|m| m.digest != reference.digest) {
        return Err(TqgError::Mismatch("sweep members do not share identical initial data".into()));
    }
    report.initial_digest = reference.digest.clone();

    for (c, &t) in checkpoints.iter().enumerate() {
        for m in done.iter().filter(|m| m.alpha > 0.0) {
            let (e_b, e_omega) = relative_errors(&m.states[c], &reference.states[c])?;
            report.rows.push(SweepRow { checkpoint: t, alpha: m.alpha, e_b, e_omega });
        }
        let rows = report.at(t);
        let eb: Vec<(f64, f64)> = rows.iter().map(|r| (r.alpha, r.e_b)).collect();
        let ew: Vec<(f64, f64)> = rows.iter().map(|r| (r.alpha, r.e_omega)).collect();
        report.slopes.push(SlopeFit { checkpoint: t, e_b: fit_loglog_slope(&eb), e_omega: fit_loglog_slope(&ew) });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1e-4, 1e-3, 1e-2].iter().map(|&a: &f64| (a, 3.0 * a.powf(0.7))).collect();
        assert!((fit_loglog_slope(&pts).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(fit_loglog_slope(&pts[..1]), None);
        assert_eq!(fit_loglog_slope(&[(0.0, 1.0), (0.1, 0.2)]), None);
        assert_eq!(fit_loglog_slope(&[(0.1, 1.0), (0.1, 0.2)]), None);
    }

    #[test]
    fn checkpoint_matching() {
        assert_eq!(checkpoint_step(0.3, 0.002), (150, None));
        assert_eq!(checkpoint_step(0.0, 0.002), (0, None));
        let (s, w) = checkpoint_step(0.3, 0.007);
        assert_eq!(s, 42);
        assert!(w.is_some());
        assert_eq!(checkpoint_step(0.3001, 0.002).0, 150);
    }

    #[test]
    fn sweep_requires_reference() {
        let cfg = SimConfig { n: 4, ..Default::default() };
        assert!(alpha_sweep(&cfg, &[0.1], &[0.01]).is_err());
        assert!(alpha_sweep(&cfg, &[0.0, 0.1], &[]).is_err());
        assert!(alpha_sweep(&cfg, &[0.0, -0.1], &[0.01]).is_err());
    }

    #[test]
    fn single_alpha_leaves_slope_undefined() {
        let cfg = SimConfig { n: 6, dt: 0.005, ..Default::default() };
        let r = alpha_sweep(&cfg, &[0.0, 0.01], &[0.0, 0.02]).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].e_b, 0.0);
        assert_eq!(r.rows[0].e_omega, 0.0);
        assert!(r.rows[1].e_omega > 0.0);
        assert!(r.slopes.iter().all(|s| s.e_b.is_none() && s.e_omega.is_none()));
        let csv = r.to_csv();
        assert!(csv.starts_with("checkpoint,alpha,e_b,e_omega\n"));
        assert!(csv.contains("undefined"));
    }
}

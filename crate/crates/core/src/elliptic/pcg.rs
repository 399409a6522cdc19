use crate::error::{Result, TqgError};

use super::sparse::{dot, CsrMatrix};

/// Stopping criteria for the conjugate gradient iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Relative residual `‖b - Ax‖ / ‖b‖` to reach.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 10_000, preconditioner: Preconditioner::Jacobi }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(TqgError::InvalidParameter(format!(
                "solver tolerance {} must lie in (0, 1)",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(TqgError::InvalidParameter("max iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned conjugate gradients; `x` holds the initial guess on entry.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    settings: &SolverSettings,
) -> Result<SolveStats> {
    let n = a.dim();
    let inv_diag: Vec<f64> = match settings.preconditioner {
        Preconditioner::Jacobi => a.diagonal().iter().map(|d| 1.0 / d).collect(),
        Preconditioner::None => vec![1.0; n],
    };
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }

    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut residual = dot(&r, &r).sqrt() / b_norm;
    if residual <= settings.tolerance {
        return Ok(SolveStats { iterations: 0, residual });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=settings.max_iterations {
        a.mul_vec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        if residual <= settings.tolerance {
            return Ok(SolveStats { iterations: it, residual });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(TqgError::NotConverged { iterations: settings.max_iterations, residual })
}

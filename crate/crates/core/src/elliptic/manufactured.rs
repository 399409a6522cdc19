use std::f64::consts::PI;

use super::{solve_stream, SolverSettings};
use crate::error::{Result, TqgError};
use crate::fem::{ElementField, FemSpaces};
use crate::quadrature::QuadratureRule;

/// `-Δ` eigenvalue of `sin 2πx sin 2πy`.
pub const LAMBDA: f64 = 8.0 * PI * PI;

pub fn oracle(x: f64, y: f64) -> f64 {
    (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
}

/// L² distance to `exact`, measured with a rule finer than any space uses.
pub fn l2_error<F: ElementField>(field: &F, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let space = field.space();
    let rule = QuadratureRule::triangle(10);
    let nb = space.local_dofs();
    let (mut local, mut phi) = (vec![0.0; nb], vec![0.0; nb]);
    let mut total = 0.0;
    for e in 0..space.mesh().num_elements() {
        field.gather(e, &mut local);
        let g = space.mesh().geometry(e);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            space.basis().eval(*p, &mut phi);
            let v: f64 = local.iter().zip(&phi).map(|(c, f)| c * f).sum();
            let x = g.map(*p);
            total += g.det * w * (v - exact(x[0], x[1])).powi(2);
        }
    }
    total.sqrt()
}

/// L² errors of `ψ^α` against the oracle on a sequence of meshes.
#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub degree: usize,
    pub alpha: f64,
    pub ns: Vec<usize>,
    pub errors: Vec<f64>,
}

impl ConvergenceStudy {
    /// Observed orders between consecutive meshes.
    pub fn rates(&self) -> Vec<f64> {
        self.ns
            .windows(2)
            .zip(self.errors.windows(2))
            .map(|(n, e)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
            .collect()
    }

    pub fn min_rate(&self) -> Option<f64> {
        self.rates().into_iter().reduce(f64::min)
    }
}

/// Solves with `ω = -(λ+1)(1+αλ) s`, `f = 0`, whose exact stream function
/// is `ψ^α = s = sin 2πx sin 2πy`.
pub fn manufactured_convergence(
    degree: usize,
    alpha: f64,
    ns: &[usize],
    settings: SolverSettings,
) -> Result<ConvergenceStudy> {
    if ns.is_empty() {
        return Err(TqgError::InvalidParameter("empty mesh list".into()));
    }
    let c = -(LAMBDA + 1.0) * (1.0 + alpha * LAMBDA);
    let mut errors = Vec::with_capacity(ns.len());
    for &n in ns {
        let space = FemSpaces::new(n, degree)?;
        let omega = space.project_dg(|x, y| c * oracle(x, y));
        let (_, psi) = solve_stream(&omega, &space.zero_cg(), alpha, settings)?;
        errors.push(l2_error(&psi, oracle));
    }
    Ok(ConvergenceStudy { degree, alpha, ns: ns.to_vec(), errors })
}

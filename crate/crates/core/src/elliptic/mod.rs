//! Continuous Galerkin Helmholtz operators and the two nested solves that
//! recover the stream functions from the potential vorticity:
//!
//! ```text
//! L_1(ψ̃, φ)  = -⟨ω - f, φ⟩
//! L_α(ψ^α, φ) =  ⟨ψ̃, φ⟩        with L_α(v, φ) = α⟨∇v, ∇φ⟩ + ⟨v, φ⟩
//! ```

mod manufactured;
mod pcg;
mod sparse;

use std::collections::BTreeSet;
use std::sync::Arc;

pub use manufactured::{l2_error, manufactured_convergence, oracle, ConvergenceStudy, LAMBDA};
pub use pcg::{conjugate_gradient, Preconditioner, SolveStats, SolverSettings};
pub use sparse::CsrMatrix;

use crate::error::{Result, TqgError};
use crate::fem::{check_same, CgField, DgField, ElementField, FemSpaces};

/// Assembled `L_α` over the CG basis.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pub matrix: CsrMatrix,
    pub alpha: f64,
}

/// CG mass and stiffness matrices on a shared sparsity pattern.
pub fn assemble_mass_stiffness(space: &FemSpaces) -> (CsrMatrix, CsrMatrix) {
    let nb = space.local_dofs();
    let mut rows = vec![BTreeSet::new(); space.cg_dofs()];
    for e in 0..space.mesh().num_elements() {
        let dofs = space.cg_dofs_of(e);
        for &i in dofs {
            rows[i].extend(dofs.iter().copied());
        }
    }
    let mut mass = CsrMatrix::from_pattern(space.cg_dofs(), rows);
    let mut stiff = mass.clone();

    let rule = space.volume_rule();
    let mut grads = vec![[0.0; 2]; nb];
    let mut local_k = vec![0.0; nb * nb];
    for e in 0..space.mesh().num_elements() {
        let det = space.mesh().geometry(e).det;
        local_k.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..rule.len() {
            space.physical_grads(e, q, &mut grads);
            let w = rule.weights[q] * det;
            for i in 0..nb {
                for j in 0..nb {
                    local_k[i * nb + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                }
            }
        }
        let dofs = space.cg_dofs_of(e);
        for i in 0..nb {
            for j in 0..nb {
                mass.add(dofs[i], dofs[j], det * space.ref_mass()[i * nb + j]);
                stiff.add(dofs[i], dofs[j], local_k[i * nb + j]);
            }
        }
    }
    (mass, stiff)
}

/// Matrix of `L_α(φ_i, φ_j)`; reduces to the mass matrix for `α = 0`.
pub fn assemble_helmholtz(space: &FemSpaces, alpha: f64) -> Result<SparseOperator> {
    validate_alpha(alpha)?;
    let (mass, stiff) = assemble_mass_stiffness(space);
    Ok(SparseOperator { matrix: stiff.combine(alpha, &mass, 1.0), alpha })
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(TqgError::InvalidParameter(format!("α must be a non-negative real, got {alpha}")))
    }
}

/// Both stream functions for one potential-vorticity field.
#[derive(Clone, Debug)]
pub struct StreamSolution {
    pub psi_tilde: CgField,
    pub psi: CgField,
    pub stats: [SolveStats; 2],
}

/// Cached operators for the two Helmholtz solves at fixed `(mesh, k, α)`.
#[derive(Clone, Debug)]
pub struct StreamSolver {
    space: Arc<FemSpaces>,
    mass: CsrMatrix,
    l_one: SparseOperator,
    l_alpha: SparseOperator,
    settings: SolverSettings,
}

impl StreamSolver {
    pub fn new(space: &Arc<FemSpaces>, alpha: f64, settings: SolverSettings) -> Result<Self> {
        validate_alpha(alpha)?;
        settings.validate()?;
        let (mass, stiff) = assemble_mass_stiffness(space);
        let l_one = SparseOperator { matrix: stiff.combine(1.0, &mass, 1.0), alpha: 1.0 };
        let l_alpha = SparseOperator { matrix: stiff.combine(alpha, &mass, 1.0), alpha };
        Ok(Self { space: Arc::clone(space), mass, l_one, l_alpha, settings })
    }

    pub fn alpha(&self) -> f64 {
        self.l_alpha.alpha
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// `L_1`, i.e. the H¹ Gram matrix.
    pub fn h1_gram(&self) -> &CsrMatrix {
        &self.l_one.matrix
    }

    pub fn l_alpha(&self) -> &SparseOperator {
        &self.l_alpha
    }

    /// Load vector `F_{ω - f}(φ_i) = -⟨ω - f, φ_i⟩`.
    pub fn vorticity_load(&self, omega: &[f64], f: &CgField) -> Vec<f64> {
        let space = &self.space;
        let nb = space.local_dofs();
        let mut rhs = vec![0.0; space.cg_dofs()];
        let mut diff = vec![0.0; nb];
        for e in 0..space.mesh().num_elements() {
            let det = space.mesh().geometry(e).det;
            let dofs = space.cg_dofs_of(e);
            for j in 0..nb {
                diff[j] = omega[e * nb + j] - f.coeffs[dofs[j]];
            }
            for i in 0..nb {
                let row = &space.ref_mass()[i * nb..(i + 1) * nb];
                let v: f64 = row.iter().zip(&diff).map(|(m, d)| m * d).sum();
                rhs[dofs[i]] -= det * v;
            }
        }
        rhs
    }

    /// Solves both systems in place; `psi_tilde` holds the warm start on entry.
    /// The second solve starts from the new `ψ̃`, so for `α = 0` it returns
    /// `ψ^α = ψ̃` without iterating.
    pub fn solve_into(
        &self,
        omega: &[f64],
        f: &CgField,
        psi_tilde: &mut [f64],
        psi: &mut [f64],
    ) -> Result<[SolveStats; 2]> {
        let rhs = self.vorticity_load(omega, f);
        let first = conjugate_gradient(&self.l_one.matrix, &rhs, psi_tilde, &self.settings)?;
        let mut rhs2 = vec![0.0; rhs.len()];
        self.mass.mul_vec(psi_tilde, &mut rhs2);
        psi.copy_from_slice(psi_tilde);
        let second = conjugate_gradient(&self.l_alpha.matrix, &rhs2, psi, &self.settings)?;
        Ok([first, second])
    }

    pub fn solve(&self, omega: &DgField, f: &CgField, warm: Option<&CgField>) -> Result<StreamSolution> {
        check_same(omega, f)?;
        check_same(omega, &self.space.zero_cg())?;
        let mut psi_tilde = warm.cloned().unwrap_or_else(|| self.space.zero_cg());
        let mut psi = self.space.zero_cg();
        let stats = self.solve_into(&omega.coeffs, f, &mut psi_tilde.coeffs, &mut psi.coeffs)?;
        Ok(StreamSolution { psi_tilde, psi, stats })
    }
}

/// One-shot convenience: assemble and solve for `(ψ̃, ψ^α)`.
pub fn solve_stream(
    omega: &DgField,
    f: &CgField,
    alpha: f64,
    settings: SolverSettings,
) -> Result<(CgField, CgField)> {
    let solver = StreamSolver::new(omega.space(), alpha, settings)?;
    let sol = solver.solve(omega, f, None)?;
    Ok((sol.psi_tilde, sol.psi))
}

#[cfg(test)]
mod tests;

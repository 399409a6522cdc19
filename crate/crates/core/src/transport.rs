//! DG right-hand sides for buoyancy and potential vorticity.
//!
//! Every advective term is assembled in the weak form
//!
//! ```text
//! A(q, s)(ν) = Σ_K ⟨q ∇⊥s, ∇ν⟩_K − ⟨f̂(q⁻, q⁺, ∇⊥s·n̂), ν⁻⟩_∂K
//! ```
//!
//! with the local Lax–Friedrichs flux `f̂`. The buoyancy tendency is
//! `A(b, ψ^α)`, the vorticity tendency is `A(ω − b, ψ^α) + ½ A(b, h)`, where
//! the second term is the flux form of `−½ ∇·(b ∇⊥h)`.

use std::sync::Arc;

use crate::error::{Result, TqgError};
use crate::fem::{check_same, CgField, DgField, ElementField, FemSpaces};
use crate::par::for_each_chunk;

/// Largest local basis size (degree 3).
const MAX_NB: usize = 10;

/// Local Lax–Friedrichs flux for normal velocity `un` taken along the
/// minus-side normal.
#[inline]
pub fn lax_friedrichs(minus: f64, plus: f64, un: f64) -> f64 {
    0.5 * un * (minus + plus) + 0.5 * un.abs() * (minus - plus)
}

/// Prognostic and diagnostic fields of one simulation.
#[derive(Clone, Debug)]
pub struct SimState {
    pub b: DgField,
    pub omega: DgField,
    pub psi_tilde: CgField,
    pub psi: CgField,
    pub h: CgField,
    pub f: CgField,
    pub alpha: f64,
    pub t: f64,
}

impl SimState {
    pub fn space(&self) -> &Arc<FemSpaces> {
        self.b.space()
    }

    /// Checks that all fields share one discretisation.
    pub fn check(&self) -> Result<()> {
        check_same(&self.b, &self.omega)?;
        check_same(&self.b, &self.psi_tilde)?;
        check_same(&self.b, &self.psi)?;
        check_same(&self.b, &self.h)?;
        check_same(&self.b, &self.f)?;
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(TqgError::InvalidParameter(format!("α must be ≥ 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Facet-side lookup and the element-wise DG mass inverse.
#[derive(Debug)]
pub struct Transport {
    space: Arc<FemSpaces>,
    /// Per element and local facet: (facet id, element is the minus side).
    sides: Vec<[(usize, bool); 3]>,
}

impl Transport {
    pub fn new(space: &Arc<FemSpaces>) -> Self {
        let mesh = space.mesh();
        let sides = (0..mesh.num_elements())
            .map(|e| {
                let ids = mesh.element_facets(e);
                std::array::from_fn(|f| {
                    let facet = &mesh.facets()[ids[f]];
                    (ids[f], facet.minus.element == e && facet.minus.local == f)
                })
            })
            .collect();
        Self { space: Arc::clone(space), sides }
    }

    pub fn space(&self) -> &Arc<FemSpaces> {
        &self.space
    }

    /// Normal velocity `∇⊥s·n̂ = −s_y n_x + s_x n_y` at every facet point, seen
    /// from the minus side. `s` holds CG coefficients.
    pub fn normal_velocity(&self, s: &[f64]) -> Vec<f64> {
        let space = &*self.space;
        let mesh = space.mesh();
        let nqf = space.facet_rule().len();
        let mut un = vec![0.0; mesh.num_facets() * nqf];
        for_each_chunk(&mut un, nqf, |fid, out| {
            let facet = &mesh.facets()[fid];
            let (e, f) = (facet.minus.element, facet.minus.local);
            let g = mesh.geometry(e);
            let dofs = space.cg_dofs_of(e);
            for (q, o) in out.iter_mut().enumerate() {
                let mut gs = [0.0; 2];
                for (&d, r) in dofs.iter().zip(space.facet_grad_ref(f, q)) {
                    let p = g.physical_gradient(*r);
                    gs[0] += s[d] * p[0];
                    gs[1] += s[d] * p[1];
                }
                *o = -gs[1] * facet.normal[0] + gs[0] * facet.normal[1];
            }
        });
        un
    }

    /// Adds `scale · A(q, s)` (not mass-inverted) to `out`.
    /// `q` holds DG coefficients, `s` CG coefficients.
    pub fn advect_into(&self, q: &[f64], s: &[f64], scale: f64, out: &mut [f64]) {
        let space = &*self.space;
        let mesh = space.mesh();
        let nb = space.local_dofs();
        let rule = space.facet_rule();
        let nqf = rule.len();
        let un = self.normal_velocity(s);
        // A(q, s) = A(q - c, s) for any constant c; the shift makes the
        // tendency of a constant field exactly zero
        let shift = q.first().copied().unwrap_or(0.0);

        // single-valued flux times weight and length at each facet point
        let mut flux = vec![0.0; mesh.num_facets() * nqf];
        for_each_chunk(&mut flux, nqf, |fid, out| {
            let facet = &mesh.facets()[fid];
            let (em, fm) = (facet.minus.element, facet.minus.local);
            let (ep, fp) = (facet.plus.element, facet.plus.local);
            let qm = &q[em * nb..(em + 1) * nb];
            let qp = &q[ep * nb..(ep + 1) * nb];
            for (i, o) in out.iter_mut().enumerate() {
                let vm: f64 = qm.iter().zip(space.facet_phi(fm, i, false)).map(|(c, p)| (c - shift) * p).sum();
                let vp: f64 = qp.iter().zip(space.facet_phi(fp, i, true)).map(|(c, p)| (c - shift) * p).sum();
                *o = rule.weights[i] * facet.length * lax_friedrichs(vm, vp, un[fid * nqf + i]);
            }
        });

        let vol = space.volume_rule();
        for_each_chunk(out, nb, |e, out| {
            let g = mesh.geometry(e);
            let dofs = space.cg_dofs_of(e);
            let qe = &q[e * nb..(e + 1) * nb];
            let mut grads = [[0.0; 2]; MAX_NB];
            let grads = &mut grads[..nb];
            let mut acc = [0.0; MAX_NB];
            for iq in 0..vol.len() {
                space.physical_grads(e, iq, grads);
                let mut gs = [0.0; 2];
                for (&d, gr) in dofs.iter().zip(grads.iter()) {
                    gs[0] += s[d] * gr[0];
                    gs[1] += s[d] * gr[1];
                }
                let qv: f64 = qe.iter().zip(space.phi(iq)).map(|(c, p)| (c - shift) * p).sum();
                let w = vol.weights[iq] * g.det * qv;
                let u = [-gs[1], gs[0]];
                for (a, gr) in acc.iter_mut().zip(grads.iter()) {
                    *a += w * (u[0] * gr[0] + u[1] * gr[1]);
                }
            }
            for (f, &(fid, minus)) in self.sides[e].iter().enumerate() {
                for i in 0..nqf {
                    let fl = flux[fid * nqf + i];
                    let phi = space.facet_phi(f, i, !minus);
                    let sign = if minus { -1.0 } else { 1.0 };
                    for (a, p) in acc.iter_mut().zip(phi) {
                        *a += sign * fl * p;
                    }
                }
            }
            for (o, a) in out.iter_mut().zip(&acc) {
                *o += scale * a;
            }
        });
    }

    /// Applies the block-diagonal inverse DG mass matrix in place.
    pub fn apply_inverse_mass(&self, r: &mut [f64]) {
        let space = &*self.space;
        let nb = space.local_dofs();
        let minv = space.ref_mass_inv();
        for_each_chunk(r, nb, |e, local| {
            let det = space.mesh().geometry(e).det;
            let mut tmp = [0.0; MAX_NB];
            for (i, t) in tmp.iter_mut().enumerate().take(nb) {
                *t = minv[i * nb..(i + 1) * nb].iter().zip(local.iter()).map(|(m, v)| m * v).sum::<f64>() / det;
            }
            local.copy_from_slice(&tmp[..nb]);
        });
    }

    /// Both tendencies from raw coefficient arrays.
    pub fn rhs_into(
        &self,
        b: &[f64],
        omega: &[f64],
        psi: &[f64],
        h: &[f64],
        db: &mut [f64],
        domega: &mut [f64],
    ) {
        db.iter_mut().for_each(|v| *v = 0.0);
        domega.iter_mut().for_each(|v| *v = 0.0);
        self.advect_into(b, psi, 1.0, db);
        let q: Vec<f64> = omega.iter().zip(b).map(|(w, b)| w - b).collect();
        self.advect_into(&q, psi, 1.0, domega);
        self.advect_into(b, h, 0.5, domega);
        self.apply_inverse_mass(db);
        self.apply_inverse_mass(domega);
    }

    /// `∂b/∂t` for the current state.
    pub fn rhs_buoyancy(&self, state: &SimState) -> Result<DgField> {
        state.check()?;
        check_same(&state.b, &self.space.zero_dg())?;
        let mut out = vec![0.0; state.b.coeffs.len()];
        self.advect_into(&state.b.coeffs, &state.psi.coeffs, 1.0, &mut out);
        self.apply_inverse_mass(&mut out);
        Ok(state.b.with_coeffs(out))
    }

    /// `∂ω/∂t` for the current state.
    pub fn rhs_vorticity(&self, state: &SimState) -> Result<DgField> {
        state.check()?;
        check_same(&state.b, &self.space.zero_dg())?;
        let (b, omega) = (&state.b.coeffs, &state.omega.coeffs);
        let q: Vec<f64> = omega.iter().zip(b).map(|(w, b)| w - b).collect();
        let mut out = vec![0.0; q.len()];
        self.advect_into(&q, &state.psi.coeffs, 1.0, &mut out);
        self.advect_into(b, &state.h.coeffs, 0.5, &mut out);
        self.apply_inverse_mass(&mut out);
        Ok(state.omega.with_coeffs(out))
    }
}

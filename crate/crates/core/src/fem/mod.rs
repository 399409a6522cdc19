//! Continuous (`W_δ^k`) and discontinuous (`V_δ^k`) Lagrange spaces on the
//! periodic mesh, together with projection, interpolation and norms.

mod basis;
mod dense;

use std::sync::Arc;

pub use basis::LagrangeBasis;
pub(crate) use dense::invert;

use crate::error::{Result, TqgError};
use crate::mesh::MeshTopology;
use crate::quadrature::{LineRule, QuadratureRule};

/// Mesh, basis, quadrature tables and the CG degree-of-freedom map shared by
/// every field of one discretisation.
#[derive(Debug)]
pub struct FemSpaces {
    mesh: MeshTopology,
    basis: LagrangeBasis,
    volume: QuadratureRule,
    facet_rule: LineRule,
    vol_phi: Vec<f64>,
    vol_grad: Vec<[f64; 2]>,
    facet_phi: Vec<f64>,
    facet_phi_rev: Vec<f64>,
    facet_grad: Vec<[f64; 2]>,
    ref_mass: Vec<f64>,
    ref_mass_inv: Vec<f64>,
    cg_map: Vec<usize>,
    n_cg: usize,
}

impl FemSpaces {
    /// Builds both spaces of degree `degree` (1 to 3) on an `n × n` periodic mesh.
    pub fn new(n: usize, degree: usize) -> Result<Arc<Self>> {
        if !(1..=3).contains(&degree) {
            return Err(TqgError::InvalidParameter(format!("polynomial degree {degree} not in 1..=3")));
        }
        let mesh = MeshTopology::periodic(n)?;
        let basis = LagrangeBasis::new(degree);
        let nb = basis.len();
        let volume = QuadratureRule::triangle(2 * degree + 1);
        let facet_rule = LineRule::with_exactness(2 * degree + 1);

        let nq = volume.len();
        let mut vol_phi = vec![0.0; nq * nb];
        let mut vol_grad = vec![[0.0; 2]; nq * nb];
        for (q, p) in volume.points.iter().enumerate() {
            basis.eval(*p, &mut vol_phi[q * nb..(q + 1) * nb]);
            basis.grad(*p, &mut vol_grad[q * nb..(q + 1) * nb]);
        }

        let nf = facet_rule.len();
        let mut facet_phi = vec![0.0; 3 * nf * nb];
        let mut facet_phi_rev = vec![0.0; 3 * nf * nb];
        let mut facet_grad = vec![[0.0; 2]; 3 * nf * nb];
        for f in 0..3 {
            for (q, s) in facet_rule.points.iter().enumerate() {
                let at = (f * nf + q) * nb;
                let p = LagrangeBasis::facet_point(f, *s);
                basis.eval(p, &mut facet_phi[at..at + nb]);
                basis.grad(p, &mut facet_grad[at..at + nb]);
                basis.eval(LagrangeBasis::facet_point(f, 1.0 - s), &mut facet_phi_rev[at..at + nb]);
            }
        }

        let mut ref_mass = vec![0.0; nb * nb];
        for q in 0..nq {
            let w = volume.weights[q];
            let phi = &vol_phi[q * nb..(q + 1) * nb];
            for i in 0..nb {
                for j in 0..nb {
                    ref_mass[i * nb + j] += w * phi[i] * phi[j];
                }
            }
        }
        let ref_mass_inv = invert(nb, &ref_mass);

        let (cg_map, n_cg) = build_cg_map(&mesh, &basis);

        Ok(Arc::new(Self {
            mesh,
            basis,
            volume,
            facet_rule,
            vol_phi,
            vol_grad,
            facet_phi,
            facet_phi_rev,
            facet_grad,
            ref_mass,
            ref_mass_inv,
            cg_map,
            n_cg,
        }))
    }

    pub fn mesh(&self) -> &MeshTopology {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    /// Local basis size `(k+1)(k+2)/2`.
    pub fn local_dofs(&self) -> usize {
        self.basis.len()
    }

    pub fn dg_dofs(&self) -> usize {
        self.mesh.num_elements() * self.basis.len()
    }

    pub fn cg_dofs(&self) -> usize {
        self.n_cg
    }

    pub fn volume_rule(&self) -> &QuadratureRule {
        &self.volume
    }

    pub fn facet_rule(&self) -> &LineRule {
        &self.facet_rule
    }

    /// Basis values at volume quadrature point `q`.
    #[inline]
    pub fn phi(&self, q: usize) -> &[f64] {
        let nb = self.basis.len();
        &self.vol_phi[q * nb..(q + 1) * nb]
    }

    /// Reference gradients at volume quadrature point `q`.
    #[inline]
    pub fn grad_ref(&self, q: usize) -> &[[f64; 2]] {
        let nb = self.basis.len();
        &self.vol_grad[q * nb..(q + 1) * nb]
    }

    /// Basis values at facet point `q` of local facet `f`, traversed forward
    /// (`reversed = false`) or backward.
    #[inline]
    pub fn facet_phi(&self, f: usize, q: usize, reversed: bool) -> &[f64] {
        let nb = self.basis.len();
        let at = (f * self.facet_rule.len() + q) * nb;
        if reversed {
            &self.facet_phi_rev[at..at + nb]
        } else {
            &self.facet_phi[at..at + nb]
        }
    }

    /// Reference gradients at forward facet point `q` of local facet `f`.
    #[inline]
    pub fn facet_grad_ref(&self, f: usize, q: usize) -> &[[f64; 2]] {
        let nb = self.basis.len();
        let at = (f * self.facet_rule.len() + q) * nb;
        &self.facet_grad[at..at + nb]
    }

    /// Reference-element mass matrix (row-major, `nb × nb`).
    pub fn ref_mass(&self) -> &[f64] {
        &self.ref_mass
    }

    pub fn ref_mass_inv(&self) -> &[f64] {
        &self.ref_mass_inv
    }

    /// Global CG indices of the local nodes of `element`.
    #[inline]
    pub fn cg_dofs_of(&self, element: usize) -> &[usize] {
        let nb = self.basis.len();
        &self.cg_map[element * nb..(element + 1) * nb]
    }

    /// Physical gradients of all local basis functions at volume point `q`.
    pub fn physical_grads(&self, element: usize, q: usize, out: &mut [[f64; 2]]) {
        let g = self.mesh.geometry(element);
        for (o, r) in out.iter_mut().zip(self.grad_ref(q)) {
            *o = g.physical_gradient(*r);
        }
    }

    fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || (self.mesh.n() == other.mesh.n() && self.degree() == other.degree())
    }

    pub fn zero_dg(self: &Arc<Self>) -> DgField {
        DgField { space: Arc::clone(self), coeffs: vec![0.0; self.dg_dofs()] }
    }

    pub fn zero_cg(self: &Arc<Self>) -> CgField {
        CgField { space: Arc::clone(self), coeffs: vec![0.0; self.n_cg] }
    }

    pub fn dg_from(self: &Arc<Self>, coeffs: Vec<f64>) -> Result<DgField> {
        if coeffs.len() != self.dg_dofs() {
            return Err(TqgError::Mismatch(format!(
                "DG coefficient vector has length {}, expected {}",
                coeffs.len(),
                self.dg_dofs()
            )));
        }
        Ok(DgField { space: Arc::clone(self), coeffs })
    }

    pub fn cg_from(self: &Arc<Self>, coeffs: Vec<f64>) -> Result<CgField> {
        if coeffs.len() != self.n_cg {
            return Err(TqgError::Mismatch(format!(
                "CG coefficient vector has length {}, expected {}",
                coeffs.len(),
                self.n_cg
            )));
        }
        Ok(CgField { space: Arc::clone(self), coeffs })
    }

    /// Element-wise L² projection of `func` onto `V_δ^k`.
    pub fn project_dg(self: &Arc<Self>, func: impl Fn(f64, f64) -> f64) -> DgField {
        let nb = self.basis.len();
        let mut coeffs = vec![0.0; self.dg_dofs()];
        let mut rhs = vec![0.0; nb];
        for e in 0..self.mesh.num_elements() {
            let g = self.mesh.geometry(e);
            rhs.iter_mut().for_each(|r| *r = 0.0);
            for (q, p) in self.volume.points.iter().enumerate() {
                let x = g.map(*p);
                let v = self.volume.weights[q] * func(x[0], x[1]);
                for (r, phi) in rhs.iter_mut().zip(self.phi(q)) {
                    *r += v * phi;
                }
            }
            let out = &mut coeffs[e * nb..(e + 1) * nb];
            for i in 0..nb {
                out[i] = (0..nb).map(|j| self.ref_mass_inv[i * nb + j] * rhs[j]).sum();
            }
        }
        DgField { space: Arc::clone(self), coeffs }
    }

    /// Nodal interpolation of `func` onto `W_δ^k`.
    ///
    /// Every element touching a node evaluates `func` in its own unwrapped
    /// frame; the values must agree, otherwise `func` is not periodic.
    pub fn interpolate_cg(self: &Arc<Self>, func: impl Fn(f64, f64) -> f64) -> Result<CgField> {
        let mut coeffs = vec![f64::NAN; self.n_cg];
        let mut scale = 0.0f64;
        let mut worst: Option<(f64, [f64; 2])> = None;
        for e in 0..self.mesh.num_elements() {
            let g = self.mesh.geometry(e);
            for (i, &dof) in self.cg_dofs_of(e).iter().enumerate() {
                let x = g.map(self.basis.nodes()[i]);
                let v = func(x[0], x[1]);
                scale = scale.max(v.abs());
                if coeffs[dof].is_nan() {
                    coeffs[dof] = v;
                } else {
                    let gap = (coeffs[dof] - v).abs();
                    if worst.is_none_or(|(w, _)| gap > w) {
                        worst = Some((gap, x));
                    }
                }
            }
        }
        if let Some((gap, x)) = worst {
            if gap > 1e-10 * scale.max(1.0) {
                return Err(TqgError::NotPeriodic { x: x[0], y: x[1], gap });
            }
        }
        Ok(CgField { space: Arc::clone(self), coeffs })
    }

    /// Inclusion `W_δ^k ⊂ V_δ^k`.
    pub fn cg_to_dg(self: &Arc<Self>, field: &CgField) -> DgField {
        let nb = self.basis.len();
        let mut coeffs = vec![0.0; self.dg_dofs()];
        for e in 0..self.mesh.num_elements() {
            for (i, &dof) in self.cg_dofs_of(e).iter().enumerate() {
                coeffs[e * nb + i] = field.coeffs[dof];
            }
        }
        DgField { space: Arc::clone(self), coeffs }
    }
}

fn build_cg_map(mesh: &MeshTopology, basis: &LagrangeBasis) -> (Vec<usize>, usize) {
    let k = basis.degree();
    let nb = basis.len();
    let nv = mesh.num_vertices();
    let per_facet = basis.facet_interior();
    let per_cell = basis.cell_interior();
    let facet_base = nv;
    let cell_base = nv + mesh.num_facets() * per_facet;
    let total = cell_base + mesh.num_elements() * per_cell;

    let mut map = vec![0; mesh.num_elements() * nb];
    for (e, verts) in mesh.elements().iter().enumerate() {
        let local = &mut map[e * nb..(e + 1) * nb];
        local[..3].copy_from_slice(verts);
        for (f, &fid) in mesh.element_facets(e).iter().enumerate() {
            let facet = &mesh.facets()[fid];
            let forward = facet.minus.element == e && facet.minus.local == f;
            for m in 1..k {
                let along = if forward { m } else { k - m };
                local[basis.facet_node(f, m)] = facet_base + fid * per_facet + (along - 1);
            }
        }
        for c in 0..per_cell {
            local[3 * k + c] = cell_base + e * per_cell + c;
        }
    }
    (map, total)
}

/// Field that can hand out its local coefficients element by element.
pub trait ElementField {
    fn space(&self) -> &Arc<FemSpaces>;

    fn gather(&self, element: usize, out: &mut [f64]);

    /// Value at an arbitrary point of the torus.
    fn value_at(&self, x: f64, y: f64) -> f64 {
        let space = self.space();
        let (e, xi) = space.mesh().locate(x, y);
        let nb = space.local_dofs();
        let mut local = vec![0.0; nb];
        let mut phi = vec![0.0; nb];
        self.gather(e, &mut local);
        space.basis().eval(xi, &mut phi);
        local.iter().zip(&phi).map(|(c, p)| c * p).sum()
    }
}

/// Coefficients on `V_δ^k`, stored element by element.
#[derive(Clone, Debug)]
pub struct DgField {
    space: Arc<FemSpaces>,
    pub coeffs: Vec<f64>,
}

/// Coefficients on `W_δ^k`, indexed by periodically identified global DOFs.
#[derive(Clone, Debug)]
pub struct CgField {
    space: Arc<FemSpaces>,
    pub coeffs: Vec<f64>,
}

impl ElementField for DgField {
    fn space(&self) -> &Arc<FemSpaces> {
        &self.space
    }

    #[inline]
    fn gather(&self, element: usize, out: &mut [f64]) {
        let nb = out.len();
        out.copy_from_slice(&self.coeffs[element * nb..(element + 1) * nb]);
    }
}

impl ElementField for CgField {
    fn space(&self) -> &Arc<FemSpaces> {
        &self.space
    }

    #[inline]
    fn gather(&self, element: usize, out: &mut [f64]) {
        for (o, &dof) in out.iter_mut().zip(self.space.cg_dofs_of(element)) {
            *o = self.coeffs[dof];
        }
    }
}

impl DgField {
    pub fn local(&self, element: usize) -> &[f64] {
        let nb = self.space.local_dofs();
        &self.coeffs[element * nb..(element + 1) * nb]
    }

    /// Same space, new coefficients.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), self.coeffs.len());
        Self { space: Arc::clone(&self.space), coeffs }
    }
}

impl CgField {
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), self.coeffs.len());
        Self { space: Arc::clone(&self.space), coeffs }
    }
}

pub(crate) fn check_same<A: ElementField, B: ElementField>(a: &A, b: &B) -> Result<()> {
    if a.space().same_as(b.space()) {
        Ok(())
    } else {
        Err(TqgError::Mismatch(format!(
            "fields live on different spaces (n={}, k={} vs n={}, k={})",
            a.space().mesh().n(),
            a.space().degree(),
            b.space().mesh().n(),
            b.space().degree()
        )))
    }
}

/// Per-quadrature-point values of a field on one element.
pub(crate) struct Sampler<'a> {
    space: &'a FemSpaces,
    local: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

impl<'a> Sampler<'a> {
    pub(crate) fn new(space: &'a FemSpaces) -> Self {
        let nb = space.local_dofs();
        Self { space, local: vec![0.0; nb], grads: vec![[0.0; 2]; nb] }
    }

    pub(crate) fn load<F: ElementField>(&mut self, field: &F, element: usize) {
        field.gather(element, &mut self.local);
    }

    #[inline]
    pub(crate) fn value(&self, q: usize) -> f64 {
        self.local.iter().zip(self.space.phi(q)).map(|(c, p)| c * p).sum()
    }

    #[inline]
    pub(crate) fn gradient(&mut self, element: usize, q: usize) -> [f64; 2] {
        self.space.physical_grads(element, q, &mut self.grads);
        // basis gradients sum to zero, so shifting by one coefficient keeps
        // the gradient of a constant field exactly zero
        let c0 = self.local[0];
        let mut g = [0.0; 2];
        for (c, d) in self.local.iter().zip(&self.grads) {
            g[0] += (c - c0) * d[0];
            g[1] += (c - c0) * d[1];
        }
        g
    }
}

/// `∫_𝒟 field` by exact quadrature of the polynomial field.
pub fn integrate<F: ElementField>(field: &F) -> f64 {
    let space = field.space();
    let rule = space.volume_rule();
    let mut s = Sampler::new(space);
    let mut total = 0.0;
    for e in 0..space.mesh().num_elements() {
        s.load(field, e);
        let det = space.mesh().geometry(e).det;
        let local: f64 = (0..rule.len()).map(|q| rule.weights[q] * s.value(q)).sum();
        total += det * local;
    }
    total
}

/// `∫_𝒟 g(x, y, field(x, y))` by volume quadrature.
pub fn integrate_with<F: ElementField>(field: &F, g: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let space = field.space();
    let rule = space.volume_rule();
    let mut s = Sampler::new(space);
    let mut total = 0.0;
    for e in 0..space.mesh().num_elements() {
        s.load(field, e);
        let geom = space.mesh().geometry(e);
        let mut local = 0.0;
        for q in 0..rule.len() {
            let x = geom.map(rule.points[q]);
            local += rule.weights[q] * g(x[0], x[1], s.value(q));
        }
        total += geom.det * local;
    }
    total
}

/// L² inner product.
pub fn inner_l2<A: ElementField, B: ElementField>(a: &A, b: &B) -> Result<f64> {
    check_same(a, b)?;
    let space = a.space();
    let rule = space.volume_rule();
    let (mut sa, mut sb) = (Sampler::new(space), Sampler::new(space));
    let mut total = 0.0;
    for e in 0..space.mesh().num_elements() {
        sa.load(a, e);
        sb.load(b, e);
        let det = space.mesh().geometry(e).det;
        let local: f64 = (0..rule.len()).map(|q| rule.weights[q] * sa.value(q) * sb.value(q)).sum();
        total += det * local;
    }
    Ok(total)
}

/// H¹ inner product; broken (element-wise) for DG fields.
pub fn inner_h1<A: ElementField, B: ElementField>(a: &A, b: &B) -> Result<f64> {
    check_same(a, b)?;
    let space = a.space();
    let rule = space.volume_rule();
    let (mut sa, mut sb) = (Sampler::new(space), Sampler::new(space));
    let mut total = 0.0;
    for e in 0..space.mesh().num_elements() {
        sa.load(a, e);
        sb.load(b, e);
        let det = space.mesh().geometry(e).det;
        let mut local = 0.0;
        for q in 0..rule.len() {
            let (ga, gb) = (sa.gradient(e, q), sb.gradient(e, q));
            local += rule.weights[q] * (sa.value(q) * sb.value(q) + ga[0] * gb[0] + ga[1] * gb[1]);
        }
        total += det * local;
    }
    Ok(total)
}

pub fn norm_l2<F: ElementField>(field: &F) -> f64 {
    inner_l2(field, field).expect("same field").max(0.0).sqrt()
}

pub fn norm_h1<F: ElementField>(field: &F) -> f64 {
    inner_h1(field, field).expect("same field").max(0.0).sqrt()
}

/// `max |∇field|` over all volume quadrature points (broken gradient).
pub fn norm_linf_gradient<F: ElementField>(field: &F) -> f64 {
    let space = field.space();
    let mut s = Sampler::new(space);
    let mut best = 0.0f64;
    for e in 0..space.mesh().num_elements() {
        s.load(field, e);
        for q in 0..space.volume_rule().len() {
            let g = s.gradient(e, q);
            best = best.max((g[0] * g[0] + g[1] * g[1]).sqrt());
        }
    }
    best
}

/// `max |field|` over all volume quadrature points.
pub fn norm_linf<F: ElementField>(field: &F) -> f64 {
    let space = field.space();
    let mut s = Sampler::new(space);
    let mut best = 0.0f64;
    for e in 0..space.mesh().num_elements() {
        s.load(field, e);
        for q in 0..space.volume_rule().len() {
            best = best.max(s.value(q).abs());
        }
    }
    best
}

/// Broken `‖∇field‖_{W^{1,2}}`: `(Σ_K ∫_K |∇f|² + |∇²f|²)^{1/2}`.
pub fn norm_gradient_h1<F: ElementField>(field: &F) -> f64 {
    let space = field.space();
    let nb = space.local_dofs();
    let rule = space.volume_rule();
    let mut s = Sampler::new(space);
    let mut hess = vec![[0.0; 3]; nb];
    let mut total = 0.0;
    for e in 0..space.mesh().num_elements() {
        s.load(field, e);
        let geom = space.mesh().geometry(e);
        let k = &geom.inv_jacobian;
        let mut local = 0.0;
        for q in 0..rule.len() {
            let g = s.gradient(e, q);
            let mut h2 = 0.0;
            if space.degree() > 1 {
                space.basis().hessian(rule.points[q], &mut hess);
                let mut href = [[0.0; 2]; 2];
                let c0 = s.local[0];
                for (c, h) in s.local.iter().zip(&hess) {
                    href[0][0] += (c - c0) * h[0];
                    href[0][1] += (c - c0) * h[1];
                    href[1][1] += (c - c0) * h[2];
                }
                href[1][0] = href[0][1];
                for p in 0..2 {
                    for r in 0..2 {
                        let mut v = 0.0;
                        for a in 0..2 {
                            for b in 0..2 {
                                v += k[a][p] * href[a][b] * k[b][r];
                            }
                        }
                        h2 += v * v;
                    }
                }
            }
            local += rule.weights[q] * (g[0] * g[0] + g[1] * g[1] + h2);
        }
        total += geom.det * local;
    }
    total.sqrt()
}

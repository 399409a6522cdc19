//! Conserved quantities, blow-up monitors and error metrics.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::elliptic::{assemble_helmholtz, conjugate_gradient, CsrMatrix, Preconditioner, SolverSettings};
use crate::error::{Result, TqgError};
use crate::fem::{
    check_same, inner_h1, inner_l2, integrate, norm_gradient_h1, norm_h1, norm_l2, norm_linf_gradient, CgField,
    ElementField, FemSpaces, Sampler,
};
use crate::transport::SimState;

/// `E = ½⟨ψ^α, ψ̃⟩_{H¹} − ½⟨h, b⟩`.
pub fn energy(state: &SimState) -> Result<f64> {
    Ok(0.5 * inner_h1(&state.psi, &state.psi_tilde)? - 0.5 * inner_l2(&state.h, &state.b)?)
}

/// `∫ Ψ(b) + ω Φ(b)` by volume quadrature.
pub fn casimir(state: &SimState, psi_fn: impl Fn(f64) -> f64, phi_fn: impl Fn(f64) -> f64) -> Result<f64> {
    check_same(&state.b, &state.omega)?;
    let space = state.space();
    let rule = space.volume_rule();
    let (mut sb, mut sw) = (Sampler::new(space), Sampler::new(space));
    let mut total = 0.0;
    for e in 0..space.mesh().num_elements() {
        sb.load(&state.b, e);
        sw.load(&state.omega, e);
        let mut local = 0.0;
        for q in 0..rule.len() {
            let b = sb.value(q);
            local += rule.weights[q] * (psi_fn(b) + sw.value(q) * phi_fn(b));
        }
        total += space.mesh().geometry(e).det * local;
    }
    Ok(total)
}

/// `max |∇u|` (Frobenius) with `u = ∇⊥ψ^α`.
///
/// For `k ≥ 2` the element-wise Hessian of `ψ^α` is used. For `k = 1` that
/// Hessian vanishes, so `u` is first recovered into the CG space by an L²
/// projection and then differentiated.
#[derive(Debug)]
pub struct VelocityGradient {
    space: Arc<FemSpaces>,
    mass: Option<CsrMatrix>,
}

impl VelocityGradient {
    pub fn new(space: &Arc<FemSpaces>) -> Result<Self> {
        let mass = if space.degree() == 1 { Some(assemble_helmholtz(space, 0.0)?.matrix) } else { None };
        Ok(Self { space: Arc::clone(space), mass })
    }

    pub fn linf(&self, psi: &CgField) -> Result<f64> {
        check_same(psi, &self.space.zero_cg())?;
        match &self.mass {
            Some(mass) => self.recovered(mass, psi),
            None => Ok(hessian_linf(psi)),
        }
    }

    fn recovered(&self, mass: &CsrMatrix, psi: &CgField) -> Result<f64> {
        let space = &*self.space;
        let nb = space.local_dofs();
        let rule = space.volume_rule();
        let mut loads = [vec![0.0; space.cg_dofs()], vec![0.0; space.cg_dofs()]];
        let mut s = Sampler::new(space);
        for e in 0..space.mesh().num_elements() {
            s.load(psi, e);
            let det = space.mesh().geometry(e).det;
            let dofs = space.cg_dofs_of(e);
            for q in 0..rule.len() {
                let g = s.gradient(e, q);
                let w = det * rule.weights[q];
                for (i, p) in space.phi(q).iter().enumerate().take(nb) {
                    loads[0][dofs[i]] -= w * g[1] * p;
                    loads[1][dofs[i]] += w * g[0] * p;
                }
            }
        }
        let settings = SolverSettings { tolerance: 1e-12, max_iterations: 10_000, preconditioner: Preconditioner::Jacobi };
        let mut comps = Vec::with_capacity(2);
        for load in &loads {
            let mut x = vec![0.0; load.len()];
            conjugate_gradient(mass, load, &mut x, &settings)?;
            comps.push(self.space.cg_from(x)?);
        }
        let (mut su, mut sv) = (Sampler::new(space), Sampler::new(space));
        let mut best = 0.0f64;
        for e in 0..space.mesh().num_elements() {
            su.load(&comps[0], e);
            sv.load(&comps[1], e);
            for q in 0..rule.len() {
                let (gu, gv) = (su.gradient(e, q), sv.gradient(e, q));
                best = best.max((gu[0] * gu[0] + gu[1] * gu[1] + gv[0] * gv[0] + gv[1] * gv[1]).sqrt());
            }
        }
        Ok(best)
    }
}

/// Max Frobenius norm of the broken Hessian over volume quadrature points.
fn hessian_linf(psi: &CgField) -> f64 {
    let space = psi.space();
    let nb = space.local_dofs();
    let rule = space.volume_rule();
    let mut local = vec![0.0; nb];
    let mut hess = vec![[0.0; 3]; nb];
    let mut best = 0.0f64;
    for e in 0..space.mesh().num_elements() {
        psi.gather(e, &mut local);
        let k = space.mesh().geometry(e).inv_jacobian;
        for p in &rule.points {
            space.basis().hessian(*p, &mut hess);
            let mut r = [[0.0; 2]; 2];
            for (c, h) in local.iter().zip(&hess) {
                r[0][0] += c * h[0];
                r[0][1] += c * h[1];
                r[1][1] += c * h[2];
            }
            r[1][0] = r[0][1];
            let mut f2 = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let mut v = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            v += k[i][a] * r[i][j] * k[j][b];
                        }
                    }
                    f2 += v * v;
                }
            }
            best = best.max(f2.sqrt());
        }
    }
    best
}

/// Trapezoidal time integrals of `‖∇b‖_∞`, `‖∇u‖_∞` and `‖∇b‖_{1,2}`.
#[derive(Clone, Debug)]
pub struct BkmMonitor {
    /// Flag a quantity once it exceeds this multiple of its initial value.
    pub threshold: f64,
    initial: Option<[f64; 3]>,
    last: Option<(f64, [f64; 3])>,
    integrals: [f64; 3],
    suspicion: [bool; 3],
}

impl Default for BkmMonitor {
    fn default() -> Self {
        Self::new(100.0)
    }
}

impl BkmMonitor {
    pub fn new(threshold: f64) -> Self {
        Self { threshold, initial: None, last: None, integrals: [0.0; 3], suspicion: [false; 3] }
    }

    /// Adds a sample at time `t`; the first sample only sets the baseline.
    pub fn update(&mut self, t: f64, values: [f64; 3]) -> Result<()> {
        if let Some((t0, prev)) = self.last {
            if t <= t0 {
                return Err(TqgError::InvalidParameter(format!("monitor times must increase ({t} after {t0})")));
            }
            for i in 0..3 {
                self.integrals[i] += 0.5 * (t - t0) * (prev[i] + values[i]);
            }
        }
        let initial = *self.initial.get_or_insert(values);
        for i in 0..3 {
            if values[i] > self.threshold * initial[i] && values[i] > 0.0 {
                self.suspicion[i] = true;
            }
        }
        self.last = Some((t, values));
        Ok(())
    }

    pub fn integrals(&self) -> [f64; 3] {
        self.integrals
    }

    pub fn suspicion(&self) -> [bool; 3] {
        self.suspicion
    }

    pub fn any_suspicion(&self) -> bool {
        self.suspicion.iter().any(|&s| s)
    }
}

/// `(e_b, e_ω)` of `state` against the α = 0 `reference`:
/// broken-H¹ relative error of `b` and L² relative error of `ω`.
pub fn relative_errors(state: &SimState, reference: &SimState) -> Result<(f64, f64)> {
    check_same(&state.b, &reference.b)?;
    if (state.t - reference.t).abs() > 1e-9 * state.t.abs().max(1.0) {
        return Err(TqgError::Mismatch(format!("time stamps differ: {} vs {}", state.t, reference.t)));
    }
    let db = state.b.with_coeffs(state.b.coeffs.iter().zip(&reference.b.coeffs).map(|(a, b)| a - b).collect());
    let dw = state
        .omega
        .with_coeffs(state.omega.coeffs.iter().zip(&reference.omega.coeffs).map(|(a, b)| a - b).collect());
    Ok((ratio(norm_h1(&db), norm_h1(&reference.b)), ratio(norm_l2(&dw), norm_l2(&reference.omega))))
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// One row of the diagnostics stream.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub energy: f64,
    pub mass_b: f64,
    pub mass_omega: f64,
    pub grad_b_linf: f64,
    pub grad_u_linf: f64,
    pub grad_b_h1: f64,
    pub int_grad_b_linf: f64,
    pub int_grad_u_linf: f64,
    pub int_grad_b_h1: f64,
    pub e_b: Option<f64>,
    pub e_omega: Option<f64>,
    pub blowup_suspected: bool,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "time,energy,mass_b,mass_omega,grad_b_linf,grad_u_linf,grad_b_h1,\
int_grad_b_linf,int_grad_u_linf,int_grad_b_h1,e_b,e_omega";

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        for v in [
            self.time,
            self.energy,
            self.mass_b,
            self.mass_omega,
            self.grad_b_linf,
            self.grad_u_linf,
            self.grad_b_h1,
            self.int_grad_b_linf,
            self.int_grad_u_linf,
            self.int_grad_b_h1,
        ] {
            let _ = write!(s, "{v:e},");
        }
        if let Some(e) = self.e_b {
            let _ = write!(s, "{e:e}");
        }
        s.push(',');
        if let Some(e) = self.e_omega {
            let _ = write!(s, "{e:e}");
        }
        s
    }
}

/// Per-run diagnostics driver.
#[derive(Debug)]
pub struct Diagnostics {
    grad_u: VelocityGradient,
    monitor: BkmMonitor,
}

impl Diagnostics {
    pub fn new(space: &Arc<FemSpaces>, threshold: f64) -> Result<Self> {
        Ok(Self { grad_u: VelocityGradient::new(space)?, monitor: BkmMonitor::new(threshold) })
    }

    pub fn monitor(&self) -> &BkmMonitor {
        &self.monitor
    }

    /// Instantaneous `[‖∇b‖_∞, ‖∇u‖_∞, ‖∇b‖_{1,2}]`.
    pub fn bkm_values(&self, state: &SimState) -> Result<[f64; 3]> {
        Ok([norm_linf_gradient(&state.b), self.grad_u.linf(&state.psi)?, norm_gradient_h1(&state.b)])
    }

    pub fn record(&mut self, state: &SimState, reference: Option<&SimState>) -> Result<DiagnosticsRecord> {
        let values = self.bkm_values(state)?;
        self.monitor.update(state.t, values)?;
        let ints = self.monitor.integrals();
        let errors = reference.map(|r| relative_errors(state, r)).transpose()?;
        Ok(DiagnosticsRecord {
            time: state.t,
            energy: energy(state)?,
            mass_b: integrate(&state.b),
            mass_omega: integrate(&state.omega),
            grad_b_linf: values[0],
            grad_u_linf: values[1],
            grad_b_h1: values[2],
            int_grad_b_linf: ints[0],
            int_grad_u_linf: ints[1],
            int_grad_b_h1: ints[2],
            e_b: errors.map(|e| e.0),
            e_omega: errors.map(|e| e.1),
            blowup_suspected: self.monitor.any_suspicion(),
        })
    }
}

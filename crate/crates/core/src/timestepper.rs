//! Three-stage SSPRK3 time integration of the coupled buoyancy/vorticity
//! system, with the stream function re-solved before every stage.

use std::sync::Arc;

use crate::elliptic::{SolveStats, SolverSettings, StreamSolver};
use crate::error::{Result, TqgError};
use crate::fem::{check_same, norm_linf_gradient, CgField, DgField, FemSpaces};
use crate::transport::{SimState, Transport};

/// Stage weights `(a, b)` in `u ← a·y⁰ + b·(u + Δt L(u))`.
pub const SSPRK3_STAGES: [(f64, f64); 3] = [(0.0, 1.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0)];

/// One SSPRK3 step of `y' = L(y)`. `rhs(stage, u, out)` writes `L(u)`.
pub fn ssprk3_step<F>(y: &mut [f64], dt: f64, mut rhs: F) -> Result<()>
where
    F: FnMut(usize, &[f64], &mut [f64]) -> Result<()>,
{
    let y0 = y.to_vec();
    let mut l = vec![0.0; y.len()];
    for (stage, &(a, b)) in SSPRK3_STAGES.iter().enumerate() {
        rhs(stage, y, &mut l)?;
        for ((u, u0), d) in y.iter_mut().zip(&y0).zip(&l) {
            *u = a * u0 + b * (*u + dt * d);
        }
    }
    Ok(())
}

/// Time-step size and step count of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSettings {
    pub dt: f64,
    pub steps: usize,
    pub report_cfl: bool,
}

impl StepSettings {
    pub fn validate(&self) -> Result<()> {
        if self.dt.is_finite() && self.dt > 0.0 {
            Ok(())
        } else {
            Err(TqgError::InvalidParameter(format!("Δt must be positive, got {}", self.dt)))
        }
    }
}

/// Elliptic work done during one step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    pub solves: usize,
    pub cg_iterations: usize,
}

impl StepStats {
    fn add(&mut self, stats: &[SolveStats; 2]) {
        self.solves += 1;
        self.cg_iterations += stats[0].iterations + stats[1].iterations;
    }
}

/// Operators shared by every step of one simulation.
#[derive(Debug)]
pub struct TqgModel {
    space: Arc<FemSpaces>,
    solver: StreamSolver,
    transport: Transport,
}

impl TqgModel {
    pub fn new(space: &Arc<FemSpaces>, alpha: f64, settings: SolverSettings) -> Result<Self> {
        Ok(Self {
            space: Arc::clone(space),
            solver: StreamSolver::new(space, alpha, settings)?,
            transport: Transport::new(space),
        })
    }

    pub fn space(&self) -> &Arc<FemSpaces> {
        &self.space
    }

    pub fn alpha(&self) -> f64 {
        self.solver.alpha()
    }

    pub fn solver(&self) -> &StreamSolver {
        &self.solver
    }

    pub fn transport(&self) -> &Transport {
        &self.transport
    }

    /// Builds a state and performs the initial elliptic solve.
    pub fn initial_state(&self, b: DgField, omega: DgField, h: CgField, f: CgField, t: f64) -> Result<SimState> {
        let zero = self.space.zero_cg();
        check_same(&b, &zero)?;
        let mut state = SimState {
            b,
            omega,
            psi_tilde: zero.clone(),
            psi: zero,
            h,
            f,
            alpha: self.alpha(),
            t,
        };
        state.check()?;
        self.resolve(&mut state)?;
        Ok(state)
    }

    /// Recomputes `ψ̃, ψ^α` from the current `ω`, warm-started from `ψ̃`.
    pub fn resolve(&self, state: &mut SimState) -> Result<[SolveStats; 2]> {
        self.solver.solve_into(&state.omega.coeffs, &state.f, &mut state.psi_tilde.coeffs, &mut state.psi.coeffs)
    }

    /// Advances `state` by `dt`. On entry `ψ` must match `ω`; on exit it
    /// matches the new `ω`.
    pub fn step(&self, state: &mut SimState, dt: f64) -> Result<StepStats> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TqgError::InvalidParameter(format!("Δt must be positive, got {dt}")));
        }
        if (state.alpha - self.alpha()).abs() > 0.0 {
            return Err(TqgError::Mismatch(format!("state α={} but model α={}", state.alpha, self.alpha())));
        }
        state.check()?;
        check_same(&state.b, &self.space.zero_dg())?;
        let nd = state.b.coeffs.len();
        let mut y = [state.b.coeffs.as_slice(), state.omega.coeffs.as_slice()].concat();
        let mut psi_tilde = state.psi_tilde.coeffs.clone();
        let mut psi = state.psi.coeffs.clone();
        let mut stats = StepStats::default();
        let h = &state.h.coeffs;
        let f = &state.f;
        ssprk3_step(&mut y, dt, |stage, u, out| {
            let (b, omega) = u.split_at(nd);
            if stage > 0 {
                stats.add(&self.solver.solve_into(omega, f, &mut psi_tilde, &mut psi)?);
            }
            let (db, domega) = out.split_at_mut(nd);
            self.transport.rhs_into(b, omega, &psi, h, db, domega);
            Ok(())
        })?;
        let (b, omega) = y.split_at(nd);
        state.b.coeffs.copy_from_slice(b);
        state.omega.coeffs.copy_from_slice(omega);
        state.psi_tilde.coeffs = psi_tilde;
        stats.add(&self.resolve(state)?);
        state.t += dt;
        Ok(stats)
    }

    /// Runs `settings.steps` steps, calling `observe(step_index, state)` after
    /// each one. Elliptic failures are reported with the failing step index.
    pub fn advance<F>(&self, state: &mut SimState, settings: &StepSettings, mut observe: F) -> Result<()>
    where
        F: FnMut(usize, &SimState) -> Result<()>,
    {
        settings.validate()?;
        for i in 1..=settings.steps {
            self.step(state, settings.dt)
                .map_err(|e| TqgError::StepFailed { step: i, source: Box::new(e) })?;
            observe(i, state)?;
        }
        Ok(())
    }
}

/// Advisory Courant number `Δt · max|u| · n · (2k + 1)`.
pub fn cfl_number(state: &SimState, dt: f64) -> f64 {
    let space = state.space();
    let umax = norm_linf_gradient(&state.psi);
    dt * umax * space.mesh().n() as f64 * (2 * space.degree() + 1) as f64
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fem::{integrate, norm_l2};

    #[test]
    fn stage_weights_are_convex() {
        for (a, b) in SSPRK3_STAGES {
            assert!(a >= 0.0 && b > 0.0);
            assert!((a + b - 1.0).abs() < 1e-16);
        }
    }

    #[test]
    fn amplification_factor_of_linear_test_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (zr, zi) = loop {
                let z: (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if z.0 * z.0 + z.1 * z.1 <= 1.0 {
                    break z;
                }
            };
            // y' = λ y with complex λ written as a real 2×2 system, Δt = 1
            let mut y = [1.0, 0.0];
            ssprk3_step(&mut y, 1.0, |_, u, out| {
                out[0] = zr * u[0] - zi * u[1];
                out[1] = zi * u[0] + zr * u[1];
                Ok(())
            })
            .unwrap();
            let z2 = (zr * zr - zi * zi, 2.0 * zr * zi);
            let z3 = (z2.0 * zr - z2.1 * zi, z2.0 * zi + z2.1 * zr);
            let expect = (1.0 + zr + z2.0 / 2.0 + z3.0 / 6.0, zi + z2.1 / 2.0 + z3.1 / 6.0);
            assert!((y[0] - expect.0).abs() < 1e-14 && (y[1] - expect.1).abs() < 1e-14);
        }
    }

    #[test]
    fn rhs_errors_abort_the_step() {
        let mut y = [1.0];
        let r = ssprk3_step(&mut y, 0.1, |stage, _, _| {
            if stage == 1 {
                Err(TqgError::NotConverged { iterations: 3, residual: 1.0 })
            } else {
                Ok(())
            }
        });
        assert!(r.is_err());
    }

    #[test]
    fn frozen_advection_is_third_order_in_time() {
        let space = FemSpaces::new(16, 1).unwrap();
        let tr = Transport::new(&space);
        let psi = space.interpolate_cg(|x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin() / (2.0 * PI)).unwrap();
        let b0 = space.project_dg(|x, y| (2.0 * PI * (x + y)).cos());
        let solve = |dt: f64, steps: usize| {
            let mut y = b0.coeffs.clone();
            for _ in 0..steps {
                ssprk3_step(&mut y, dt, |_, u, out| {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    tr.advect_into(u, &psi.coeffs, 1.0, out);
                    tr.apply_inverse_mass(out);
                    Ok(())
                })
                .unwrap();
            }
            y
        };
        let t = 0.1;
        let runs: Vec<Vec<f64>> = [10, 20, 40].iter().map(|&m| solve(t / m as f64, m)).collect();
        let diff = |a: &[f64], b: &[f64]| norm_l2(&b0.with_coeffs(a.iter().zip(b).map(|(x, y)| x - y).collect()));
        let ratio = diff(&runs[0], &runs[1]) / diff(&runs[1], &runs[2]);
        assert!((ratio.log2() - 3.0).abs() < 0.15, "ratio={ratio}");
    }

    fn model_and_state(n: usize, k: usize, alpha: f64) -> (TqgModel, SimState) {
        let space = FemSpaces::new(n, k).unwrap();
        let model = TqgModel::new(&space, alpha, SolverSettings::default()).unwrap();
        let b = space.project_dg(|_, y| (2.0 * PI * y).sin() - 1.0);
        let omega = space.project_dg(|x, y| (4.0 * PI * x).sin() * (2.0 * PI * y).sin() + 0.3 * (2.0 * PI * x).cos());
        let h = space.interpolate_cg(|x, _| (2.0 * PI * x).cos()).unwrap();
        let f = space.interpolate_cg(|x, y| 0.4 * (4.0 * PI * x).cos() * (4.0 * PI * y).cos()).unwrap();
        let state = model.initial_state(b, omega, h, f, 0.0).unwrap();
        (model, state)
    }

    #[test]
    fn constant_fields_are_steady() {
        let space = FemSpaces::new(8, 1).unwrap();
        let model = TqgModel::new(&space, 0.01, SolverSettings::default()).unwrap();
        let b = space.project_dg(|_, _| 0.5);
        let omega = space.project_dg(|_, _| -0.25);
        let h = space.interpolate_cg(|_, _| 1.0).unwrap();
        let mut state = model.initial_state(b.clone(), omega.clone(), h, space.zero_cg(), 0.0).unwrap();
        model.step(&mut state, 0.01).unwrap();
        assert!(state.b.coeffs.iter().zip(&b.coeffs).all(|(x, y)| (x - y).abs() < 1e-14));
        assert!(state.omega.coeffs.iter().zip(&omega.coeffs).all(|(x, y)| (x - y).abs() < 1e-14));
        assert!((state.t - 0.01).abs() < 1e-16);
    }

    #[test]
    fn step_preserves_masses_and_keeps_psi_consistent() {
        let (model, mut state) = model_and_state(12, 1, 1.0 / 256.0);
        let (mb, mw) = (integrate(&state.b), integrate(&state.omega));
        for _ in 0..5 {
            let stats = model.step(&mut state, 0.005).unwrap();
            assert_eq!(stats.solves, 3);
        }
        assert!((integrate(&state.b) - mb).abs() < 1e-13);
        assert!((integrate(&state.omega) - mw).abs() < 1e-13);
        let fresh = model.solver().solve(&state.omega, &state.f, None).unwrap();
        let gap = fresh.psi.coeffs.iter().zip(&state.psi.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-8, "gap={gap}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let (model, mut state) = model_and_state(4, 1, 0.0);
        assert!(model.step(&mut state, 0.0).is_err());
        assert!(model.step(&mut state, f64::NAN).is_err());
        state.alpha = 0.5;
        assert!(model.step(&mut state, 0.1).is_err());
        assert!(StepSettings { dt: -1.0, steps: 1, report_cfl: false }.validate().is_err());
    }

    #[test]
    fn elliptic_failure_reports_step_index() {
        let space = FemSpaces::new(8, 1).unwrap();
        let settings = SolverSettings { max_iterations: 2, tolerance: 1e-14, ..Default::default() };
        let model = TqgModel::new(&space, 0.0, settings).unwrap();
        let (_, state) = model_and_state(8, 1, 0.0);
        let mut state = state;
        let err = model
            .advance(&mut state, &StepSettings { dt: 0.01, steps: 3, report_cfl: false }, |_, _| Ok(()))
            .unwrap_err();
        assert!(matches!(err, TqgError::StepFailed { step: 1, .. }));
    }

    #[test]
    fn cfl_scales_linearly() {
        let (_, state) = model_and_state(16, 1, 0.0);
        let c1 = cfl_number(&state, 0.001);
        let c2 = cfl_number(&state, 0.002);
        assert!(c1 > 0.0);
        assert!((c2 - 2.0 * c1).abs() < 1e-15);
        let mut still = state.clone();
        still.psi.coeffs.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(cfl_number(&still, 0.1), 0.0);
    }
}

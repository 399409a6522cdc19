use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fem::{inner_l2, integrate, norm_l2};
use crate::quadrature::QuadratureRule;

fn s(x: f64, y: f64) -> f64 {
    oracle(x, y)
}

fn velocity_error(psi: &CgField) -> f64 {
    let space = psi.space();
    let rule = QuadratureRule::triangle(10);
    let nb = space.local_dofs();
    let (mut local, mut grads) = (vec![0.0; nb], vec![[0.0; 2]; nb]);
    let mut total = 0.0;
    for e in 0..space.mesh().num_elements() {
        psi.gather(e, &mut local);
        let g = space.mesh().geometry(e);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            space.basis().grad(*p, &mut grads);
            let mut d = [0.0; 2];
            for (c, gr) in local.iter().zip(&grads) {
                let pg = g.physical_gradient(*gr);
                d[0] += c * pg[0];
                d[1] += c * pg[1];
            }
            let x = g.map(*p);
            let tp = 2.0 * PI;
            let sx = tp * (tp * x[0]).cos() * (tp * x[1]).sin();
            let sy = tp * (tp * x[0]).sin() * (tp * x[1]).cos();
            total += g.det * w * ((-d[1] + sy).powi(2) + (d[0] - sx).powi(2));
        }
    }
    total.sqrt()
}

/// Independent P1 assembly from closed-form element matrices.
fn dense_p1_oracle(space: &FemSpaces, alpha: f64) -> Vec<Vec<f64>> {
    let n = space.cg_dofs();
    let mut a = vec![vec![0.0; n]; n];
    let mesh = space.mesh();
    for (e, verts) in mesh.elements().iter().enumerate() {
        let x = mesh.element_coords(e);
        let area = 0.5 * ((x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]));
        // ∇λ_i = perp(opposite edge) / (2 area)
        let grad = |i: usize| {
            let (p, q) = (x[(i + 1) % 3], x[(i + 2) % 3]);
            [(p[1] - q[1]) / (2.0 * area), (q[0] - p[0]) / (2.0 * area)]
        };
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = (grad(i), grad(j));
                let m = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                let k = area * (gi[0] * gj[0] + gi[1] * gj[1]);
                a[verts[i]][verts[j]] += alpha * k + m;
            }
        }
    }
    a
}

#[test]
fn rejects_negative_alpha() {
    let s = FemSpaces::new(4, 1).unwrap();
    assert!(assemble_helmholtz(&s, -1e-3).is_err());
    assert!(assemble_helmholtz(&s, f64::NAN).is_err());
    assert!(StreamSolver::new(&s, -1.0, SolverSettings::default()).is_err());
}

#[test]
fn settings_validation() {
    let mut st = SolverSettings::default();
    assert!(st.validate().is_ok());
    st.tolerance = 1.5;
    assert!(st.validate().is_err());
    st.tolerance = 1e-8;
    st.max_iterations = 0;
    assert!(st.validate().is_err());
}

#[test]
fn mass_matrix_integrates_to_domain_area() {
    for k in 1..=3 {
        let s = FemSpaces::new(5, k).unwrap();
        let m = assemble_helmholtz(&s, 0.0).unwrap().matrix;
        let total: f64 = (0..m.dim()).flat_map(|i| m.row(i).map(|(_, v)| v).collect::<Vec<_>>()).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }
}

#[test]
fn stiffness_annihilates_constants() {
    let s = FemSpaces::new(6, 2).unwrap();
    let a = assemble_helmholtz(&s, 1.0).unwrap().matrix;
    let m = assemble_helmholtz(&s, 0.0).unwrap().matrix;
    let ones = vec![1.0; a.dim()];
    let (mut ya, mut ym) = (vec![0.0; a.dim()], vec![0.0; a.dim()]);
    a.mul_vec(&ones, &mut ya);
    m.mul_vec(&ones, &mut ym);
    for (p, q) in ya.iter().zip(&ym) {
        assert!((p - q).abs() < 1e-13);
    }
}

#[test]
fn matches_dense_oracle_on_two_by_two() {
    let s = FemSpaces::new(2, 1).unwrap();
    for alpha in [0.0, 0.3, 1.0] {
        let a = assemble_helmholtz(&s, alpha).unwrap().matrix;
        let oracle = dense_p1_oracle(&s, alpha);
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                assert!((a.get(i, j) - oracle[i][j]).abs() < 1e-13, "alpha={alpha} ({i},{j})");
            }
        }
    }
}

#[test]
fn operator_is_symmetric_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 1..=3 {
        let s = FemSpaces::new(4, k).unwrap();
        for alpha in [0.0, 1.0 / 65536.0, 1.0 / 256.0, 1.0] {
            let a = assemble_helmholtz(&s, alpha).unwrap().matrix;
            assert!(a.asymmetry() < 1e-15);
            let mut y = vec![0.0; a.dim()];
            for _ in 0..10 {
                let x: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                a.mul_vec(&x, &mut y);
                assert!(x.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>() > 0.0);
            }
        }
    }
}

#[test]
fn constants_solve_exactly() {
    let s = FemSpaces::new(8, 2).unwrap();
    let f = s.interpolate_cg(|_, _| 0.25).unwrap();
    let omega = s.project_dg(|_, _| 1.75);
    for alpha in [0.0, 0.01, 1.0] {
        let (pt, p) = solve_stream(&omega, &f, alpha, SolverSettings::default()).unwrap();
        // ω - f = 1.5  =>  ψ̃ = ψ^α = -1.5
        assert!(pt.coeffs.iter().all(|c| (c + 1.5).abs() < 1e-9));
        assert!(p.coeffs.iter().all(|c| (c + 1.5).abs() < 1e-9));
    }
}

#[test]
fn alpha_zero_second_solve_is_identity() {
    let s = FemSpaces::new(8, 1).unwrap();
    let f = s.interpolate_cg(|x, y| (4.0 * PI * x).cos() * (4.0 * PI * y).cos()).unwrap();
    let omega = s.project_dg(|x, y| (2.0 * PI * x).sin() + (6.0 * PI * y).cos());
    let solver = StreamSolver::new(&s, 0.0, SolverSettings::default()).unwrap();
    let sol = solver.solve(&omega, &f, None).unwrap();
    assert_eq!(sol.psi.coeffs, sol.psi_tilde.coeffs);
    assert_eq!(sol.stats[1].iterations, 0);
}

#[test]
fn mean_zero_compatibility() {
    let s = FemSpaces::new(16, 1).unwrap();
    let f = s.interpolate_cg(|x, y| 0.4 * (4.0 * PI * x).cos() * (4.0 * PI * y).cos()).unwrap();
    let omega = s.project_dg(|x, y| (8.0 * PI * x).sin() * (2.0 * PI * y).cos());
    let (pt, _) = solve_stream(&omega, &f, 1.0 / 256.0, SolverSettings::default()).unwrap();
    let mean_source = integrate(&omega) - integrate(&f);
    assert!(mean_source.abs() < 1e-12);
    assert!((integrate(&pt) + mean_source).abs() < 1e-10);
}

#[test]
fn reports_non_convergence() {
    let s = FemSpaces::new(16, 1).unwrap();
    let f = s.zero_cg();
    let omega = s.project_dg(s_fn);
    let settings = SolverSettings { tolerance: 1e-12, max_iterations: 1, ..Default::default() };
    let err = solve_stream(&omega, &f, 0.1, settings).unwrap_err();
    assert!(matches!(err, TqgError::NotConverged { iterations: 1, .. }));
}

fn s_fn(x: f64, y: f64) -> f64 {
    s(x, y) + 0.5 * (6.0 * PI * x).cos()
}

fn manufactured(n: usize, k: usize, alpha: f64) -> (CgField, CgField) {
    let s_ = FemSpaces::new(n, k).unwrap();
    let f = s_.zero_cg();
    let c = -(LAMBDA + 1.0) * (1.0 + alpha * LAMBDA);
    let omega = s_.project_dg(|x, y| c * s(x, y));
    let settings = SolverSettings { tolerance: 1e-12, ..Default::default() };
    solve_stream(&omega, &f, alpha, settings).unwrap()
}

#[test]
fn manufactured_solution_converges() {
    for k in 1..=2 {
        for alpha in [0.0, 1.0 / 4096.0] {
            let mut err_psi = Vec::new();
            let mut err_tilde = Vec::new();
            let mut err_vel = Vec::new();
            for n in [16, 32, 64] {
                let (pt, p) = manufactured(n, k, alpha);
                err_psi.push(l2_error(&p, s));
                err_tilde.push(l2_error(&pt, |x, y| (1.0 + alpha * LAMBDA) * s(x, y)));
                err_vel.push(velocity_error(&p));
            }
            for w in err_psi.windows(2).chain(err_tilde.windows(2)) {
                let rate = (w[0] / w[1]).log2();
                assert!(rate > k as f64 + 0.9, "k={k} α={alpha} rate={rate}");
            }
            for w in err_vel.windows(2) {
                let rate = (w[0] / w[1]).log2();
                assert!(rate > k as f64 - 0.1, "velocity k={k} α={alpha} rate={rate}");
            }
        }
    }
}

#[test]
fn alpha_to_zero_is_first_order() {
    // fixed data ω = -(λ+1) s  =>  ψ^α = s / (1 + αλ), ψ^0 = s
    let sp = FemSpaces::new(24, 1).unwrap();
    let f = sp.zero_cg();
    let omega = sp.project_dg(|x, y| -(LAMBDA + 1.0) * s(x, y));
    let settings = SolverSettings { tolerance: 1e-13, ..Default::default() };
    let (_, p0) = solve_stream(&omega, &f, 0.0, settings).unwrap();
    let alphas = [1e-3, 1e-4, 1e-5];
    let errs: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            let (_, pa) = solve_stream(&omega, &f, a, settings).unwrap();
            let diff = pa.with_coeffs(pa.coeffs.iter().zip(&p0.coeffs).map(|(x, y)| x - y).collect());
            crate::fem::norm_h1(&diff)
        })
        .collect();
    for i in 0..2 {
        let slope = (errs[i] / errs[i + 1]).log10() / (alphas[i] / alphas[i + 1]).log10();
        assert!((slope - 1.0).abs() < 0.05, "slope={slope}");
    }
}

#[test]
fn cg_converges_for_every_tested_alpha() {
    let sp = FemSpaces::new(32, 1).unwrap();
    let f = sp.interpolate_cg(|x, y| 0.4 * (4.0 * PI * x).cos() * (4.0 * PI * y).cos()).unwrap();
    let omega = sp.project_dg(|x, y| (8.0 * PI * x).sin() * (8.0 * PI * y).sin());
    for alpha in [0.0, 1.0 / 65536.0, 1.0 / 256.0, 1.0] {
        let solver = StreamSolver::new(&sp, alpha, SolverSettings::default()).unwrap();
        let sol = solver.solve(&omega, &f, None).unwrap();
        assert!(sol.stats.iter().all(|st| st.residual <= 1e-10));
        // weak residual check against the assembled forms
        let rhs = solver.vorticity_load(&omega.coeffs, &f);
        let mut y = vec![0.0; rhs.len()];
        solver.h1_gram().mul_vec(&sol.psi_tilde.coeffs, &mut y);
        let res: f64 = y.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * norm * 1.0001);
    }
    let _ = inner_l2(&omega, &f).unwrap();
    let _ = norm_l2(&f);
}

#[test]
fn convergence_study_rates() {
    let settings = SolverSettings { tolerance: 1e-12, ..Default::default() };
    let study = manufactured_convergence(1, 0.0, &[16, 32, 64], settings).unwrap();
    assert_eq!(study.rates().len(), 2);
    assert!(study.min_rate().unwrap() > 1.9, "{:?}", study.rates());
    assert!(manufactured_convergence(1, 0.0, &[], settings).is_err());
}

mod common;

use common::{affine, brute_force_bpdn, gaussian_matrix, gaussian_vec, grid_search_projection, least_squares};
use knollset::solver::{
    asym_l1, bpdn_step, check_descent, pareto_slope, project_asym_ball, solve_fixed, spg_lasso, InnerExit,
    ResidualProblem, SolveStatus, SolverParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight(n: usize) -> SolverParams<f64> {
    SolverParams {
        spg_tol: 1e-13,
        max_spg: 20_000,
        tau_mx: f64::INFINITY,
        eps1: 1e-13,
        truncate_inner: false,
        ..SolverParams::new(n, 0.1)
    }
}

fn phi(p: &impl ResidualProblem<f64>, n: usize, tau: f64, params: &SolverParams<f64>) -> f64 {
    let out = spg_lasso(p, &vec![0.0; n], tau, params).unwrap();
    p.norm(&out.residual)
}

#[test]
fn projection_matches_grid_search_in_four_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for &w in &[0.1, 1.0, 10.0] {
        for _ in 0..3 {
            let t: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            if asym_l1(&t, w) <= 1.0 {
                continue;
            }
            let got = project_asym_ball(&t, 1.0, w).unwrap();
            let reference = grid_search_projection(&t, 1.0, w);
            for (g, r) in got.iter().zip(&reference) {
                assert!((g - r).abs() < 1e-4, "w={w} t={t:?}: {got:?} vs {reference:?}");
            }
        }
    }
}

#[test]
fn lasso_with_loose_radius_is_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (m, n) = (12, 5);
    let a = gaussian_matrix(&mut rng, m, n);
    let b = gaussian_vec(&mut rng, m);
    let p = affine(m, n, &a, &b);
    let x = least_squares(m, n, &a, &b);
    let tau = asym_l1(&x, 1.0) * 1.5;
    let out = spg_lasso(&p, &vec![0.0; n], tau, &tight(n)).unwrap();
    for (d, e) in out.delta.iter().zip(&x) {
        assert!((d - e).abs() < 1e-5);
    }
}

#[test]
fn pareto_slope_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (m, n) = (10, 30);
    for &w in &[1.0, 0.3, 4.0] {
        let a = gaussian_matrix(&mut rng, m, n);
        let mut x = vec![0.0; n];
        x[2] = 0.5;
        x[11] = -0.4;
        x[27] = 0.3;
        let mut b: Vec<f64> = a.chunks(n).map(|row| row.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
        for v in &mut b {
            *v += 0.05 * rng.random_range(-1.0..1.0);
        }
        let p = affine(m, n, &a, &b);
        let params = SolverParams { w, ..tight(n) };
        let tau = 0.4 * asym_l1(&x, w);
        let out = spg_lasso(&p, &vec![0.0; n], tau, &params).unwrap();
        let slope = pareto_slope(&p, &vec![0.0; n], &out.residual, w).unwrap();
        let h = 1e-4;
        let fd = (phi(&p, n, tau + h, &params) - phi(&p, n, tau - h, &params)) / (2.0 * h);
        assert!(slope < 0.0);
        assert!((fd - slope).abs() <= 1e-3 * slope.abs(), "w={w}: fd {fd} slope {slope}");
    }
}

#[test]
fn pareto_slope_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (m, n) = (5, 12);
    let a = gaussian_matrix(&mut rng, m, n);
    let b = gaussian_vec(&mut rng, m);
    let params = tight(n);
    let p = affine(m, n, &a, &b);
    let tau = 0.2;
    let base = spg_lasso(&p, &vec![0.0; n], tau, &params).unwrap();
    let s0 = pareto_slope(&p, &vec![0.0; n], &base.residual, 1.0).unwrap();
    for scale in [0.5, 3.0] {
        let bs: Vec<f64> = b.iter().map(|v| v * scale).collect();
        let ps = affine(m, n, &a, &bs);
        let out = spg_lasso(&ps, &vec![0.0; n], tau * scale, &params).unwrap();
        assert!((ps.norm(&out.residual) - scale * p.norm(&base.residual)).abs() < 1e-8);
        let s = pareto_slope(&ps, &vec![0.0; n], &out.residual, 1.0).unwrap();
        assert!((s - s0).abs() < 1e-6 * s0.abs());
    }
}

#[test]
fn bpdn_step_reaches_basis_pursuit_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 6;
    let a = gaussian_matrix(&mut rng, n, n);
    let b = gaussian_vec(&mut rng, n);
    let p = affine(n, n, &a, &b);
    let step = bpdn_step(&p, &vec![0.0; n], 0.0, 0.0, &tight(n)).unwrap();
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(step.residual_norm <= 1e-6 * bn, "{}", step.residual_norm);
}

#[test]
fn bpdn_steps_are_descent_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (m, n) = (10, 30);
    for trial in 0..10 {
        let a = gaussian_matrix(&mut rng, m, n);
        let b = gaussian_vec(&mut rng, m);
        let p = affine(m, n, &a, &b);
        let alpha: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.2) { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
        let e = p.energy(&alpha).unwrap();
        let sigma = 0.3 * e.sqrt();
        let truncate = trial % 2 == 0;
        let params = SolverParams { truncate_inner: truncate, tau_mx: 100.0, ..tight(n) };
        let step = bpdn_step(&p, &alpha, sigma, 0.0, &params).unwrap();
        let budget = sigma.max(step.residual_norm);
        assert!(check_descent(&p, &alpha, &step.delta, budget * budget).unwrap());
        if step.exit == InnerExit::NormReached {
            assert!(step.lasso_descent);
        }
    }
}

#[test]
fn linear_bpdn_converges_quickly_to_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (m, n) = (12, 8);
    let a = gaussian_matrix(&mut rng, m, n);
    let mut x = vec![0.0; n];
    x[1] = 1.0;
    x[5] = -0.7;
    let noise: Vec<f64> = (0..m).map(|_| 0.05 * rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = a.chunks(n).zip(&noise).map(|(row, e)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() + e).collect();
    let sigma = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
    let reference = brute_force_bpdn(m, n, &a, &b, sigma);
    let p = affine(m, n, &a, &b);
    let params = SolverParams { sigma, ..tight(n) };
    let (alpha, trace) = solve_fixed(&p, &vec![0.0; n], &params).unwrap();
    assert_eq!(trace.status, SolveStatus::Converged);
    assert!(trace.iterations <= 3, "{}", trace.iterations);
    for (g, r) in alpha.iter().zip(&reference) {
        assert!((g - r).abs() < 1e-5, "{alpha:?} vs {reference:?}");
    }
}

#[test]
fn optimal_start_stops_after_one_iteration() {
    let p = affine(2, 2, &[1.0, 0.0, 0.0, 1.0], &[1.0, 0.5]);
    let alpha0 = [0.5, 0.0];
    let sigma = p.norm(&p.residual(&alpha0).unwrap());
    let params = SolverParams { sigma, ..tight(2) };
    let (alpha, trace) = solve_fixed(&p, &alpha0, &params).unwrap();
    assert_eq!(alpha, alpha0.to_vec());
    assert_eq!(trace.iterations, 1);
    assert_eq!(trace.status, SolveStatus::Converged);
}

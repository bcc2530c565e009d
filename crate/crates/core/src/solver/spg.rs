use std::collections::VecDeque;

use super::norms::{asym_linf_polar, project_asym_ball};
use super::problem::{assert_adjoint, check_len, LinearizedOperator, ResidualProblem};
use super::{HilbertVector, SolverParams};
use crate::error::Result;
use crate::scalar::{dot, Real};

const STEP_MIN: f64 = 1e-16;
const STEP_MAX: f64 = 1e16;
const SPG_ARMIJO: f64 = 1e-4;
const MAX_SPG_BACKTRACKS: usize = 40;

#[derive(Debug, Clone)]
pub struct SpgResult<T> {
    pub delta: Vec<T>,
    /// `G'(alpha_k) delta + G(alpha_k)`
    pub residual: HilbertVector<T>,
    pub iterations: usize,
    /// Duality gap `<G'^* r, theta> + tau polar(-G'^* r)` at the returned point,
    /// an upper bound on the distance to the optimal half squared residual.
    pub gap: T,
}

/// Minimizes `||G'(alpha_k) delta + G(alpha_k)||` over `asym_l1(alpha_k + delta, w) <= tau`.
pub fn spg_lasso<T: Real, P: ResidualProblem<T>>(
    problem: &P,
    alpha_k: &[T],
    tau: T,
    params: &SolverParams<T>,
) -> Result<SpgResult<T>> {
    check_len(problem.dim(), alpha_k.len())?;
    if params.probe_adjoint {
        assert_adjoint(problem, alpha_k, 1e-8, 0x5eed)?;
    }
    let lin = problem.linearize(alpha_k)?;
    spg_lasso_linearized(problem, &lin, alpha_k, tau, params, None)
}

/// [`spg_lasso`] on an existing linearization. `warm` is an optional starting
/// point for `theta = alpha_k + delta`; the better of it and `alpha_k` is used.
pub fn spg_lasso_linearized<T: Real, P: ResidualProblem<T>, L: LinearizedOperator<T>>(
    problem: &P,
    lin: &L,
    alpha_k: &[T],
    tau: T,
    params: &SolverParams<T>,
    warm: Option<&[T]>,
) -> Result<SpgResult<T>> {
    let w = params.w;
    let g0 = lin.residual();
    let half = T::of(0.5);
    let model = |theta: &[T]| -> HilbertVector<T> {
        let d: Vec<T> = theta.iter().zip(alpha_k).map(|(&t, &a)| t - a).collect();
        let mut r = lin.apply(&d);
        r.axpy(T::one(), g0);
        r
    };

    let mut x = project_asym_ball(alpha_k, tau, w)?;
    let mut r = model(&x);
    let mut f = half * problem.inner(&r, &r);
    if let Some(start) = warm {
        let xw = project_asym_ball(start, tau, w)?;
        let rw = model(&xw);
        let fw = half * problem.inner(&rw, &rw);
        if fw < f {
            (x, r, f) = (xw, rw, fw);
        }
    }
    let mut g = lin.adjoint(&r);
    let tol = params.spg_tol * problem.inner(g0, g0).max(T::min_positive_value());
    let duality_gap = |x: &[T], g: &[T]| dot(g, x) + tau * asym_linf_polar(&g.iter().map(|&v| -v).collect::<Vec<_>>(), w);

    let mut best = (f, x.clone(), r.clone());
    let mut history: VecDeque<T> = VecDeque::with_capacity(params.spg_memory);
    history.push_back(f);

    let projected_step = |x: &[T], g: &[T], lambda: T| -> Result<Vec<T>> {
        let trial: Vec<T> = x.iter().zip(g).map(|(&a, &b)| a - lambda * b).collect();
        let p = project_asym_ball(&trial, tau, w)?;
        Ok(p.iter().zip(x).map(|(&a, &b)| a - b).collect())
    };

    let mut gap = duality_gap(&x, &g);
    let mut best_gap = gap;
    let pg_inf = |x: &[T], g: &[T]| -> Result<T> {
        Ok(projected_step(x, g, T::one())?.iter().fold(T::zero(), |m, v| m.max(v.abs())))
    };
    let mut lambda = (T::one() / pg_inf(&x, &g)?.max(T::min_positive_value())).max(T::of(STEP_MIN)).min(T::of(STEP_MAX));

    let mut iterations = 0;
    while iterations < params.max_spg && gap > tol {
        let d = projected_step(&x, &g, lambda)?;
        let gtd = dot(&g, &d);
        if !(gtd < T::zero()) {
            break;
        }
        let jd = lin.apply(&d);
        let f_ref = history.iter().copied().fold(T::neg_infinity(), T::max);
        let jd2 = problem.inner(&jd, &jd);

        // f along the segment is an exact quadratic: f + t gtd + t^2 jd2 / 2
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..MAX_SPG_BACKTRACKS {
            let mut rt = r.clone();
            rt.axpy(t, &jd);
            let ft = half * problem.inner(&rt, &rt);
            if ft <= f_ref + T::of(SPG_ARMIJO) * t * gtd {
                accepted = Some((rt, ft));
                break;
            }
            let tq = if jd2 > T::zero() { -gtd / jd2 } else { t * half };
            t = if tq >= T::of(0.1) * t && tq <= half * t { tq } else { t * half };
        }
        let Some((r_new, f_new)) = accepted else { break };
        iterations += 1;

        let x_new: Vec<T> = x.iter().zip(&d).map(|(&a, &b)| a + t * b).collect();
        let g_new = lin.adjoint(&r_new);
        let s: Vec<T> = x_new.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sty = dot(&s, &y);
        lambda = if sty > T::zero() {
            (dot(&s, &s) / sty).max(T::of(STEP_MIN)).min(T::of(STEP_MAX))
        } else {
            T::of(STEP_MAX)
        };

        (x, r, f, g) = (x_new, r_new, f_new, g_new);
        if history.len() == params.spg_memory {
            history.pop_front();
        }
        history.push_back(f);
        gap = duality_gap(&x, &g);
        if f < best.0 {
            best = (f, x.clone(), r.clone());
            best_gap = gap;
        }
    }

    let (_, theta, residual) = best;
    let delta = theta.iter().zip(alpha_k).map(|(&t, &a)| t - a).collect();
    Ok(SpgResult { delta, residual, iterations, gap: best_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::AffineProblem;

    fn identity(n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        a
    }

    #[test]
    fn soft_threshold_example() {
        let p = AffineProblem::new(2, 2, identity(2), vec![2.0, 0.0]).unwrap();
        let params = SolverParams { spg_tol: 1e-12, ..SolverParams::new(2, 0.1) };
        let out = spg_lasso(&p, &[0.0, 0.0], 1.0, &params).unwrap();
        assert!((out.delta[0] - 1.0).abs() < 1e-10 && out.delta[1].abs() < 1e-10);
        assert!((out.residual[0] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_radius_gives_zero_step() {
        let p = AffineProblem::new(2, 2, vec![1.0, 2.0, 3.0, 4.0], vec![1.0, -1.0]).unwrap();
        let out = spg_lasso(&p, &[0.0, 0.0], 0.0, &SolverParams::new(2, 0.1)).unwrap();
        assert_eq!(out.delta, vec![0.0, 0.0]);
        assert_eq!(out.residual.as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn loose_radius_recovers_least_squares() {
        // 3x2 overdetermined system with known normal-equation solution
        let a = vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let b = vec![1.0, 2.0, 4.0];
        let p = AffineProblem::<f64>::new(3, 2, a, b).unwrap();
        // A^T A = [[2,1],[1,2]], A^T b = [5,6] -> x = (4/3, 7/3)
        let params = SolverParams { spg_tol: 1e-12, max_spg: 5000, ..SolverParams::new(2, 0.1) };
        let out = spg_lasso(&p, &[0.0, 0.0], 100.0, &params).unwrap();
        assert!((out.delta[0] - 4.0 / 3.0).abs() < 1e-5);
        assert!((out.delta[1] - 7.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn stopping_rule_ignores_residual_scale() {
        let a: Vec<f64> = vec![1.0, 0.5, -0.2, 0.3, 1.0, 0.4, 0.0, -0.7, 1.0, 0.6, 0.2, 0.1];
        let b = vec![0.8, -0.3, 1.1, 0.4];
        let params = SolverParams::new(3, 0.1);
        let base = spg_lasso(&AffineProblem::new(4, 3, a.clone(), b.clone()).unwrap(), &[0.0; 3], 0.5, &params).unwrap();
        let k = 3e3;
        let scaled = AffineProblem::new(4, 3, a.iter().map(|v| v * k).collect(), b.iter().map(|v| v * k).collect()).unwrap();
        let out = spg_lasso(&scaled, &[0.0; 3], 0.5, &params).unwrap();
        assert!(out.iterations > 0);
        for (x, y) in base.delta.iter().zip(&out.delta) {
            assert!((x - y).abs() < 1e-5, "{:?} vs {:?}", base.delta, out.delta);
        }
        assert!(out.gap <= params.spg_tol * k * k * b.iter().map(|v| v * v).sum::<f64>());
    }
}

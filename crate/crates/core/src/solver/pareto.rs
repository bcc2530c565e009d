use super::norms::{asym_l1, asym_linf_polar};
use super::problem::{check_len, LinearizedOperator, ResidualProblem};
use super::spg::spg_lasso_linearized;
use super::{HilbertVector, InnerExit, SolverParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Slope of the Pareto curve at the Lasso solution whose linearized residual is
/// `residual`: `-polar(-G'^* r, w) / ||r||`.
pub fn pareto_slope<T: Real, P: ResidualProblem<T>>(
    problem: &P,
    alpha_k: &[T],
    residual: &HilbertVector<T>,
    w: T,
) -> Result<T> {
    let lin = problem.linearize(alpha_k)?;
    check_len(lin.residual().len(), residual.len())?;
    pareto_slope_linearized(problem, &lin, residual, w)
}

pub fn pareto_slope_linearized<T: Real, P: ResidualProblem<T>, L: LinearizedOperator<T>>(
    problem: &P,
    lin: &L,
    residual: &HilbertVector<T>,
    w: T,
) -> Result<T> {
    let rn = problem.norm(residual);
    if rn == T::zero() {
        return Err(Error::OnBpBranch);
    }
    let neg: Vec<T> = lin.adjoint(residual).into_iter().map(|v| -v).collect();
    Ok(-asym_linf_polar(&neg, w) / rn)
}

#[derive(Debug, Clone)]
pub struct BpdnStep<T> {
    pub delta: Vec<T>,
    pub residual: HilbertVector<T>,
    pub residual_norm: T,
    /// Radius of the Lasso solve that produced `delta`.
    pub tau_used: T,
    /// Newton-updated radius, the warm start for the next call.
    pub tau_next: T,
    pub exit: InnerExit,
    pub tau_updates: usize,
    pub spg_iterations: usize,
    /// Whether the Lasso-exit inequality `J_E delta <= -||G' delta||^2` held
    /// (vacuously true when `tau_used` is below the coefficient norm).
    pub lasso_descent: bool,
}

/// Approximately solves `min asym_l1(alpha_k + delta)` subject to
/// `||G'(alpha_k) delta + G(alpha_k)|| <= sigma` by Newton iteration on the
/// Pareto curve, starting from `tau_in`.
pub fn bpdn_step<T: Real, P: ResidualProblem<T>>(
    problem: &P,
    alpha_k: &[T],
    sigma: T,
    tau_in: T,
    params: &SolverParams<T>,
) -> Result<BpdnStep<T>> {
    check_len(problem.dim(), alpha_k.len())?;
    let lin = problem.linearize(alpha_k)?;
    bpdn_step_linearized(problem, &lin, alpha_k, sigma, tau_in, params)
}

pub fn bpdn_step_linearized<T: Real, P: ResidualProblem<T>, L: LinearizedOperator<T>>(
    problem: &P,
    lin: &L,
    alpha_k: &[T],
    sigma: T,
    tau_in: T,
    params: &SolverParams<T>,
) -> Result<BpdnStep<T>> {
    if !(sigma >= T::zero()) {
        return Err(Error::InvalidParameter(format!("sigma must be nonnegative, got {sigma}")));
    }
    let g = lin.residual();
    let g_norm = problem.norm(g);
    let tiny = T::epsilon() * T::of(16.0) * g_norm;
    if g_norm <= sigma {
        return Ok(BpdnStep {
            delta: vec![T::zero(); alpha_k.len()],
            residual: g.clone(),
            residual_norm: g_norm,
            tau_used: tau_in,
            tau_next: tau_in,
            exit: InnerExit::AlreadyFeasible,
            tau_updates: 0,
            spg_iterations: 0,
            lasso_descent: true,
        });
    }
    let norm_k = asym_l1(alpha_k, params.w);
    let mut tau = tau_in.max(T::zero()).min(params.tau_mx);
    let mut warm: Option<Vec<T>> = None;
    let mut spg_iterations = 0;
    let mut updates = 0;

    loop {
        let sub = spg_lasso_linearized(problem, lin, alpha_k, tau, params, warm.as_deref())?;
        spg_iterations += sub.iterations;
        let rn = problem.norm(&sub.residual);
        let finish = |exit, tau_next, updates| {
            let lasso_descent = tau < norm_k || lasso_inequality(problem, g, &sub.residual);
            BpdnStep {
                delta: sub.delta.clone(),
                residual: sub.residual.clone(),
                residual_norm: rn,
                tau_used: tau,
                tau_next,
                exit,
                tau_updates: updates,
                spg_iterations,
                lasso_descent,
            }
        };
        if rn <= tiny {
            return Ok(finish(InnerExit::Flat, tau, updates));
        }
        let slope = pareto_slope_linearized(problem, lin, &sub.residual, params.w)?;
        if slope > T::zero() {
            return Err(Error::SlopeBreakdown(slope.to_f64_lossy()));
        }
        if slope == T::zero() {
            return Ok(finish(InnerExit::Flat, tau, updates));
        }
        let dtau = (sigma - rn) / slope;
        let tau_next = (tau + dtau).max(T::zero()).min(params.tau_mx);
        updates += 1;

        if params.truncate_inner && tau > T::zero() && tau >= norm_k {
            return Ok(finish(InnerExit::NormReached, tau_next, updates));
        }
        if dtau <= params.eps1 {
            return Ok(finish(InnerExit::Converged, tau_next, updates));
        }
        if tau >= params.tau_mx {
            return Ok(finish(InnerExit::Capped, tau_next, updates));
        }
        if updates >= params.max_tau_updates {
            return Ok(finish(InnerExit::UpdateLimit, tau_next, updates));
        }
        warm = Some(alpha_k.iter().zip(&sub.delta).map(|(&a, &d)| a + d).collect());
        tau = tau_next;
    }
}

/// `J_E delta <= -||G' delta||^2`, i.e. `||r|| <= ||G||` for `r = G + G' delta`.
fn lasso_inequality<T: Real, P: ResidualProblem<T>>(problem: &P, g: &HilbertVector<T>, r: &HilbertVector<T>) -> bool {
    let jd = r - g;
    let jed = T::of(2.0) * problem.inner(&jd, g);
    let jd2 = problem.inner(&jd, &jd);
    let scale = problem.inner(g, g) + jd2;
    jed <= -jd2 + T::of(1e-9) * scale
}

/// `J_E(alpha) delta <= sigma_e - ||G(alpha)||^2` with `J_E delta = 2 <G' delta, G>`,
/// where `sigma_e` is an energy level (squared norm).
pub fn check_descent<T: Real, P: ResidualProblem<T>>(problem: &P, alpha: &[T], delta: &[T], sigma_e: T) -> Result<bool> {
    check_len(problem.dim(), delta.len())?;
    let lin = problem.linearize(alpha)?;
    Ok(check_descent_linearized(problem, &lin, delta, sigma_e))
}

pub fn check_descent_linearized<T: Real, P: ResidualProblem<T>, L: LinearizedOperator<T>>(
    problem: &P,
    lin: &L,
    delta: &[T],
    sigma_e: T,
) -> bool {
    let g = lin.residual();
    let jd = lin.apply(delta);
    let jed = T::of(2.0) * problem.inner(&jd, g);
    let e = problem.inner(g, g);
    let scale = e.max(sigma_e.abs()).max(problem.inner(&jd, &jd)).max(T::min_positive_value());
    jed <= sigma_e - e + T::of(1e-9) * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::AffineProblem;

    #[test]
    fn identity_slope_is_minus_one() {
        let p = AffineProblem::<f64>::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![2.0, 0.0]).unwrap();
        let r = HilbertVector::new(vec![-1.0, 0.0]);
        let s = pareto_slope(&p, &[0.0, 0.0], &r, 1.0).unwrap();
        assert!((s + 1.0).abs() < 1e-15);
        assert!(matches!(pareto_slope(&p, &[0.0, 0.0], &HilbertVector::zeros(2), 1.0), Err(Error::OnBpBranch)));
    }

    #[test]
    fn feasible_start_returns_zero_step() {
        let p = AffineProblem::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.3, 0.4]).unwrap();
        let step = bpdn_step(&p, &[0.0, 0.0], 0.5, 0.0, &SolverParams::new(2, 0.1)).unwrap();
        assert_eq!(step.exit, InnerExit::AlreadyFeasible);
        assert_eq!(step.delta, vec![0.0, 0.0]);
    }

    #[test]
    fn descent_check_examples() {
        let p = AffineProblem::new(2, 2, vec![1.0, 2.0, 0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let alpha = [0.2, -0.1];
        let e = p.energy(&alpha).unwrap();
        assert!(check_descent(&p, &alpha, &[0.0, 0.0], e).unwrap());
        let g = p.residual(&alpha).unwrap();
        let grad: Vec<f64> = p.jac_adjoint(&alpha, &g).unwrap().iter().map(|v| 2.0 * v).collect();
        assert!(!check_descent(&p, &alpha, &grad, 0.0).unwrap());
    }
}

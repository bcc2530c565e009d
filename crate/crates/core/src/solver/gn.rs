use super::norms::{asym_l1, project_asym_ball};
use super::pareto::{bpdn_step_linearized, check_descent_linearized};
use super::problem::{assert_adjoint, check_len, LinearizedOperator, ResidualProblem};
use super::trace::{active_count, IterRecord, InnerExit, SolveStatus, SolveTrace};
use super::SolverParams;
use crate::error::Result;
use crate::scalar::{norm2, Real};

/// Result of one Gauss-Newton iteration.
#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    /// Present when a step was accepted.
    pub record: Option<IterRecord<T>>,
    /// Present when the outer loop should stop.
    pub stop: Option<SolveStatus>,
    pub descent_violation: bool,
    pub inner_exit: InnerExit,
}

/// One outer iteration: a BPDN subproblem around `alpha`, then Armijo
/// backtracking on the true energy. Updates `alpha` and the warm-start `tau`.
pub fn outer_step<T: Real, P: ResidualProblem<T>>(
    problem: &P,
    alpha: &mut [T],
    tau: &mut T,
    params: &SolverParams<T>,
    iter: usize,
) -> Result<StepOutcome<T>> {
    check_len(problem.dim(), alpha.len())?;
    if params.probe_adjoint {
        assert_adjoint(problem, alpha, 1e-8, iter as u64)?;
    }
    let lin = problem.linearize(alpha)?;
    let g = lin.residual();
    let energy = problem.inner(g, g);
    let step = bpdn_step_linearized(problem, &lin, alpha, params.sigma, *tau, params)?;
    *tau = step.tau_next;

    let mut violation = !step.lasso_descent;
    let sigma2 = params.sigma * params.sigma;
    if step.exit != InnerExit::AlreadyFeasible && sigma2 <= energy {
        let budget = params.sigma.max(step.residual_norm);
        violation |= !check_descent_linearized(problem, &lin, &step.delta, budget * budget);
    }

    let mut outcome = StepOutcome { record: None, stop: None, descent_violation: violation, inner_exit: step.exit };
    let dn = norm2(&step.delta);
    if dn <= params.eps2 {
        outcome.stop = Some(SolveStatus::Converged);
        return Ok(outcome);
    }
    let jd = lin.apply(&step.delta);
    let slope = T::of(2.0) * problem.inner(&jd, g);
    if !(slope < T::zero()) {
        let flat = problem.inner(&jd, &jd) == T::zero();
        outcome.stop = Some(if flat { SolveStatus::Stationary } else { SolveStatus::NonDescent });
        return Ok(outcome);
    }
    drop(lin);

    let mut t = T::one();
    for backtracks in 0..=params.max_backtracks {
        let trial: Vec<T> = alpha.iter().zip(&step.delta).map(|(&a, &d)| a + t * d).collect();
        let e_trial = problem.energy(&trial)?;
        if energy - e_trial >= -params.gamma * t * slope {
            alpha.copy_from_slice(&trial);
            let step_norm = t * dn;
            outcome.record = Some(IterRecord {
                iter,
                energy: e_trial,
                asym_l1: asym_l1(alpha, params.w),
                tau: step.tau_used,
                step_norm,
                backtracks,
                active_set: active_count(alpha),
                inner_exit: step.exit,
                tau_updates: step.tau_updates,
                spg_iterations: step.spg_iterations,
            });
            if step_norm <= params.eps2 {
                outcome.stop = Some(SolveStatus::Converged);
            }
            return Ok(outcome);
        }
        t *= params.beta;
    }
    outcome.stop = Some(SolveStatus::LineSearchStall);
    Ok(outcome)
}

/// Initial coefficients pulled inside the `tau_mx` ball when they lie outside it,
/// by scaling to half the cap.
pub fn feasible_start<T: Real>(alpha0: &[T], params: &SolverParams<T>) -> Result<Vec<T>> {
    let norm = asym_l1(alpha0, params.w);
    if norm <= params.tau_mx {
        return Ok(alpha0.to_vec());
    }
    let scale = T::of(0.5) * params.tau_mx / norm;
    let scaled: Vec<T> = alpha0.iter().map(|&a| a * scale).collect();
    project_asym_ball(&scaled, params.tau_mx, params.w)
}

/// Sparsity promoting Gauss-Newton iteration from `alpha0`. `callback` runs after
/// every accepted step and may mutate the problem (e.g. refresh region statistics)
/// as long as it does not raise the energy at the current coefficients.
pub fn solve<T, P, F>(
    problem: &mut P,
    alpha0: &[T],
    params: &SolverParams<T>,
    mut callback: F,
) -> Result<(Vec<T>, SolveTrace<T>)>
where
    T: Real,
    P: ResidualProblem<T>,
    F: FnMut(&mut P, usize, &[T]) -> Result<()>,
{
    params.validate()?;
    check_len(problem.dim(), alpha0.len())?;
    let mut alpha = feasible_start(alpha0, params)?;
    let mut tau = params.tau0;
    let mut trace = SolveTrace {
        initial_energy: problem.energy(&alpha)?,
        records: Vec::new(),
        status: SolveStatus::MaxOuter,
        iterations: 0,
        descent_violations: 0,
    };
    for iter in 1..=params.max_outer {
        let outcome = outer_step(&*problem, &mut alpha, &mut tau, params, iter)?;
        trace.iterations = iter;
        trace.descent_violations += usize::from(outcome.descent_violation);
        if let Some(mut record) = outcome.record {
            callback(problem, iter, &alpha)?;
            record.energy = problem.energy(&alpha)?;
            trace.records.push(record);
        }
        if let Some(status) = outcome.stop {
            trace.status = status;
            break;
        }
    }
    Ok((alpha, trace))
}

/// [`solve`] without a callback.
pub fn solve_fixed<T: Real, P: ResidualProblem<T>>(
    problem: &P,
    alpha0: &[T],
    params: &SolverParams<T>,
) -> Result<(Vec<T>, SolveTrace<T>)> {
    struct Shared<'a, P>(&'a P);
    impl<T: Real, P: ResidualProblem<T>> ResidualProblem<T> for Shared<'_, P> {
        type Linearization<'b>
            = P::Linearization<'b>
        where
            Self: 'b;
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn residual(&self, alpha: &[T]) -> Result<super::HilbertVector<T>> {
            self.0.residual(alpha)
        }
        fn linearize<'b>(&'b self, alpha: &[T]) -> Result<Self::Linearization<'b>> {
            self.0.linearize(alpha)
        }
        fn inner(&self, a: &super::HilbertVector<T>, b: &super::HilbertVector<T>) -> T {
            self.0.inner(a, b)
        }
    }
    solve(&mut Shared(problem), alpha0, params, |_, _, _| Ok(()))
}

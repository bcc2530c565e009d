use std::fmt::Write;

use crate::scalar::Real;

/// How the tau loop of a subproblem solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerExit {
    /// `||G|| <= sigma` already; the zero step is returned.
    AlreadyFeasible,
    /// tau reached the asymmetric norm of the current coefficients.
    NormReached,
    /// Newton update on tau fell below `eps1`.
    Converged,
    /// tau sits at `tau_mx`.
    Capped,
    /// Linearized residual vanished or its correlation is zero.
    Flat,
    /// `max_tau_updates` exhausted.
    UpdateLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxOuter,
    LineSearchStall,
    /// The subproblem step is not a descent direction of E.
    NonDescent,
    /// The Jacobian annihilates the step (e.g. no narrow band).
    Stationary,
}

/// One accepted outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord<T> {
    pub iter: usize,
    pub energy: T,
    pub asym_l1: T,
    pub tau: T,
    pub step_norm: T,
    pub backtracks: usize,
    pub active_set: usize,
    pub inner_exit: InnerExit,
    pub tau_updates: usize,
    pub spg_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace<T> {
    pub initial_energy: T,
    pub records: Vec<IterRecord<T>>,
    pub status: SolveStatus,
    /// Outer iterations run, including a final one that made no step.
    pub iterations: usize,
    /// Subproblem steps that failed a descent check.
    pub descent_violations: usize,
}

pub const ACTIVE_THRESHOLD: f64 = 1e-8;

pub fn active_count<T: Real>(alpha: &[T]) -> usize {
    alpha.iter().filter(|a| a.abs() > T::of(ACTIVE_THRESHOLD)).count()
}

impl<T: Real> SolveTrace<T> {
    pub fn final_energy(&self) -> T {
        self.records.last().map_or(self.initial_energy, |r| r.energy)
    }

    /// Strictly decreasing energy over accepted iterations.
    pub fn energy_decreasing(&self) -> bool {
        let mut prev = self.initial_energy;
        self.records.iter().all(|r| {
            let ok = r.energy < prev;
            prev = r.energy;
            ok
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,energy,asym_l1,tau,step_norm,backtracks,active_set\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{},{}",
                r.iter, r.energy, r.asym_l1, r.tau, r.step_norm, r.backtracks, r.active_set
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

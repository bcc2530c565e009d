//! Sparsity promoting Gauss-Newton solver over an abstract residual map.

mod gn;
mod norms;
mod pareto;
mod params;
mod problem;
mod spg;
mod trace;
mod vector;

pub use gn::{feasible_start, outer_step, solve, solve_fixed, StepOutcome};
pub use norms::{asym_l1, asym_linf_polar, project_asym_ball};
pub use pareto::{
    bpdn_step, bpdn_step_linearized, check_descent, check_descent_linearized, pareto_slope,
    pareto_slope_linearized, BpdnStep,
};
pub use params::SolverParams;
pub(crate) use problem::check_len;
pub use problem::{assert_adjoint, probe_adjoint, AffineLinearization, AffineProblem, LinearizedOperator, ResidualProblem};
pub use spg::{spg_lasso, spg_lasso_linearized, SpgResult};
pub use trace::{active_count, InnerExit, IterRecord, SolveStatus, SolveTrace, ACTIVE_THRESHOLD};
pub use vector::HilbertVector;

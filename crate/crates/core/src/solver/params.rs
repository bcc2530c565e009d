use crate::error::{Error, Result};
use crate::scalar::Real;

/// Controls for the sparsity promoting Gauss-Newton loop and its subsolvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams<T> {
    /// Target norm of the linearized residual.
    pub sigma: T,
    /// Weight on negative coefficients in the asymmetric l1 norm.
    pub w: T,
    /// Armijo sufficient decrease factor.
    pub gamma: T,
    /// Armijo backtracking factor.
    pub beta: T,
    /// Tolerance on the Newton update of tau.
    pub eps1: T,
    /// Tolerance on the accepted step norm.
    pub eps2: T,
    pub tau_mx: T,
    pub tau0: T,
    pub max_outer: usize,
    pub max_spg: usize,
    /// Relative projected-gradient tolerance for SPG.
    pub spg_tol: T,
    pub spg_memory: usize,
    pub max_backtracks: usize,
    pub max_tau_updates: usize,
    /// Leave the tau loop once tau reaches the current coefficient norm.
    pub truncate_inner: bool,
    /// Probe the Jacobian adjoint before every subproblem solve.
    pub probe_adjoint: bool,
}

impl<T: Real> SolverParams<T> {
    /// Defaults for `n` coefficients and lifting parameter `c`.
    pub fn new(n: usize, c: T) -> Self {
        let tau_mx = T::of(50.0) * c;
        Self {
            sigma: T::zero(),
            w: T::one(),
            gamma: T::of(1e-4),
            beta: T::of(0.5),
            eps1: Self::default_eps1(tau_mx),
            eps2: T::of(1e-8) * T::of_usize(n.max(1)).sqrt(),
            tau_mx,
            tau0: T::zero(),
            max_outer: 50,
            max_spg: 500,
            spg_tol: T::of(1e-6),
            spg_memory: 10,
            max_backtracks: 60,
            max_tau_updates: 50,
            truncate_inner: true,
            probe_adjoint: false,
        }
    }

    pub fn default_eps1(tau_mx: T) -> T {
        if tau_mx.is_finite() {
            T::of(1e-9) * (T::one() + tau_mx)
        } else {
            T::of(1e-9)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.sigma >= T::zero()) {
            return bad(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if !(self.w > T::zero()) || !self.w.is_finite() {
            return bad(format!("w must be positive, got {}", self.w));
        }
        if !(self.gamma >= T::of(1e-5) && self.gamma <= T::of(0.1)) {
            return bad(format!("gamma must lie in [1e-5, 0.1], got {}", self.gamma));
        }
        if !(self.beta >= T::of(0.1) && self.beta <= T::of(0.5)) {
            return bad(format!("beta must lie in [0.1, 0.5], got {}", self.beta));
        }
        if !(self.eps1 > T::zero() && self.eps2 > T::zero() && self.spg_tol > T::zero()) {
            return bad("tolerances must be positive".into());
        }
        if !(self.tau0 >= T::zero()) || !(self.tau_mx > self.tau0) {
            return bad(format!("need 0 <= tau0 < tau_mx, got {} and {}", self.tau0, self.tau_mx));
        }
        if self.max_outer == 0 || self.max_spg == 0 || self.spg_memory == 0 || self.max_tau_updates == 0 {
            return bad("iteration limits must be positive".into());
        }
        Ok(())
    }
}

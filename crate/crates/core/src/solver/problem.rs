use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HilbertVector;
use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Jacobian `G'(alpha)` frozen at one point, together with `G(alpha)`.
pub trait LinearizedOperator<T: Real>: Sync {
    /// `G(alpha)` at the linearization point.
    fn residual(&self) -> &HilbertVector<T>;
    /// `G'(alpha) eta`
    fn apply(&self, eta: &[T]) -> HilbertVector<T>;
    /// `G'(alpha)^* s`, adjoint with respect to the owning problem's inner product.
    fn adjoint(&self, s: &HilbertVector<T>) -> Vec<T>;
}

/// Differentiable map `G: R^n -> S` into a real Hilbert space.
pub trait ResidualProblem<T: Real>: Sync {
    type Linearization<'a>: LinearizedOperator<T>
    where
        Self: 'a;

    fn dim(&self) -> usize;

    fn residual(&self, alpha: &[T]) -> Result<HilbertVector<T>>;

    fn linearize<'a>(&'a self, alpha: &[T]) -> Result<Self::Linearization<'a>>;

    fn inner(&self, a: &HilbertVector<T>, b: &HilbertVector<T>) -> T;

    fn norm(&self, a: &HilbertVector<T>) -> T {
        self.inner(a, a).max(T::zero()).sqrt()
    }

    /// `E(alpha) = ||G(alpha)||^2`
    fn energy(&self, alpha: &[T]) -> Result<T> {
        let g = self.residual(alpha)?;
        Ok(self.inner(&g, &g))
    }

    fn jac_apply(&self, alpha: &[T], eta: &[T]) -> Result<HilbertVector<T>> {
        check_len(self.dim(), eta.len())?;
        Ok(self.linearize(alpha)?.apply(eta))
    }

    fn jac_adjoint(&self, alpha: &[T], s: &HilbertVector<T>) -> Result<Vec<T>> {
        let lin = self.linearize(alpha)?;
        check_len(lin.residual().len(), s.len())?;
        Ok(lin.adjoint(s))
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// Largest relative mismatch `|<J eta, s> - eta . J^* s| / max(|.|, |.|)` over
/// `trials` random pairs of unit-normal vectors.
pub fn probe_adjoint<T: Real, P: ResidualProblem<T>>(problem: &P, alpha: &[T], trials: usize, seed: u64) -> Result<f64> {
    let lin = problem.linearize(alpha)?;
    let m = lin.residual().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let eta: Vec<T> = (0..problem.dim()).map(|_| T::of(rng.random_range(-1.0..1.0))).collect();
        let s = HilbertVector::new((0..m).map(|_| T::of(rng.random_range(-1.0..1.0))).collect());
        let lhs = problem.inner(&lin.apply(&eta), &s).to_f64_lossy();
        let rhs = dot(&eta, &lin.adjoint(&s)).to_f64_lossy();
        let scale = lhs.abs().max(rhs.abs());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

/// Errors with [`Error::AdjointMismatch`] when the probe exceeds `tol`.
pub fn assert_adjoint<T: Real, P: ResidualProblem<T>>(problem: &P, alpha: &[T], tol: f64, seed: u64) -> Result<()> {
    let err = probe_adjoint(problem, alpha, 3, seed)?;
    if err > tol {
        return Err(Error::AdjointMismatch(err));
    }
    Ok(())
}

/// Affine map `G(alpha) = A alpha - b` with a dense row-major `A` and an
/// optional diagonal weight defining `<s, t> = sum_m w_m s_m t_m`.
#[derive(Debug, Clone)]
pub struct AffineProblem<T> {
    rows: usize,
    cols: usize,
    a: Vec<T>,
    b: Vec<T>,
    weights: Option<Vec<T>>,
}

impl<T: Real> AffineProblem<T> {
    pub fn new(rows: usize, cols: usize, a: Vec<T>, b: Vec<T>) -> Result<Self> {
        check_len(rows * cols, a.len())?;
        check_len(rows, b.len())?;
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("affine problem needs a nonempty matrix".into()));
        }
        Ok(Self { rows, cols, a, b, weights: None })
    }

    pub fn with_weights(mut self, weights: Vec<T>) -> Result<Self> {
        check_len(self.rows, weights.len())?;
        if weights.iter().any(|&w| !(w >= T::zero())) {
            return Err(Error::InvalidParameter("data weights must be nonnegative".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn matrix(&self) -> &[T] {
        &self.a
    }

    pub fn rhs(&self) -> &[T] {
        &self.b
    }

    fn mul(&self, x: &[T]) -> Vec<T> {
        self.a.chunks(self.cols).map(|row| dot(row, x)).collect()
    }

    fn mul_t(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for (row, &yi) in self.a.chunks(self.cols).zip(y) {
            for (o, &r) in out.iter_mut().zip(row) {
                *o += r * yi;
            }
        }
        out
    }
}

pub struct AffineLinearization<'a, T> {
    problem: &'a AffineProblem<T>,
    residual: HilbertVector<T>,
}

impl<T: Real> LinearizedOperator<T> for AffineLinearization<'_, T> {
    fn residual(&self) -> &HilbertVector<T> {
        &self.residual
    }

    fn apply(&self, eta: &[T]) -> HilbertVector<T> {
        HilbertVector::new(self.problem.mul(eta))
    }

    fn adjoint(&self, s: &HilbertVector<T>) -> Vec<T> {
        match &self.problem.weights {
            Some(w) => {
                let ws: Vec<T> = s.as_slice().iter().zip(w).map(|(&a, &b)| a * b).collect();
                self.problem.mul_t(&ws)
            }
            None => self.problem.mul_t(s.as_slice()),
        }
    }
}

impl<T: Real> ResidualProblem<T> for AffineProblem<T> {
    type Linearization<'a> = AffineLinearization<'a, T>;

    fn dim(&self) -> usize {
        self.cols
    }

    fn residual(&self, alpha: &[T]) -> Result<HilbertVector<T>> {
        check_len(self.cols, alpha.len())?;
        let ax = self.mul(alpha);
        Ok(HilbertVector::new(ax.iter().zip(&self.b).map(|(&p, &q)| p - q).collect()))
    }

    fn linearize<'a>(&'a self, alpha: &[T]) -> Result<AffineLinearization<'a, T>> {
        Ok(AffineLinearization { problem: self, residual: self.residual(alpha)? })
    }

    fn inner(&self, a: &HilbertVector<T>, b: &HilbertVector<T>) -> T {
        match &self.weights {
            Some(w) => a.as_slice().iter().zip(b.as_slice()).zip(w).map(|((&x, &y), &z)| x * y * z).sum(),
            None => dot(a.as_slice(), b.as_slice()),
        }
    }
}

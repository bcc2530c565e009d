//! Two-phase Chan-Vese segmentation with missing pixels as a residual problem.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, RegionMask, ScalarField};
use crate::knoll::{delta_eps, heaviside_eps, Dictionary};
use crate::pgm;
use crate::scalar::{dot, Real};
use crate::solver::{check_len, solve, HilbertVector, LinearizedOperator, ResidualProblem, SolveTrace, SolverParams};

const GUARD: f64 = 1e-12;

/// Intensity image with the set of observed pixels.
#[derive(Debug, Clone)]
pub struct Image<T> {
    pixels: ScalarField<T>,
    observed: RegionMask<T>,
}

impl<T: Real> Image<T> {
    pub fn new(pixels: ScalarField<T>, observed: RegionMask<T>) -> Result<Self> {
        if pixels.grid() != observed.grid() {
            return Err(Error::GridMismatch);
        }
        if observed.count() == 0 {
            return Err(Error::ObservedSetEmpty);
        }
        if observed.indices().any(|k| !pixels.values()[k].is_finite()) {
            return Err(Error::InvalidParameter("non-finite intensity on an observed pixel".into()));
        }
        Ok(Self { pixels, observed })
    }

    pub fn fully_observed(pixels: ScalarField<T>) -> Result<Self> {
        let observed = RegionMask::full(*pixels.grid());
        Self::new(pixels, observed)
    }

    /// Reads a PGM image on `grid` and an optional mask PGM (zero = missing).
    pub fn load_pgm(grid: Grid<T>, image: &Path, mask: Option<&Path>) -> Result<Self> {
        let read = |path: &Path| -> Result<Vec<f64>> {
            let (nx, ny, values) = pgm::read(path)?;
            if nx != grid.nx() || ny != grid.ny() {
                return Err(Error::GridMismatch);
            }
            Ok(values)
        };
        let pixels = ScalarField::from_values(grid, read(image)?.into_iter().map(T::of).collect())?;
        let observed = match mask {
            Some(path) => RegionMask::from_values(grid, read(path)?.into_iter().map(|v| v > 0.0).collect())?,
            None => RegionMask::full(grid),
        };
        Self::new(pixels, observed)
    }

    pub fn grid(&self) -> &Grid<T> {
        self.pixels.grid()
    }

    pub fn pixels(&self) -> &ScalarField<T> {
        &self.pixels
    }

    pub fn observed(&self) -> &RegionMask<T> {
        &self.observed
    }

    /// Removes a seeded random `fraction` of the currently observed pixels.
    pub fn drop_pixels(&self, fraction: f64, seed: u64) -> Result<Self> {
        let kept: Vec<usize> = self.observed.indices().collect();
        let remove = (fraction.clamp(0.0, 1.0) * kept.len() as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut observed = self.observed.clone();
        for pick in sample(&mut rng, kept.len(), remove) {
            observed.values_mut()[kept[pick]] = false;
        }
        Self::new(self.pixels.clone(), observed)
    }
}

/// Mean intensities inside and outside the shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats<T> {
    pub u_in: T,
    pub u_ex: T,
}

#[derive(Debug, Clone)]
pub struct SegmentationProblem<T> {
    image: Image<T>,
    dict: Dictionary<T>,
    eps: T,
    stats: RegionStats<T>,
    stats_update_period: usize,
    observed: Vec<usize>,
    sqrt_area: T,
}

impl<T: Real> SegmentationProblem<T> {
    pub fn new(image: Image<T>, dict: Dictionary<T>, eps: T, stats: RegionStats<T>) -> Result<Self> {
        if image.grid() != dict.grid() {
            return Err(Error::GridMismatch);
        }
        if !(eps > T::zero()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if !(stats.u_in.is_finite() && stats.u_ex.is_finite()) {
            return Err(Error::InvalidParameter("region statistics must be finite".into()));
        }
        let observed = image.observed().indices().collect();
        let sqrt_area = image.grid().pixel_area().sqrt();
        Ok(Self { image, dict, eps, stats, stats_update_period: 1, observed, sqrt_area })
    }

    pub fn with_stats_update_period(mut self, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidParameter("stats update period must be positive".into()));
        }
        self.stats_update_period = period;
        Ok(self)
    }

    pub fn image(&self) -> &Image<T> {
        &self.image
    }

    pub fn dictionary(&self) -> &Dictionary<T> {
        &self.dict
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn stats(&self) -> RegionStats<T> {
        self.stats
    }

    pub fn set_stats(&mut self, stats: RegionStats<T>) {
        self.stats = stats;
    }

    pub fn stats_update_period(&self) -> usize {
        self.stats_update_period
    }

    fn level_set(&self, alpha: &[T]) -> Result<Vec<T>> {
        Ok(self.dict.assemble_level_set(alpha)?.into_values())
    }

    /// Knolls whose support meets the narrow band `|phi| < eps`.
    pub fn active_columns(&self, alpha: &[T]) -> Result<Vec<usize>> {
        let phi = self.level_set(alpha)?;
        Ok(active_from_phi(&self.dict, &phi, self.eps))
    }

    /// Chan-Vese region means over observed pixels, weighted by `H_eps(phi)`
    /// and `1 - H_eps(phi)`. A region with no weight keeps its previous mean.
    pub fn update_stats(&self, alpha: &[T]) -> Result<RegionStats<T>> {
        let phi = self.level_set(alpha)?;
        let u = self.image.pixels.values();
        let (mut win, mut sin, mut wex, mut sex) = (T::zero(), T::zero(), T::zero(), T::zero());
        for &k in &self.observed {
            let h = heaviside_eps(phi[k], self.eps);
            win += h;
            sin += h * u[k];
            wex += T::one() - h;
            sex += (T::one() - h) * u[k];
        }
        let tiny = T::of(GUARD);
        Ok(RegionStats {
            u_in: if win > tiny { sin / win } else { self.stats.u_in },
            u_ex: if wex > tiny { sex / wex } else { self.stats.u_ex },
        })
    }

    /// Runs the solver, refreshing region statistics every
    /// `stats_update_period` accepted iterations.
    pub fn segment(&mut self, alpha0: &[T], params: &SolverParams<T>) -> Result<(Vec<T>, SolveTrace<T>)> {
        let period = self.stats_update_period;
        solve(self, alpha0, params, |problem, iter, alpha| {
            if iter % period == 0 {
                let stats = problem.update_stats(alpha)?;
                problem.set_stats(stats);
            }
            Ok(())
        })
    }

    pub fn segmentation_mask(&self, alpha: &[T]) -> Result<RegionMask<T>> {
        self.dict.shape_of(alpha)
    }
}

fn active_from_phi<T: Real>(dict: &Dictionary<T>, phi: &[T], eps: T) -> Vec<usize> {
    dict.knolls()
        .par_iter()
        .enumerate()
        .filter(|(_, knoll)| knoll.sparse().0.iter().any(|&k| phi[k as usize].abs() < eps))
        .map(|(i, _)| i)
        .collect()
}

/// Seeded initialization: `round(fraction * n)` distinct coefficients set to +-1.
pub fn random_init<T: Real>(n: usize, fraction: f64, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = ((fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut alpha = vec![T::zero(); n];
    for i in sample(&mut rng, n, count) {
        alpha[i] = if rng.random_bool(0.5) { T::one() } else { -T::one() };
    }
    alpha
}

/// Jacobian of the stacked residual: rows `[f_in psi; f_ex psi]` on observed pixels.
pub struct SegmentationLinearization<'a, T> {
    problem: &'a SegmentationProblem<T>,
    residual: HilbertVector<T>,
    f_in: Vec<T>,
    f_ex: Vec<T>,
    active: Vec<usize>,
}

impl<T: Real> SegmentationLinearization<'_, T> {
    pub fn active_columns(&self) -> &[usize] {
        &self.active
    }

    fn dense_source(&self, s: &HilbertVector<T>) -> Vec<T> {
        let m = self.problem.observed.len();
        let mut z = vec![T::zero(); self.problem.image.grid().len()];
        for (k, &p) in self.problem.observed.iter().enumerate() {
            z[p] = self.f_in[k] * s[k] + self.f_ex[k] * s[m + k];
        }
        z
    }

    /// Adjoint evaluated on every column, ignoring the narrow band restriction.
    pub fn adjoint_unrestricted(&self, s: &HilbertVector<T>) -> Vec<T> {
        let z = self.dense_source(s);
        self.problem.dict.knolls().par_iter().map(|k| k.correlate(&z)).collect()
    }
}

impl<T: Real> LinearizedOperator<T> for SegmentationLinearization<'_, T> {
    fn residual(&self) -> &HilbertVector<T> {
        &self.residual
    }

    fn apply(&self, eta: &[T]) -> HilbertVector<T> {
        let p = self.problem;
        let mut field = vec![T::zero(); p.image.grid().len()];
        for &i in &self.active {
            if eta[i] == T::zero() {
                continue;
            }
            let (idx, vals) = p.dict.knolls()[i].sparse();
            for (&k, &v) in idx.iter().zip(vals) {
                field[k as usize] += eta[i] * v;
            }
        }
        let m = p.observed.len();
        let mut out = vec![T::zero(); 2 * m];
        for (k, &pix) in p.observed.iter().enumerate() {
            out[k] = self.f_in[k] * field[pix];
            out[m + k] = self.f_ex[k] * field[pix];
        }
        HilbertVector::new(out)
    }

    fn adjoint(&self, s: &HilbertVector<T>) -> Vec<T> {
        let z = self.dense_source(s);
        let knolls = self.problem.dict.knolls();
        let mut out = vec![T::zero(); knolls.len()];
        let values: Vec<T> = self.active.par_iter().map(|&i| knolls[i].correlate(&z)).collect();
        for (&i, v) in self.active.iter().zip(values) {
            out[i] = v;
        }
        out
    }
}

impl<T: Real> ResidualProblem<T> for SegmentationProblem<T> {
    type Linearization<'a> = SegmentationLinearization<'a, T>;

    fn dim(&self) -> usize {
        self.dict.len()
    }

    fn residual(&self, alpha: &[T]) -> Result<HilbertVector<T>> {
        check_len(self.dim(), alpha.len())?;
        let phi = self.level_set(alpha)?;
        let u = self.image.pixels.values();
        let RegionStats { u_in, u_ex } = self.stats;
        let m = self.observed.len();
        let mut out = vec![T::zero(); 2 * m];
        let (g_in, g_ex) = out.split_at_mut(m);
        g_in.par_iter_mut().zip(g_ex.par_iter_mut()).zip(self.observed.par_iter()).for_each(|((gi, ge), &p)| {
            let h = heaviside_eps(phi[p], self.eps);
            let d_in = u[p] - u_in;
            let d_ex = u[p] - u_ex;
            *gi = self.sqrt_area * (d_in * d_in * h).sqrt();
            *ge = self.sqrt_area * (d_ex * d_ex * (T::one() - h)).sqrt();
        });
        Ok(HilbertVector::new(out))
    }

    fn linearize<'a>(&'a self, alpha: &[T]) -> Result<SegmentationLinearization<'a, T>> {
        check_len(self.dim(), alpha.len())?;
        let residual = self.residual(alpha)?;
        let phi = self.level_set(alpha)?;
        let u = self.image.pixels.values();
        let RegionStats { u_in, u_ex } = self.stats;
        let half = T::of(0.5);
        let guard = T::of(GUARD);
        let (f_in, f_ex): (Vec<T>, Vec<T>) = self
            .observed
            .par_iter()
            .map(|&p| {
                let x = phi[p];
                if x.abs() >= self.eps {
                    return (T::zero(), T::zero());
                }
                let h = heaviside_eps(x, self.eps);
                let d = delta_eps(x, self.eps);
                let r_in = (u[p] - u_in).abs();
                let r_ex = (u[p] - u_ex).abs();
                let fi = self.sqrt_area * half * r_in * d / h.max(guard).sqrt();
                let fe = -self.sqrt_area * half * r_ex * d / (T::one() - h).max(guard).sqrt();
                (fi, fe)
            })
            .unzip();
        let active = active_from_phi(&self.dict, &phi, self.eps);
        Ok(SegmentationLinearization { problem: self, residual, f_in, f_ex, active })
    }

    fn inner(&self, a: &HilbertVector<T>, b: &HilbertVector<T>) -> T {
        dot(a.as_slice(), b.as_slice())
    }
}

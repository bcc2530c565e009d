use rayon::prelude::*;

use super::counts::CountData;
use super::radon::RadonOperator;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::knoll::{delta_eps, heaviside_eps, Dictionary};
use crate::scalar::Real;
use crate::solver::{
    asym_l1, check_len, feasible_start, outer_step, HilbertVector, IterRecord, LinearizedOperator, ResidualProblem,
    SolveStatus, SolveTrace, SolverParams,
};

pub const MU_AIR: f64 = 2.7e-4;
pub const MU_SOFT: f64 = 0.2;
pub const MU_BONE: f64 = 0.7;
pub const BLANK_SCAN: f64 = 4e6;

/// Air, soft tissue and bone attenuation for the two-phase model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseLevels<T> {
    pub mu_a: T,
    pub mu_s: T,
    pub mu_b: T,
}

impl<T: Real> Default for PhaseLevels<T> {
    fn default() -> Self {
        Self { mu_a: T::of(MU_AIR), mu_s: T::of(MU_SOFT), mu_b: T::of(MU_BONE) }
    }
}

#[derive(Debug, Clone)]
pub enum Attenuation<T> {
    /// `mu = u_in H(phi) + u_ex (1 - H(phi))`
    Single { dict: Dictionary<T>, u_in: T, u_ex: T },
    /// `mu = mu_a + (mu_s - mu_a) H(phi_1) + (mu_b - mu_s) H(phi_1) H(phi_2)`
    Two { dicts: [Dictionary<T>; 2], levels: PhaseLevels<T> },
}

/// Transmission CT misfit `G(alpha) = R mu(alpha) - v` with
/// `<s, t> = sum_m counts_m s_m t_m`. Coefficients of all phases are
/// concatenated in phase order.
#[derive(Debug, Clone)]
pub struct CtProblem<T> {
    op: RadonOperator<T>,
    data: CountData<T>,
    model: Attenuation<T>,
    eps: T,
}

impl<T: Real> CtProblem<T> {
    pub fn new(op: RadonOperator<T>, data: CountData<T>, model: Attenuation<T>, eps: T) -> Result<Self> {
        if data.geometry != *op.geometry() {
            return Err(Error::GridMismatch);
        }
        if !(eps > T::zero()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        let finite = match &model {
            Attenuation::Single { dict, u_in, u_ex } => {
                if dict.grid() != op.grid() {
                    return Err(Error::GridMismatch);
                }
                u_in.is_finite() && u_ex.is_finite()
            }
            Attenuation::Two { dicts, levels } => {
                if dicts.iter().any(|d| d.grid() != op.grid()) {
                    return Err(Error::GridMismatch);
                }
                levels.mu_a.is_finite() && levels.mu_s.is_finite() && levels.mu_b.is_finite()
            }
        };
        if !finite {
            return Err(Error::InvalidParameter("attenuation levels must be finite".into()));
        }
        Ok(Self { op, data, model, eps })
    }

    pub fn operator(&self) -> &RadonOperator<T> {
        &self.op
    }

    pub fn data(&self) -> &CountData<T> {
        &self.data
    }

    pub fn model(&self) -> &Attenuation<T> {
        &self.model
    }

    pub fn phase_count(&self) -> usize {
        match self.model {
            Attenuation::Single { .. } => 1,
            Attenuation::Two { .. } => 2,
        }
    }

    pub fn dictionary(&self, phase: usize) -> &Dictionary<T> {
        match &self.model {
            Attenuation::Single { dict, .. } => dict,
            Attenuation::Two { dicts, .. } => &dicts[phase],
        }
    }

    fn phase_offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for k in 0..self.phase_count() {
            off.push(off[k] + self.dictionary(k).len());
        }
        off
    }

    /// Splits concatenated coefficients into per-phase slices.
    pub fn split<'b>(&self, alpha: &'b [T]) -> Result<Vec<&'b [T]>> {
        let off = self.phase_offsets();
        check_len(off[self.phase_count()], alpha.len())?;
        Ok((0..self.phase_count()).map(|k| &alpha[off[k]..off[k + 1]]).collect())
    }

    fn level_sets(&self, phases: &[&[T]]) -> Result<Vec<Vec<T>>> {
        phases.iter().enumerate().map(|(k, a)| Ok(self.dictionary(k).assemble_level_set(a)?.into_values())).collect()
    }

    fn mu_from_phis(&self, phis: &[Vec<T>]) -> Vec<T> {
        let eps = self.eps;
        match &self.model {
            Attenuation::Single { u_in, u_ex, .. } => phis[0]
                .iter()
                .map(|&x| {
                    let h = heaviside_eps(x, eps);
                    *u_in * h + *u_ex * (T::one() - h)
                })
                .collect(),
            Attenuation::Two { levels, .. } => phis[0]
                .iter()
                .zip(&phis[1])
                .map(|(&x1, &x2)| {
                    let h1 = heaviside_eps(x1, eps);
                    let h2 = heaviside_eps(x2, eps);
                    levels.mu_a + (levels.mu_s - levels.mu_a) * h1 + (levels.mu_b - levels.mu_s) * h1 * h2
                })
                .collect(),
        }
    }

    /// Attenuation map from concatenated coefficients.
    pub fn mu_from_alpha(&self, alpha: &[T]) -> Result<ScalarField<T>> {
        let phases = self.split(alpha)?;
        let phis = self.level_sets(&phases)?;
        ScalarField::from_values(*self.op.grid(), self.mu_from_phis(&phis))
    }

    /// Pixelwise factor `s_k` with `d mu / d alpha^(k)_i = psi^(k)_i s_k`.
    fn sensitivity(&self, phase: usize, phis: &[Vec<T>]) -> Vec<T> {
        let eps = self.eps;
        match &self.model {
            Attenuation::Single { u_in, u_ex, .. } => phis[0].iter().map(|&x| (*u_in - *u_ex) * delta_eps(x, eps)).collect(),
            Attenuation::Two { levels, .. } => {
                let (ds, db) = (levels.mu_s - levels.mu_a, levels.mu_b - levels.mu_s);
                phis[0]
                    .iter()
                    .zip(&phis[1])
                    .map(|(&x1, &x2)| {
                        if phase == 0 {
                            ds * delta_eps(x1, eps) + db * delta_eps(x1, eps) * heaviside_eps(x2, eps)
                        } else {
                            db * heaviside_eps(x1, eps) * delta_eps(x2, eps)
                        }
                    })
                    .collect()
            }
        }
    }

    /// Sensitivity fields of every phase at concatenated coefficients.
    pub fn sensitivities(&self, alpha: &[T]) -> Result<Vec<ScalarField<T>>> {
        let phases = self.split(alpha)?;
        let phis = self.level_sets(&phases)?;
        (0..self.phase_count()).map(|k| ScalarField::from_values(*self.op.grid(), self.sensitivity(k, &phis))).collect()
    }

    fn residual_from_phis(&self, phis: &[Vec<T>]) -> HilbertVector<T> {
        let mu = self.mu_from_phis(phis);
        let v = self.op.apply_slice(&mu);
        HilbertVector::new(v.iter().zip(&self.data.measurements).map(|(&a, &b)| a - b).collect())
    }

    fn linearize_blocks(&self, phases: &[&[T]], variable: &[usize]) -> Result<CtLinearization<'_, T>> {
        let phis = self.level_sets(phases)?;
        let residual = self.residual_from_phis(&phis);
        let mut offset = 0;
        let blocks = variable
            .iter()
            .map(|&k| {
                let sens = self.sensitivity(k, &phis);
                let active = self
                    .dictionary(k)
                    .knolls()
                    .par_iter()
                    .enumerate()
                    .filter(|(_, kn)| kn.sparse().0.iter().any(|&p| sens[p as usize] != T::zero()))
                    .map(|(i, _)| i)
                    .collect();
                let block = Block { phase: k, offset, sens, active };
                offset += self.dictionary(k).len();
                block
            })
            .collect();
        Ok(CtLinearization { problem: self, residual, blocks, dim: offset })
    }

    /// View with phase `phase` variable and the other phases frozen at `fixed`
    /// (concatenated coefficients; the entries of `phase` itself are ignored).
    pub fn phase_view(&self, phase: usize, fixed: &[T]) -> Result<PhaseView<'_, T>> {
        if phase >= self.phase_count() {
            return Err(Error::InvalidParameter(format!("phase {phase} out of range")));
        }
        check_len(self.phase_offsets()[self.phase_count()], fixed.len())?;
        Ok(PhaseView { problem: self, phase, fixed: fixed.to_vec() })
    }

    /// Coordinate descent for the two-phase model: per outer iteration one
    /// Gauss-Newton step on each phase, each with its own warm-started tau.
    pub fn reconstruct_alternating(&self, alpha0: &[T], params: &SolverParams<T>) -> Result<(Vec<T>, SolveTrace<T>)> {
        params.validate()?;
        let off = self.phase_offsets();
        check_len(off[self.phase_count()], alpha0.len())?;
        let mut alpha = alpha0.to_vec();
        for k in 0..self.phase_count() {
            let start = feasible_start(&alpha[off[k]..off[k + 1]], params)?;
            alpha[off[k]..off[k + 1]].copy_from_slice(&start);
        }
        let mut taus = vec![params.tau0; self.phase_count()];
        let mut trace = SolveTrace {
            initial_energy: self.energy(&alpha)?,
            records: Vec::new(),
            status: SolveStatus::MaxOuter,
            iterations: 0,
            descent_violations: 0,
        };
        for iter in 1..=params.max_outer {
            trace.iterations = iter;
            let mut all_stopped = true;
            for k in 0..self.phase_count() {
                let view = self.phase_view(k, &alpha)?;
                let mut block = alpha[off[k]..off[k + 1]].to_vec();
                let outcome = outer_step(&view, &mut block, &mut taus[k], params, iter)?;
                trace.descent_violations += usize::from(outcome.descent_violation);
                alpha[off[k]..off[k + 1]].copy_from_slice(&block);
                if let Some(record) = outcome.record {
                    trace.records.push(IterRecord {
                        asym_l1: asym_l1(&alpha, params.w),
                        active_set: crate::solver::active_count(&alpha),
                        ..record
                    });
                }
                match outcome.stop {
                    Some(SolveStatus::Converged) | Some(SolveStatus::Stationary) => {}
                    Some(other) => {
                        trace.status = other;
                        return Ok((alpha, trace));
                    }
                    None => all_stopped = false,
                }
            }
            if all_stopped {
                trace.status = SolveStatus::Converged;
                break;
            }
        }
        Ok((alpha, trace))
    }
}

struct Block<T> {
    phase: usize,
    offset: usize,
    sens: Vec<T>,
    active: Vec<usize>,
}

/// Jacobian `eta -> R sum_k s_k sum_i eta_i psi^(k)_i` over the variable phases.
pub struct CtLinearization<'a, T> {
    problem: &'a CtProblem<T>,
    residual: HilbertVector<T>,
    blocks: Vec<Block<T>>,
    dim: usize,
}

impl<T: Real> LinearizedOperator<T> for CtLinearization<'_, T> {
    fn residual(&self) -> &HilbertVector<T> {
        &self.residual
    }

    fn apply(&self, eta: &[T]) -> HilbertVector<T> {
        debug_assert_eq!(eta.len(), self.dim);
        let p = self.problem;
        let n = p.op.grid().len();
        let mut dmu = vec![T::zero(); n];
        for b in &self.blocks {
            let mut field = vec![T::zero(); n];
            let knolls = p.dictionary(b.phase).knolls();
            for &i in &b.active {
                let e = eta[b.offset + i];
                if e == T::zero() {
                    continue;
                }
                let (idx, vals) = knolls[i].sparse();
                for (&k, &v) in idx.iter().zip(vals) {
                    field[k as usize] += e * v;
                }
            }
            for ((d, &f), &s) in dmu.iter_mut().zip(&field).zip(&b.sens) {
                *d += s * f;
            }
        }
        HilbertVector::new(p.op.apply_slice(&dmu))
    }

    fn adjoint(&self, s: &HilbertVector<T>) -> Vec<T> {
        let p = self.problem;
        let weighted: Vec<T> = s.as_slice().iter().zip(p.data.weights()).map(|(&a, &w)| a * w).collect();
        let z = p.op.adjoint_slice(&weighted);
        let mut out = vec![T::zero(); self.dim];
        for b in &self.blocks {
            let zb: Vec<T> = z.iter().zip(&b.sens).map(|(&a, &c)| a * c).collect();
            let knolls = p.dictionary(b.phase).knolls();
            let vals: Vec<T> = b.active.par_iter().map(|&i| knolls[i].correlate(&zb)).collect();
            for (&i, v) in b.active.iter().zip(vals) {
                out[b.offset + i] = v;
            }
        }
        out
    }
}

impl<T: Real> ResidualProblem<T> for CtProblem<T> {
    type Linearization<'a> = CtLinearization<'a, T>;

    fn dim(&self) -> usize {
        self.phase_offsets()[self.phase_count()]
    }

    fn residual(&self, alpha: &[T]) -> Result<HilbertVector<T>> {
        let phases = self.split(alpha)?;
        Ok(self.residual_from_phis(&self.level_sets(&phases)?))
    }

    fn linearize<'a>(&'a self, alpha: &[T]) -> Result<CtLinearization<'a, T>> {
        let phases = self.split(alpha)?;
        let all: Vec<usize> = (0..self.phase_count()).collect();
        self.linearize_blocks(&phases, &all)
    }

    fn inner(&self, a: &HilbertVector<T>, b: &HilbertVector<T>) -> T {
        a.as_slice().iter().zip(b.as_slice()).zip(self.data.weights()).map(|((&x, &y), &w)| w * x * y).sum()
    }
}

/// One phase of a [`CtProblem`] as a residual problem, the others frozen.
pub struct PhaseView<'a, T> {
    problem: &'a CtProblem<T>,
    phase: usize,
    fixed: Vec<T>,
}

impl<T: Real> PhaseView<'_, T> {
    fn full(&self, alpha: &[T]) -> Result<Vec<T>> {
        let off = self.problem.phase_offsets();
        check_len(off[self.phase + 1] - off[self.phase], alpha.len())?;
        let mut full = self.fixed.clone();
        full[off[self.phase]..off[self.phase + 1]].copy_from_slice(alpha);
        Ok(full)
    }
}

impl<T: Real> ResidualProblem<T> for PhaseView<'_, T> {
    type Linearization<'b>
        = CtLinearization<'b, T>
    where
        Self: 'b;

    fn dim(&self) -> usize {
        self.problem.dictionary(self.phase).len()
    }

    fn residual(&self, alpha: &[T]) -> Result<HilbertVector<T>> {
        self.problem.residual(&self.full(alpha)?)
    }

    fn linearize<'b>(&'b self, alpha: &[T]) -> Result<CtLinearization<'b, T>> {
        let full = self.full(alpha)?;
        let phases = self.problem.split(&full)?;
        self.problem.linearize_blocks(&phases, &[self.phase])
    }

    fn inner(&self, a: &HilbertVector<T>, b: &HilbertVector<T>) -> T {
        self.problem.inner(a, b)
    }
}

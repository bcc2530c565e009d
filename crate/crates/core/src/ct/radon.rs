use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::scalar::Real;

/// Parallel-beam acquisition: for every angle `theta`, rays along direction
/// `(-sin theta, cos theta)` at detector offsets spread uniformly over
/// `[-half_width, half_width]` (bin centers).
#[derive(Debug, Clone, PartialEq)]
pub struct RayGeometry<T> {
    angles: Vec<T>,
    rays_per_angle: usize,
    half_width: T,
}

impl<T: Real> RayGeometry<T> {
    pub fn new(angles: Vec<T>, rays_per_angle: usize, half_width: T) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidParameter("at least one projection angle is required".into()));
        }
        if rays_per_angle == 0 {
            return Err(Error::InvalidParameter("rays per angle must be positive".into()));
        }
        if !(half_width > T::zero()) || angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("detector extent must be positive and angles finite".into()));
        }
        Ok(Self { angles, rays_per_angle, half_width })
    }

    /// `count` angles `a pi / count`, `a = 0..count`.
    pub fn equispaced(count: usize, rays_per_angle: usize, half_width: T) -> Result<Self> {
        let angles = (0..count).map(|a| T::PI() * T::of_usize(a) / T::of_usize(count)).collect();
        Self::new(angles, rays_per_angle, half_width)
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn rays_per_angle(&self) -> usize {
        self.rays_per_angle
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn ray_count(&self) -> usize {
        self.angles.len() * self.rays_per_angle
    }

    pub fn spacing(&self) -> T {
        T::of(2.0) * self.half_width / T::of_usize(self.rays_per_angle)
    }

    pub fn offset(&self, ray: usize) -> T {
        -self.half_width + (T::of_usize(ray) + T::of(0.5)) * self.spacing()
    }

    /// `(angle, offset)` of ray `m = a * rays_per_angle + r`.
    pub fn ray(&self, m: usize) -> (T, T) {
        (self.angles[m / self.rays_per_angle], self.offset(m % self.rays_per_angle))
    }
}

/// Line integrals `v_m = sum_p mu(p) |L_m cap p|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram<T> {
    pub geometry: RayGeometry<T>,
    pub values: Vec<T>,
}

/// Exact ray-pixel intersection lengths (Siddon traversal), stored by ray and
/// by pixel so both the forward map and its transpose are deterministic.
#[derive(Debug, Clone)]
pub struct RadonOperator<T> {
    geometry: RayGeometry<T>,
    grid: Grid<T>,
    row_ptr: Vec<usize>,
    row_pix: Vec<u32>,
    row_len: Vec<T>,
    col_ptr: Vec<usize>,
    col_ray: Vec<u32>,
    col_len: Vec<T>,
}

impl<T: Real> RadonOperator<T> {
    pub fn new(geometry: RayGeometry<T>, grid: Grid<T>) -> Self {
        let rows: Vec<Vec<(u32, T)>> =
            (0..geometry.ray_count()).into_par_iter().map(|m| trace_ray(&grid, geometry.ray(m))).collect();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut row_pix = Vec::new();
        let mut row_len = Vec::new();
        for row in &rows {
            for &(p, l) in row {
                row_pix.push(p);
                row_len.push(l);
            }
            row_ptr.push(row_pix.len());
        }

        let mut counts = vec![0usize; grid.len() + 1];
        for &p in &row_pix {
            counts[p as usize + 1] += 1;
        }
        for k in 0..grid.len() {
            counts[k + 1] += counts[k];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut col_ray = vec![0u32; row_pix.len()];
        let mut col_len = vec![T::zero(); row_pix.len()];
        for m in 0..rows.len() {
            for e in row_ptr[m]..row_ptr[m + 1] {
                let p = row_pix[e] as usize;
                col_ray[fill[p]] = m as u32;
                col_len[fill[p]] = row_len[e];
                fill[p] += 1;
            }
        }
        Self { geometry, grid, row_ptr, row_pix, row_len, col_ptr, col_ray, col_len }
    }

    pub fn geometry(&self) -> &RayGeometry<T> {
        &self.geometry
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Pixels crossed by ray `m` and the chord lengths.
    pub fn ray_entries(&self, m: usize) -> (&[u32], &[T]) {
        let r = self.row_ptr[m]..self.row_ptr[m + 1];
        (&self.row_pix[r.clone()], &self.row_len[r])
    }

    pub fn apply_slice(&self, mu: &[T]) -> Vec<T> {
        debug_assert_eq!(mu.len(), self.grid.len());
        (0..self.geometry.ray_count())
            .into_par_iter()
            .map(|m| {
                let (pix, len) = self.ray_entries(m);
                pix.iter().zip(len).map(|(&p, &l)| mu[p as usize] * l).sum()
            })
            .collect()
    }

    pub fn adjoint_slice(&self, s: &[T]) -> Vec<T> {
        debug_assert_eq!(s.len(), self.geometry.ray_count());
        (0..self.grid.len())
            .into_par_iter()
            .map(|p| {
                let r = self.col_ptr[p]..self.col_ptr[p + 1];
                self.col_ray[r.clone()].iter().zip(&self.col_len[r]).map(|(&m, &l)| s[m as usize] * l).sum()
            })
            .collect()
    }

    pub fn radon_apply(&self, mu: &ScalarField<T>) -> Result<Sinogram<T>> {
        if mu.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Sinogram { geometry: self.geometry.clone(), values: self.apply_slice(mu.values()) })
    }

    pub fn radon_adjoint(&self, sino: &Sinogram<T>) -> Result<ScalarField<T>> {
        if sino.geometry != self.geometry {
            return Err(Error::GridMismatch);
        }
        if sino.values.len() != self.geometry.ray_count() {
            return Err(Error::LengthMismatch { expected: self.geometry.ray_count(), got: sino.values.len() });
        }
        ScalarField::from_values(self.grid, self.adjoint_slice(&sino.values))
    }
}

/// Siddon traversal of one ray through the pixel lattice.
fn trace_ray<T: Real>(grid: &Grid<T>, (theta, s): (T, T)) -> Vec<(u32, T)> {
    let (x0, x1, y0, y1) = grid.extents();
    let (sin, cos) = theta.sin_cos();
    let origin = [s * cos, s * sin];
    let dir = [-sin, cos];
    let tiny = T::of(1e-12);

    // clip the line to the grid box
    let mut t_lo = T::neg_infinity();
    let mut t_hi = T::infinity();
    for (o, d, lo, hi) in [(origin[0], dir[0], x0, x1), (origin[1], dir[1], y0, y1)] {
        if d.abs() < tiny {
            if o < lo || o > hi {
                return Vec::new();
            }
        } else {
            let (a, b) = ((lo - o) / d, (hi - o) / d);
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    if !(t_hi > t_lo) {
        return Vec::new();
    }

    let mut ts = vec![t_lo, t_hi];
    for (o, d, lo, step, n) in [(origin[0], dir[0], x0, grid.dx(), grid.nx()), (origin[1], dir[1], y0, grid.dy(), grid.ny())] {
        if d.abs() < tiny {
            continue;
        }
        for k in 1..n {
            let t = (lo + T::of_usize(k) * step - o) / d;
            if t > t_lo && t < t_hi {
                ts.push(t);
            }
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite crossing parameters"));

    let mut out: Vec<(u32, T)> = Vec::with_capacity(ts.len());
    for pair in ts.windows(2) {
        let len = pair[1] - pair[0];
        if len <= tiny * step_scale(grid) {
            continue;
        }
        let mid = (pair[0] + pair[1]) * T::of(0.5);
        let p = [origin[0] + mid * dir[0], origin[1] + mid * dir[1]];
        if let Some(k) = grid.locate(p) {
            match out.last_mut() {
                Some((last, l)) if *last as usize == k => *l += len,
                _ => out.push((k as u32, len)),
            }
        }
    }
    out
}

fn step_scale<T: Real>(grid: &Grid<T>) -> T {
    grid.dx().max(grid.dy())
}

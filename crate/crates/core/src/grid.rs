//! Discretized imaging domain and the fields and masks that live on it.
//!
//! Samples sit at pixel centers. Sample `(i, j)` has coordinates
//! `(x_min + (i + 0.5) dx, y_min + (j + 0.5) dy)` and is stored at linear
//! index `j * nx + i`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    x_min: T,
    x_max: T,
    y_min: T,
    y_max: T,
}

impl<T: Real> Grid<T> {
    pub fn new(nx: usize, ny: usize, x_min: T, x_max: T, y_min: T, y_max: T) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2x2 samples, got {nx}x{ny}")));
        }
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidGrid("extents must be finite and increasing".into()));
        }
        Ok(Self { nx, ny, x_min, x_max, y_min, y_max })
    }

    /// Square grid over `[lo, hi]²`.
    pub fn square(n: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(n, n, lo, hi, lo, hi)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn extents(&self) -> (T, T, T, T) {
        (self.x_min, self.x_max, self.y_min, self.y_max)
    }
    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / T::of_usize(self.nx)
    }
    pub fn dy(&self) -> T {
        (self.y_max - self.y_min) / T::of_usize(self.ny)
    }
    pub fn pixel_area(&self) -> T {
        self.dx() * self.dy()
    }
    pub fn area(&self) -> T {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x_min + (T::of_usize(i) + T::of(0.5)) * self.dx()
    }
    #[inline]
    pub fn y(&self, j: usize) -> T {
        self.y_min + (T::of_usize(j) + T::of(0.5)) * self.dy()
    }
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }
    /// Physical coordinates of the sample at linear index `k`.
    #[inline]
    pub fn point(&self, k: usize) -> [T; 2] {
        let (i, j) = self.coords(k);
        [self.x(i), self.y(j)]
    }

    /// Linear index of the pixel containing `p`, if inside the extents.
    pub fn locate(&self, p: [T; 2]) -> Option<usize> {
        let fx = ((p[0] - self.x_min) / self.dx()).floor();
        let fy = ((p[1] - self.y_min) / self.dy()).floor();
        if fx < T::zero() || fy < T::zero() {
            return None;
        }
        let (i, j) = (fx.to_usize()?, fy.to_usize()?);
        (i < self.nx && j < self.ny).then(|| self.index(i, j))
    }

    pub fn points(&self) -> impl Iterator<Item = [T; 2]> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }
}

/// Real-valued samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: Grid<T>, value: T) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every pixel center.
    pub fn from_fn(grid: Grid<T>, f: impl Fn([T; 2]) -> T) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }
    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Riemann sum of the field over the domain.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.pixel_area()
    }

    /// Root mean square difference against another field on the same grid.
    pub fn rmse(&self, other: &Self) -> Result<T> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let ss: T = self.values.iter().zip(&other.values).map(|(&a, &b)| (a - b) * (a - b)).sum();
        Ok((ss / T::of_usize(self.values.len())).sqrt())
    }

    /// Flat CSV: `i,j,x,y,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,x,y,value\n");
        for (k, v) in self.values.iter().enumerate() {
            let (i, j) = self.grid.coords(k);
            let _ = writeln!(out, "{i},{j},{},{},{v}", self.grid.x(i), self.grid.y(j));
        }
        out
    }

    /// 16-bit PGM, affinely scaled onto `[0, 65535]`; the scale lands in
    /// `<path>.scale`.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let (lo, hi) = (self.min(), self.max());
        let span = hi - lo;
        let levels: Vec<u16> = self
            .values
            .iter()
            .map(|&v| {
                if span > T::zero() {
                    ((v - lo) / span * T::of(65535.0)).round().to_u16().unwrap_or(0)
                } else {
                    0
                }
            })
            .collect();
        crate::pgm::write_u16(path, self.grid.nx, self.grid.ny, &levels)?;
        let sidecar = format!("min {lo}\nmax {hi}\nmaxval 65535\n");
        std::fs::write(crate::pgm::sidecar_path(path), sidecar)?;
        Ok(())
    }
}

/// Boolean samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask<T> {
    grid: Grid<T>,
    values: Vec<bool>,
}

impl<T: Real> RegionMask<T> {
    pub fn empty(grid: Grid<T>) -> Self {
        Self { grid, values: vec![false; grid.len()] }
    }
    pub fn full(grid: Grid<T>) -> Self {
        Self { grid, values: vec![true; grid.len()] }
    }
    pub fn from_values(grid: Grid<T>, values: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }
    pub fn from_fn(grid: Grid<T>, f: impl Fn([T; 2]) -> bool) -> Self {
        Self { grid, values: grid.points().map(f).collect() }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }
    pub fn values(&self) -> &[bool] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [bool] {
        &mut self.values
    }
    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }
    pub fn area(&self) -> T {
        T::of_usize(self.count()) * self.grid.pixel_area()
    }
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter_map(|(k, &b)| b.then_some(k))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }
    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }
    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }
    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    /// Intersection over union; two empty masks score 1.
    pub fn iou(&self, other: &Self) -> Result<f64> {
        let inter = self.intersection(other)?.count();
        let uni = self.union(other)?.count();
        Ok(if uni == 0 { 1.0 } else { inter as f64 / uni as f64 })
    }

    /// 8-bit PGM, 255 for `true`.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let levels: Vec<u8> = self.values.iter().map(|&b| if b { 255 } else { 0 }).collect();
        crate::pgm::write_u8(path, self.grid.nx, self.grid.ny, &levels)
    }
}

/// Area of the symmetric difference of two masks.
pub fn dissimilarity<T: Real>(a: &RegionMask<T>, b: &RegionMask<T>) -> Result<T> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let n = a.values.iter().zip(&b.values).filter(|(x, y)| x != y).count();
    Ok(T::of_usize(n) * a.grid.pixel_area())
}

/// Pixels where the field is strictly positive.
pub fn mask_from_positive_support<T: Real>(field: &ScalarField<T>) -> RegionMask<T> {
    RegionMask { grid: field.grid, values: field.values.iter().map(|&v| v > T::zero()).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> Grid<f64> {
        Grid::square(4, -2.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::<f64>::new(1, 4, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(Grid::<f64>::new(4, 4, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Grid::<f64>::new(4, 4, 0.0, 1.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn pixel_centers() {
        let g = g();
        assert_eq!(g.x(0), -1.5);
        assert_eq!(g.y(3), 1.5);
        assert_eq!(g.pixel_area(), 1.0);
        assert_eq!(g.locate([-1.9, 1.9]), Some(g.index(0, 3)));
        assert_eq!(g.locate([2.5, 0.0]), None);
    }

    #[test]
    fn dissimilarity_extremes() {
        let g = g();
        let full = RegionMask::full(g);
        let empty = RegionMask::empty(g);
        assert_eq!(dissimilarity(&full, &full).unwrap(), 0.0);
        assert_eq!(dissimilarity(&full, &empty).unwrap(), g.area());
        let other = RegionMask::full(Grid::square(4, 0.0, 1.0).unwrap());
        assert!(matches!(dissimilarity(&full, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn positive_support() {
        let g = g();
        assert_eq!(mask_from_positive_support(&ScalarField::zeros(g)).count(), 0);
        let mut f = ScalarField::zeros(g);
        f.values_mut()[5] = 0.25;
        let m = mask_from_positive_support(&f);
        assert_eq!(m.count(), 1);
        assert!(m.values()[5]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(ScalarField::from_values(g(), vec![f64::INFINITY; 16]).is_err());
    }
}

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::scalar::Real;

/// Element of a problem's data space. The inner product lives on the owning
/// [`ResidualProblem`](super::ResidualProblem), the coordinates live here.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertVector<T>(Vec<T>);

impl<T: Real> HilbertVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()), "non-finite data-space coordinate");
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: T, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (s, &v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        Self(self.0.iter().map(|&v| a * v).collect())
    }
}

impl<T> Index<usize> for HilbertVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for HilbertVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real> Add for &HilbertVector<T> {
    type Output = HilbertVector<T>;
    fn add(self, rhs: Self) -> HilbertVector<T> {
        debug_assert_eq!(self.len(), rhs.len());
        HilbertVector(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

impl<T: Real> Sub for &HilbertVector<T> {
    type Output = HilbertVector<T>;
    fn sub(self, rhs: Self) -> HilbertVector<T> {
        debug_assert_eq!(self.len(), rhs.len());
        HilbertVector(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Real> Mul<T> for &HilbertVector<T> {
    type Output = HilbertVector<T>;
    fn mul(self, rhs: T) -> HilbertVector<T> {
        self.scaled(rhs)
    }
}

impl<T> From<Vec<T>> for HilbertVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

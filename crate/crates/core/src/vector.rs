//! Dense parameter vectors.

use std::ops::{Deref, Index, IndexMut};

use crate::error::{check_dim, Result};
use crate::scalar::Scalar;

/// Decision variable of a run (model weights). The length is fixed at
/// construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterVector<T> {
    coords: Vec<T>,
}

impl<T: Scalar> ParameterVector<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self { coords }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coords: vec![T::zero(); n],
        }
    }

    pub fn from_f64(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.coords
    }

    pub fn into_inner(self) -> Vec<T> {
        self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|v| v.as_f64()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &[T]) -> Result<T> {
        check_dim(self.len(), other.len())?;
        Ok(dot(&self.coords, other))
    }

    pub fn norm(&self) -> T {
        norm(&self.coords)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: T, other: &[T]) -> Result<()> {
        check_dim(self.len(), other.len())?;
        for (a, &b) in self.coords.iter_mut().zip(other) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: T) {
        for a in &mut self.coords {
            *a *= alpha;
        }
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        check_dim(self.len(), other.len())?;
        Ok(distance(&self.coords, &other.coords))
    }
}

impl<T> Deref for ParameterVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.coords
    }
}

impl<T> Index<usize> for ParameterVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

impl<T> IndexMut<usize> for ParameterVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.coords[i]
    }
}

impl<T> From<Vec<T>> for ParameterVector<T> {
    fn from(coords: Vec<T>) -> Self {
        Self { coords }
    }
}

impl<T: Scalar> FromIterator<T> for ParameterVector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

// Slice helpers. Callers check dimensions.

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

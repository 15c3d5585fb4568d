//! Feasible sets and Euclidean projection onto them.

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::ParameterVector;

/// A closed convex feasible set with an exact Euclidean projection.
pub trait FeasibleSet<T: Scalar> {
    fn dim(&self) -> usize;

    fn project(&self, x: &ParameterVector<T>) -> Result<ParameterVector<T>>;

    /// Projection into a preallocated buffer.
    fn project_in_place(&self, x: &mut [T]) -> Result<()>;

    fn contains(&self, x: &[T]) -> bool;
}

/// `{x : lower <= x <= upper}` coordinatewise.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxConstraint<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> BoxConstraint<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l <= u) {
                return Err(Error::InvalidArgument(format!(
                    "box bound {i}: lower {l} exceeds upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The ball `{x : ||x||_inf <= half_width}` in `n` dimensions.
    pub fn symmetric(n: usize, half_width: T) -> Result<Self> {
        if !(half_width >= T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "half width must be finite and nonnegative, got {half_width}"
            )));
        }
        Self::new(vec![-half_width; n], vec![half_width; n])
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    /// Largest absolute value coordinate `i` can take inside the box.
    pub fn max_abs(&self, i: usize) -> T {
        self.lower[i].abs().max(self.upper[i].abs())
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| (u - l) * (u - l))
            .sum::<T>()
            .sqrt()
    }
}

impl<T: Scalar> FeasibleSet<T> for BoxConstraint<T> {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn project(&self, x: &ParameterVector<T>) -> Result<ParameterVector<T>> {
        let mut out = x.clone();
        self.project_in_place(out.as_mut_slice())?;
        Ok(out)
    }

    fn project_in_place(&self, x: &mut [T]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        for ((v, &l), &u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(l).min(u);
        }
        Ok(())
    }

    fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn box10() -> BoxConstraint<f64> {
        BoxConstraint::symmetric(2, 10.0).unwrap()
    }

    #[test]
    fn interior_point_fixed() {
        let x = ParameterVector::from_f64(&[1.0, -2.0]);
        assert_eq!(box10().project(&x).unwrap(), x);
    }

    #[test]
    fn clamps_each_coordinate() {
        let x = ParameterVector::from_f64(&[15.0, -15.0]);
        assert_eq!(box10().project(&x).unwrap().as_slice(), &[10.0, -10.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let x = ParameterVector::from_f64(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            box10().project(&x),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn rejects_inverted_bounds() {
        assert!(BoxConstraint::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxConstraint::<f64>::symmetric(1, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn idempotent_and_feasible(a in -50.0..50.0f64, b in -50.0..50.0f64, w in 0.0..20.0f64) {
            let bx = BoxConstraint::symmetric(2, w).unwrap();
            let p = bx.project(&ParameterVector::from_f64(&[a, b])).unwrap();
            prop_assert!(bx.contains(&p));
            prop_assert_eq!(bx.project(&p).unwrap(), p);
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn nonexpansive(x in proptest::collection::vec(-30.0..30.0f64, 4),
                        y in proptest::collection::vec(-30.0..30.0f64, 4)) {
            let bx = BoxConstraint::new(vec![-1.0, -5.0, 0.0, 2.0], vec![1.0, 5.0, 10.0, 2.0]).unwrap();
            let px = bx.project(&ParameterVector::new(x.clone())).unwrap();
            let py = bx.project(&ParameterVector::new(y.clone())).unwrap();
            let before = crate::vector::distance(&x, &y);
            prop_assert!(px.distance(&py).unwrap() <= before + 1e-12);
        }
    }
}

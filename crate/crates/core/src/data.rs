//! Observations and finite empirical datasets.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One observation `D = (a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint<T> {
    pub features: Vec<T>,
    pub target: T,
}

impl<T: Scalar> DataPoint<T> {
    pub fn new(features: Vec<T>, target: T) -> Result<Self> {
        if !target.is_finite() || features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("data point has a non-finite entry".into()));
        }
        Ok(Self { features, target })
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// Uniform empirical distribution over a nonempty set of points sharing one
/// feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    points: Vec<DataPoint<T>>,
    dim: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(points: Vec<DataPoint<T>>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("dataset is empty".into()))?;
        let dim = first.dim();
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.dim() != dim) {
            return Err(Error::InvalidArgument(format!(
                "point {i} has {} features, expected {dim}",
                p.dim()
            )));
        }
        Ok(Self { points, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for clippy.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[DataPoint<T>] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &DataPoint<T> {
        &self.points[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DataPoint<T>> {
        self.points.iter()
    }

    /// Splits off the trailing `tail` points as a second dataset.
    pub fn split_tail(mut self, tail: usize) -> Result<(Self, Self)> {
        if tail == 0 || tail >= self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot split {tail} of {} points",
                self.points.len()
            )));
        }
        let rest = self.points.split_off(self.points.len() - tail);
        Ok((Self::new(self.points)?, Self::new(rest)?))
    }

    /// Parses comma-separated rows, last column is the target. A first row
    /// that does not parse as numbers is treated as a header.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut width = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if points.is_empty() && width.is_none() => {
                    // header
                    width = Some(line.split(',').count());
                    continue;
                }
                Err(e) => {
                    return Err(Error::Data(format!("line {}: {e}", lineno + 1)));
                }
            };
            if row.len() < 2 {
                return Err(Error::Data(format!(
                    "line {}: need at least one feature and a target",
                    lineno + 1
                )));
            }
            match width {
                Some(w) if w != row.len() => {
                    return Err(Error::Data(format!(
                        "line {}: expected {w} columns, found {}",
                        lineno + 1,
                        row.len()
                    )));
                }
                _ => width = Some(row.len()),
            }
            let (target, features) = row.split_last().expect("nonempty row");
            let point = DataPoint::new(features.iter().map(|&v| T::lit(v)).collect(), T::lit(*target))
                .map_err(|_| Error::Data(format!("line {}: non-finite value", lineno + 1)))?;
            points.push(point);
        }
        if points.is_empty() {
            return Err(Error::Data("no data rows".into()));
        }
        Self::new(points)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Self::parse_csv(&text)
    }

    /// Serializes with a `a1,...,ad,b` header; `parse_csv` reads it back.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim)
            .map(|i| format!("a{i}"))
            .chain(std::iter::once("b".to_string()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for p in &self.points {
            for v in &p.features {
                out.push_str(&format!("{:e},", v.as_f64()));
            }
            out.push_str(&format!("{:e}\n", p.target.as_f64()));
        }
        out
    }
}

impl<'a, T> IntoIterator for &'a Dataset<T> {
    type Item = &'a DataPoint<T>;
    type IntoIter = std::slice::Iter<'a, DataPoint<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let a = Dataset::<f64>::parse_csv("x1,x2,y\n1,2,3\n4,5,6\n").unwrap();
        let b = Dataset::<f64>::parse_csv("1,2,3\n\n4,5,6").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 2);
        assert_eq!(a.get(1).target, 6.0);
    }

    #[test]
    fn rejects_ragged_rows_with_line_number() {
        let err = Dataset::<f64>::parse_csv("1,2,3\n4,5\n").unwrap_err();
        assert_eq!(err, Error::Data("line 2: expected 3 columns, found 2".into()));
        assert!(Dataset::<f64>::parse_csv("1,2\nfoo,3\n").is_err());
        assert!(Dataset::<f64>::parse_csv("only,header\n").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let ds = Dataset::<f64>::parse_csv("0.1,-2.5,3\n4,5e-3,6\n").unwrap();
        assert_eq!(Dataset::parse_csv(&ds.to_csv()).unwrap(), ds);
    }

    #[test]
    fn empty_and_mixed_dimension_rejected() {
        assert!(Dataset::<f64>::new(vec![]).is_err());
        let p1 = DataPoint::new(vec![1.0], 0.0).unwrap();
        let p2 = DataPoint::new(vec![1.0, 2.0], 0.0).unwrap();
        assert!(Dataset::new(vec![p1, p2]).is_err());
        assert!(DataPoint::new(vec![f64::NAN], 0.0).is_err());
    }
}

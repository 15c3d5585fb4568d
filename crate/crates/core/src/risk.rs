//! Mean-semideviation risk of a random loss and the two-level objective
//! `F(x) = f(x, h(x))` built from it.

use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::models::LossSpec;
use crate::scalar::Scalar;
use crate::vector::{dot, ParameterVector};

/// Largest support the vertex-enumeration oracle accepts.
pub const ORACLE_MAX_SUPPORT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskParams<T> {
    kappa: T,
}

impl<T: Scalar> RiskParams<T> {
    pub fn new(kappa: T) -> Result<Self> {
        if !(kappa >= T::zero() && kappa <= T::one()) {
            return Err(Error::Config(format!("kappa must lie in [0, 1], got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }
}

/// Random variable on a finite sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution<T> {
    values: Vec<T>,
    probs: Vec<T>,
}

impl<T: Scalar> FiniteDistribution<T> {
    pub fn new(values: Vec<T>, probs: Vec<T>) -> Result<Self> {
        check_dim(values.len(), probs.len())?;
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        if probs.iter().any(|&p| !(p >= T::zero())) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "probabilities must be nonnegative and values finite".into(),
            ));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { values, probs })
    }

    pub fn uniform(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        let p = T::one() / T::from_usize_lossy(values.len());
        let probs = vec![p; values.len()];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value".into()));
        }
        Ok(Self { values, probs })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> T {
        dot(&self.values, &self.probs)
    }

    /// `E[max(0, Z - E Z)]`
    pub fn upper_semideviation(&self) -> T {
        let m = self.mean();
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(&z, &p)| p * (z - m).max(T::zero()))
            .sum()
    }
}

/// `E[Z] + kappa * E[max(0, Z - E[Z])]`
pub fn mean_semideviation<T: Scalar>(d: &FiniteDistribution<T>, rp: RiskParams<T>) -> T {
    d.mean() + rp.kappa * d.upper_semideviation()
}

/// Best vertex `xi` of `{0, kappa}^n` and its value `E[Z (1 + xi - E xi)]`.
fn best_vertex<T: Scalar>(d: &FiniteDistribution<T>, rp: RiskParams<T>) -> Result<(u32, T)> {
    let n = d.len();
    if n > ORACLE_MAX_SUPPORT {
        return Err(Error::Capacity(format!(
            "oracle enumerates 2^n vertices; support {n} exceeds {ORACLE_MAX_SUPPORT}"
        )));
    }
    let k = rp.kappa;
    let ez = d.mean();
    let mut best = (0u32, ez);
    for mask in 1u32..(1u32 << n) {
        // E[Z xi] - E[Z] E[xi]
        let mut ezxi = T::zero();
        let mut exi = T::zero();
        for i in 0..n {
            if mask & (1 << i) != 0 {
                ezxi += d.probs[i] * d.values[i] * k;
                exi += d.probs[i] * k;
            }
        }
        let v = ez + ezxi - ez * exi;
        if v > best.1 {
            best = (mask, v);
        }
    }
    Ok(best)
}

/// Dual representation evaluated by brute force: the maximum over the
/// vertices `xi in {0, kappa}^n` of `E[Z (1 + xi - E[xi])]`. A linear
/// functional over a box attains its maximum at a vertex, so this is exact.
pub fn dual_value_oracle<T: Scalar>(d: &FiniteDistribution<T>, rp: RiskParams<T>) -> Result<T> {
    Ok(best_vertex(d, rp)?.1)
}

/// Maximizing density `mu = 1 + xi - E[xi]` of the ambiguity set. With ties
/// the lowest vertex in enumeration order wins.
pub fn worst_case_distortion<T: Scalar>(d: &FiniteDistribution<T>, rp: RiskParams<T>) -> Result<Vec<T>> {
    let (mask, _) = best_vertex(d, rp)?;
    let xi: Vec<T> = (0..d.len())
        .map(|i| if mask & (1 << i) != 0 { rp.kappa } else { T::zero() })
        .collect();
    let exi = dot(&xi, &d.probs);
    Ok(xi.into_iter().map(|v| T::one() + v - exi).collect())
}

/// `h(x)`: empirical mean loss.
pub fn inner_value<T: Scalar>(spec: &LossSpec<T>, x: &[T], ds: &Dataset<T>) -> Result<T> {
    spec.mean_loss(x, ds)
}

/// `f(x, u) = E[u + kappa * max(0, l(x, D) - u)]` under the empirical law.
pub fn outer_value<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    u: T,
    ds: &Dataset<T>,
    rp: RiskParams<T>,
) -> Result<T> {
    let losses = spec.losses(x, ds)?;
    let n = T::from_usize_lossy(losses.len());
    let excess: T = losses.iter().map(|&l| (l - u).max(T::zero())).sum();
    Ok(u + rp.kappa * excess / n)
}

/// `F(x) = f(x, h(x))`, the mean-semideviation of the empirical loss.
pub fn composite_objective<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    ds: &Dataset<T>,
    rp: RiskParams<T>,
) -> Result<T> {
    let losses = spec.losses(x, ds)?;
    Ok(mean_semideviation(&FiniteDistribution::uniform(losses)?, rp))
}

/// Value of `F` at `x` together with one Clarke subgradient.
///
/// `F = (1 - kappa) h + kappa E[max(h, l)]`; the selection takes the loss
/// subgradient on points strictly above the mean, the mean subgradient below,
/// and the midpoint of the two on ties.
pub fn composite_value_and_subgradient<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    ds: &Dataset<T>,
    rp: RiskParams<T>,
) -> Result<(T, ParameterVector<T>)> {
    check_dim(ds.dim(), x.len())?;
    let n = ds.len();
    let mut base = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for d in ds {
        let (v, s) = spec.base().eval_score(dot(&d.features, x), d.target);
        base.push(v);
        slopes.push(s);
    }
    let p = T::one() / T::from_usize_lossy(n);
    let mean_base: T = base.iter().copied().sum::<T>() * p;
    let k = rp.kappa();
    let mut semidev = T::zero();
    let mut above = T::zero();
    let gates: Vec<T> = base
        .iter()
        .map(|&v| {
            let gap = v - mean_base;
            semidev += p * gap.max(T::zero());
            let gate = if gap > T::zero() {
                T::one()
            } else if gap < T::zero() {
                T::zero()
            } else {
                T::half()
            };
            above += p * gate;
            gate
        })
        .collect();
    let mut g = vec![T::zero(); x.len()];
    for ((d, &s), &gate) in ds.iter().zip(&slopes).zip(&gates) {
        let w = p * (T::one() - k * above + k * gate) * s;
        for (gi, &ai) in g.iter_mut().zip(&d.features) {
            *gi += w * ai;
        }
    }
    spec.penalty().add_subgradient(x, T::one(), &mut g);
    let value = mean_base + spec.penalty().value(x) + k * semidev;
    Ok((value, ParameterVector::new(g)))
}

//! Plain projected stochastic subgradient descent on the mean loss.
//!
//! Written independently of the compositional methods. It draws its single
//! sample per step from the same substream the compositional methods use for
//! `D2`, so with `kappa = 0` all three produce identical trajectories.

use crate::constraint::{BoxConstraint, FeasibleSet};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::LossSpec;
use crate::rng::{streams, RngStream};
use crate::scalar::Scalar;
use crate::vector::ParameterVector;

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientConfig<T> {
    pub tau: T,
    pub iters: usize,
    pub feasible: BoxConstraint<T>,
    pub x0: Option<ParameterVector<T>>,
}

/// Returns every iterate `x^0..=x^N` and the output `x^R`.
pub fn projected_subgradient<T: Scalar>(
    cfg: &SubgradientConfig<T>,
    spec: &LossSpec<T>,
    ds: &Dataset<T>,
    rng: &RngStream,
) -> Result<(Vec<ParameterVector<T>>, ParameterVector<T>)> {
    if !(cfg.tau > T::zero()) || cfg.iters == 0 {
        return Err(Error::Config("need tau > 0 and at least one iteration".into()));
    }
    let mut stream = rng.substream(streams::INNER_GRAD);
    let r = rng.substream(streams::OUTPUT).index(cfg.iters);
    let start = cfg.x0.clone().unwrap_or_else(|| ParameterVector::zeros(ds.dim()));
    let mut x = cfg.feasible.project(&start)?;
    let mut path = Vec::with_capacity(cfg.iters + 1);
    path.push(x.clone());
    for k in 0..cfg.iters {
        let d = stream.sample(ds);
        let g = spec.subgradient(&x, d)?;
        if !g.is_finite() {
            return Err(Error::NonFinite {
                iteration: k,
                what: "subgradient".into(),
            });
        }
        for (xi, &gi) in x.as_mut_slice().iter_mut().zip(g.iter()) {
            *xi -= cfg.tau * gi;
        }
        x = cfg.feasible.project(&x)?;
        path.push(x.clone());
    }
    let out = path[r].clone();
    Ok((path, out))
}

//! Compositional subgradient method with a SPIDER estimate of the inner
//! value, for weakly convex losses that need not be smooth.
//!
//! The tracker restarts from a large batch every `epoch` iterations and is
//! otherwise refreshed with the path-integrated difference over a small
//! batch:
//!
//! ```text
//! u^k = l_B(x^k)                                  if k mod T == 0, |B| = B
//! u^k = u^{k-1} + l_B(x^k) - l_B(x^{k-1})         otherwise,       |B| = b
//! ```
//!
//! The `x` update is the gated step of [`crate::scs`] without the Jacobian
//! term.

use crate::constraint::{BoxConstraint, FeasibleSet};
use crate::data::{DataPoint, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::models::LossSpec;
use crate::risk::RiskParams;
use crate::rng::{streams, RngStream};
use crate::scalar::Scalar;
use crate::scs::{gate, initial_point, projected_move, record_row, validate_common};
use crate::trace::{RunTrace, TraceOptions};
use crate::vector::{norm, ParameterVector};

/// Epoch length and the two batch sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpiderParams {
    pub epoch: usize,
    pub big_batch: usize,
    pub small_batch: usize,
}

impl SpiderParams {
    pub fn new(epoch: usize, big_batch: usize, small_batch: usize) -> Result<Self> {
        if epoch == 0 || small_batch == 0 || big_batch < small_batch {
            return Err(Error::Config(format!(
                "need T >= 1 and B >= b >= 1, got T={epoch}, B={big_batch}, b={small_batch}"
            )));
        }
        Ok(Self {
            epoch,
            big_batch,
            small_batch,
        })
    }

    /// Average samples per iteration spent on the tracker.
    pub fn samples_per_iter(&self) -> f64 {
        (self.big_batch as f64 + (self.epoch - 1) as f64 * self.small_batch as f64) / self.epoch as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpiderConfig<T> {
    pub tau: T,
    pub iters: usize,
    pub params: SpiderParams,
    pub risk: RiskParams<T>,
    pub feasible: BoxConstraint<T>,
    pub seed: u64,
    pub x0: Option<ParameterVector<T>>,
    pub trace: TraceOptions,
}

impl<T: Scalar> SpiderConfig<T> {
    pub fn new(
        tau: T,
        iters: usize,
        params: SpiderParams,
        risk: RiskParams<T>,
        feasible: BoxConstraint<T>,
        seed: u64,
    ) -> Self {
        Self {
            tau,
            iters,
            params,
            risk,
            feasible,
            seed,
            x0: None,
            trace: TraceOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(self.tau, self.iters)?;
        SpiderParams::new(self.params.epoch, self.params.big_batch, self.params.small_batch)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpiderState<T> {
    pub x: ParameterVector<T>,
    pub x_prev: ParameterVector<T>,
    pub u: T,
    pub k: usize,
}

/// Batch sizes and epoch length that make the expected tracking error at most
/// `tau`: `B = 2 sigma^2 / tau^2`, `b = 2 L M sigma / tau`,
/// `T = sigma / (L M tau)`, each rounded up and floored at one.
pub fn auto_params<T: Scalar>(sigma: T, lipschitz: T, m: T, tau: T) -> Result<SpiderParams> {
    for (name, v) in [("sigma", sigma), ("L", lipschitz), ("M", m), ("tau", tau)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let ceil = |v: T| -> Result<usize> {
        let c = v.ceil().max(T::one());
        c.to_usize()
            .ok_or_else(|| Error::Capacity(format!("batch parameter {v} does not fit in usize")))
    };
    let big = ceil(T::two() * sigma * sigma / (tau * tau))?;
    let small = ceil(T::two() * lipschitz * m * sigma / tau)?;
    let epoch = ceil(sigma / (lipschitz * m * tau))?;
    // B >= b is part of the contract; with these formulas it can only fail
    // through rounding when sigma is tiny relative to L M tau.
    Ok(SpiderParams {
        epoch,
        big_batch: big.max(small),
        small_batch: small,
    })
}

/// `l_B(x)`: mean loss over the batch.
pub fn restart_tracker<T: Scalar>(spec: &LossSpec<T>, x: &[T], batch: &[&DataPoint<T>]) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty restart batch".into()));
    }
    spec.mean_loss(x, batch.iter().copied())
}

/// `u_prev + l_B(x) - l_B(x_prev)`
pub fn refresh_tracker<T: Scalar>(
    spec: &LossSpec<T>,
    u_prev: T,
    x: &[T],
    x_prev: &[T],
    batch: &[&DataPoint<T>],
) -> Result<T> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty refresh batch".into()));
    }
    check_dim(x.len(), x_prev.len())?;
    let mut diff = T::zero();
    for d in batch {
        diff += spec.base_eval(x, d)?.0 - spec.base_eval(x_prev, d)?.0;
    }
    let pen = spec.penalty().value(x) - spec.penalty().value(x_prev);
    Ok(u_prev + diff / T::from_usize_lossy(batch.len()) + pen)
}

fn draw<'a, T: Scalar>(ds: &'a Dataset<T>, rng: &mut RngStream, n: usize) -> Vec<&'a DataPoint<T>> {
    (0..n).map(|_| rng.sample(ds)).collect()
}

pub fn run<T: Scalar>(
    cfg: &SpiderConfig<T>,
    spec: &LossSpec<T>,
    ds: &Dataset<T>,
    rng: &RngStream,
) -> Result<(RunTrace<T>, ParameterVector<T>)> {
    cfg.validate()?;
    let kappa = cfg.risk.kappa();
    let p = cfg.params;
    let x0 = initial_point(&cfg.feasible, cfg.x0.as_ref(), ds.dim())?;

    let mut s_gate = rng.substream(streams::GATE);
    let mut s_grad = rng.substream(streams::INNER_GRAD);
    let mut s_batch = rng.substream(streams::BATCH);
    let r = rng.substream(streams::OUTPUT).index(cfg.iters);

    let mut state = SpiderState {
        x_prev: x0.clone(),
        x: x0,
        u: T::zero(),
        k: 0,
    };
    let mut trace = RunTrace {
        output_index: r,
        ..Default::default()
    };
    let mut output = None;
    for k in 0..cfg.iters {
        let restart = k % p.epoch == 0;
        let batch_size = if restart { p.big_batch } else { p.small_batch };
        let batch = draw(ds, &mut s_batch, batch_size);
        state.u = if restart {
            restart_tracker(spec, &state.x, &batch)?
        } else {
            refresh_tracker(spec, state.u, &state.x, &state.x_prev, &batch)?
        };
        if !state.u.is_finite() {
            return Err(Error::NonFinite {
                iteration: k,
                what: "inner tracker".into(),
            });
        }
        if k == r {
            output = Some(state.x.clone());
        }
        if cfg.trace.snapshots(k) {
            trace.checkpoints.push((k, state.x.clone()));
        }

        let d1 = s_gate.sample(ds);
        let d2 = s_grad.sample(ds);
        let (_, _, g_fx, g_fu, _) = gate(spec, &state.x, state.u, kappa, d1)?;
        let g_h = spec.subgradient(&state.x, d2)?.into_inner();
        let dir: Vec<T> = if g_fu == T::one() {
            g_h
        } else {
            g_fx.iter().zip(&g_h).map(|(&fx, &gh)| fx + g_fu * gh).collect()
        };
        let next = projected_move(&cfg.feasible, &state.x, cfg.tau, &dir, k)?;
        if cfg.trace.records(k) {
            let mut row = record_row(spec, ds, cfg.risk, k, &state.x, state.u, &next)?;
            row.epoch = Some(k / p.epoch);
            row.batch_size = Some(batch_size);
            trace.rows.push(row);
        }
        state.x_prev = std::mem::replace(&mut state.x, next);
        state.k = k + 1;
    }
    Ok((trace, output.expect("R < iters")))
}

/// Pilot estimates of the constants the SPIDER schedule needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimates<T> {
    /// Standard deviation of the loss at `x0`.
    pub sigma: T,
    /// Lipschitz constant of the loss over the box (inflated by 1.5).
    pub lipschitz: T,
    /// Bound on the norm of the stochastic step direction.
    pub m: T,
}

/// Smallest `sigma` reported for a degenerate pilot.
pub fn sigma_floor<T: Scalar>() -> T {
    T::epsilon().sqrt()
}

/// Estimates `(sigma, L, M)` from `pilot` draws.
///
/// `M^2 = (D_fx + D_h)^2 + 2 s^2 + 2 s D_h` with `D_h` the largest sampled
/// subgradient norm, `D_fx = kappa D_h`, and `s` the larger of the loss and
/// the subgradient standard deviations.
pub fn estimate_constants<T: Scalar>(
    spec: &LossSpec<T>,
    ds: &Dataset<T>,
    feasible: &BoxConstraint<T>,
    risk: RiskParams<T>,
    x0: &ParameterVector<T>,
    rng: &RngStream,
    pilot: usize,
) -> Result<ConstantEstimates<T>> {
    if pilot < 16 {
        return Err(Error::InvalidArgument(format!(
            "pilot must be at least 16, got {pilot}"
        )));
    }
    let mut s = rng.substream(streams::PILOT);
    let batch = draw(ds, &mut s, pilot);
    estimate_constants_on(spec, &batch, feasible, risk, x0, &mut s)
}

/// As [`estimate_constants`] over an explicit batch.
pub fn estimate_constants_on<T: Scalar>(
    spec: &LossSpec<T>,
    batch: &[&DataPoint<T>],
    feasible: &BoxConstraint<T>,
    risk: RiskParams<T>,
    x0: &ParameterVector<T>,
    rng: &mut RngStream,
) -> Result<ConstantEstimates<T>> {
    if batch.len() < 2 {
        return Err(Error::InvalidArgument("pilot batch too small".into()));
    }
    check_dim(feasible.dim(), x0.len())?;
    let n = T::from_usize_lossy(batch.len());

    let mut losses = Vec::with_capacity(batch.len());
    let mut grads = Vec::with_capacity(batch.len());
    for d in batch {
        let (l, g) = spec.value_and_subgradient(x0, d)?;
        losses.push(l);
        grads.push(g.into_inner());
    }
    let mean = losses.iter().copied().sum::<T>() / n;
    let var = losses.iter().map(|&l| (l - mean) * (l - mean)).sum::<T>() / (n - T::one());
    let sigma = var.sqrt().max(sigma_floor());

    let dim = x0.len();
    let mut gmean = vec![T::zero(); dim];
    for g in &grads {
        for (m, &v) in gmean.iter_mut().zip(g) {
            *m += v / n;
        }
    }
    let gvar = grads
        .iter()
        .map(|g| g.iter().zip(&gmean).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>())
        .sum::<T>()
        / (n - T::one());

    let mut delta = grads.iter().map(|g| norm(g)).fold(T::zero(), T::max);
    let mut lip = T::zero();
    let h = feasible.diameter().max(T::one()) * T::lit(1e-3);
    for d in batch {
        let x: ParameterVector<T> = feasible
            .lower()
            .iter()
            .zip(feasible.upper())
            .map(|(&l, &u)| rng.uniform(l, u))
            .collect();
        let (lx, g) = spec.value_and_subgradient(&x, d)?;
        let gn = g.norm();
        delta = delta.max(gn);
        // steepest direction, then a random partner
        let mut partners = Vec::with_capacity(2);
        if gn > T::zero() {
            let mut y = x.clone();
            y.axpy(h / gn, &g)?;
            partners.push(feasible.project(&y)?);
        }
        partners.push(
            feasible
                .lower()
                .iter()
                .zip(feasible.upper())
                .map(|(&l, &u)| rng.uniform(l, u))
                .collect(),
        );
        for y in partners {
            let dist = x.distance(&y)?;
            if dist > T::zero() {
                let ly = spec.value(&y, d)?;
                lip = lip.max((lx - ly).abs() / dist);
            }
        }
    }
    let lipschitz = (lip * T::lit(1.5))
        .max(spec.penalty().lipschitz(dim))
        .max(sigma_floor());

    let s_m = sigma.max(gvar.sqrt());
    let d_fx = risk.kappa() * delta;
    let m2 = (d_fx + delta) * (d_fx + delta) + T::two() * s_m * s_m + T::two() * s_m * delta;
    Ok(ConstantEstimates {
        sigma,
        lipschitz,
        m: m2.sqrt().max(sigma_floor()),
    })
}

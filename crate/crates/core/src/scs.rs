//! Stochastic compositional subgradient method with linearized tracking of
//! the inner value `h(x) = E[l(x, D)]`.
//!
//! Each iteration draws three independent samples `D1, D2, D3`. `D1` decides
//! whether the sampled loss sits above the tracker `u` (the gate) and
//! supplies `G`; `D2` supplies the inner gradient; `D3` supplies the
//! Jacobian used to carry `u` along with the move in `x`:
//!
//! ```text
//! x+ = P_X(x - tau (kappa I G + (1 - kappa I) g_h))
//! u+ = u + tau (h~ - u) + <J, x+ - x>
//! ```

use crate::constraint::{BoxConstraint, FeasibleSet};
use crate::data::{DataPoint, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::models::LossSpec;
use crate::risk::{composite_objective, inner_value, RiskParams};
use crate::rng::{streams, RngStream};
use crate::scalar::Scalar;
use crate::trace::{RunTrace, TraceOptions, TraceRow};
use crate::vector::{distance, ParameterVector};

/// Samples averaged to initialize the tracker.
pub const PILOT_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ScsConfig<T> {
    pub tau: T,
    pub iters: usize,
    pub risk: RiskParams<T>,
    pub feasible: BoxConstraint<T>,
    pub seed: u64,
    /// Initial guess, projected onto the box. Zero when absent.
    pub x0: Option<ParameterVector<T>>,
    pub trace: TraceOptions,
}

impl<T: Scalar> ScsConfig<T> {
    pub fn new(tau: T, iters: usize, risk: RiskParams<T>, feasible: BoxConstraint<T>, seed: u64) -> Self {
        Self {
            tau,
            iters,
            risk,
            feasible,
            seed,
            x0: None,
            trace: TraceOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_common(self.tau, self.iters)
    }
}

pub(crate) fn validate_common<T: Scalar>(tau: T, iters: usize) -> Result<()> {
    if !(tau > T::zero() && tau <= T::one()) {
        return Err(Error::Config(format!("tau must lie in (0, 1], got {tau}")));
    }
    if iters == 0 {
        return Err(Error::Config("iteration count must be positive".into()));
    }
    Ok(())
}

pub(crate) fn initial_point<T: Scalar>(
    feasible: &BoxConstraint<T>,
    x0: Option<&ParameterVector<T>>,
    dim: usize,
) -> Result<ParameterVector<T>> {
    check_dim(feasible.dim(), dim)?;
    match x0 {
        Some(x) => feasible.project(x),
        None => feasible.project(&ParameterVector::zeros(dim)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScsState<T> {
    pub x: ParameterVector<T>,
    pub u: T,
    pub k: usize,
}

/// Stochastic estimates of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedEstimates<T> {
    /// Subgradient of the loss at `D1`.
    pub g: Vec<T>,
    /// `kappa * I * G`
    pub g_fx: Vec<T>,
    /// `1 - kappa * I`
    pub g_fu: T,
    /// Subgradient of the loss at `D2`.
    pub g_h: Vec<T>,
    /// Subgradient of the loss at `D3`; empty when tracking does not use it.
    pub j: Vec<T>,
    pub h_tilde: T,
    /// `l(x, D1) >= u`
    pub indicator: bool,
}

impl<T: Scalar> GatedEstimates<T> {
    /// `g_fx + g_fu * g_h`. With the gate closed, or `kappa = 0`, this is
    /// `g_h` itself.
    pub fn direction(&self) -> Vec<T> {
        if self.g_fu == T::one() {
            return self.g_h.clone();
        }
        self.g_fx
            .iter()
            .zip(&self.g_h)
            .map(|(&fx, &gh)| fx + self.g_fu * gh)
            .collect()
    }
}

/// `(l(x, D1), subgradient, g_fx, g_fu, indicator)`
type Gate<T> = (T, Vec<T>, Vec<T>, T, bool);

/// Gate decision and `(loss, subgradient)` at `D1`.
pub(crate) fn gate<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    u: T,
    kappa: T,
    d1: &DataPoint<T>,
) -> Result<Gate<T>> {
    let (l1, g) = spec.value_and_subgradient(x, d1)?;
    let g = g.into_inner();
    let indicator = l1 >= u;
    let (g_fx, g_fu) = if indicator {
        (g.iter().map(|&v| kappa * v).collect(), T::one() - kappa)
    } else {
        (vec![T::zero(); g.len()], T::one())
    };
    Ok((l1, g, g_fx, g_fu, indicator))
}

pub fn gated_estimates<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    u: T,
    kappa: T,
    d1: &DataPoint<T>,
    d2: &DataPoint<T>,
    d3: &DataPoint<T>,
) -> Result<GatedEstimates<T>> {
    let (l1, g, g_fx, g_fu, indicator) = gate(spec, x, u, kappa, d1)?;
    let (l2, g_h) = spec.value_and_subgradient(x, d2)?;
    let (l3, j) = spec.value_and_subgradient(x, d3)?;
    Ok(GatedEstimates {
        g,
        g_fx,
        g_fu,
        g_h: g_h.into_inner(),
        j: j.into_inner(),
        h_tilde: (l1 + l2 + l3) / T::lit(3.0),
        indicator,
    })
}

/// Projected move `P_X(x - tau * direction)`, checked for finiteness.
pub(crate) fn projected_move<T: Scalar>(
    feasible: &BoxConstraint<T>,
    x: &ParameterVector<T>,
    tau: T,
    direction: &[T],
    k: usize,
) -> Result<ParameterVector<T>> {
    if direction.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            iteration: k,
            what: "search direction".into(),
        });
    }
    let mut next = x.clone();
    for (xi, &d) in next.as_mut_slice().iter_mut().zip(direction) {
        *xi -= tau * d;
    }
    feasible.project_in_place(next.as_mut_slice())?;
    Ok(next)
}

pub fn step<T: Scalar>(
    cfg: &ScsConfig<T>,
    state: &ScsState<T>,
    est: &GatedEstimates<T>,
) -> Result<ScsState<T>> {
    let dir = est.direction();
    let x_next = projected_move(&cfg.feasible, &state.x, cfg.tau, &dir, state.k)?;
    let mut lin = T::zero();
    for ((&j, &a), &b) in est.j.iter().zip(x_next.iter()).zip(state.x.iter()) {
        lin += j * (a - b);
    }
    let u = state.u + cfg.tau * (est.h_tilde - state.u) + lin;
    if !u.is_finite() {
        return Err(Error::NonFinite {
            iteration: state.k,
            what: "inner tracker".into(),
        });
    }
    Ok(ScsState {
        x: x_next,
        u,
        k: state.k + 1,
    })
}

/// Records a trace row for iterate `x^k` once the step out of it is known.
pub(crate) fn record_row<T: Scalar>(
    spec: &LossSpec<T>,
    ds: &Dataset<T>,
    risk: RiskParams<T>,
    k: usize,
    x: &[T],
    u: T,
    x_next: &[T],
) -> Result<TraceRow<T>> {
    Ok(TraceRow {
        k,
        f_hat: composite_objective(spec, x, ds, risk)?,
        u,
        h: inner_value(spec, x, ds)?,
        step_norm: distance(x, x_next),
        epoch: None,
        batch_size: None,
    })
}

/// Runs the method for `cfg.iters` iterations. Returns the trace and `x^R`,
/// `R` uniform on `0..iters`.
pub fn run<T: Scalar>(
    cfg: &ScsConfig<T>,
    spec: &LossSpec<T>,
    ds: &Dataset<T>,
    rng: &RngStream,
) -> Result<(RunTrace<T>, ParameterVector<T>)> {
    cfg.validate()?;
    let kappa = cfg.risk.kappa();
    let x0 = initial_point(&cfg.feasible, cfg.x0.as_ref(), ds.dim())?;

    let mut s_gate = rng.substream(streams::GATE);
    let mut s_grad = rng.substream(streams::INNER_GRAD);
    let mut s_jac = rng.substream(streams::JACOBIAN);
    let mut s_pilot = rng.substream(streams::PILOT);
    let r = rng.substream(streams::OUTPUT).index(cfg.iters);

    let pilot: Vec<&DataPoint<T>> = (0..PILOT_BATCH).map(|_| s_pilot.sample(ds)).collect();
    let u0 = spec.mean_loss(&x0, pilot)?;

    let mut state = ScsState { x: x0, u: u0, k: 0 };
    let mut trace = RunTrace {
        output_index: r,
        ..Default::default()
    };
    let mut output = None;
    for k in 0..cfg.iters {
        if k == r {
            output = Some(state.x.clone());
        }
        if cfg.trace.snapshots(k) {
            trace.checkpoints.push((k, state.x.clone()));
        }
        let d1 = s_gate.sample(ds);
        let d2 = s_grad.sample(ds);
        let d3 = s_jac.sample(ds);
        let est = gated_estimates(spec, &state.x, state.u, kappa, d1, d2, d3)?;
        let next = step(cfg, &state, &est)?;
        if cfg.trace.records(k) {
            trace
                .rows
                .push(record_row(spec, ds, cfg.risk, k, &state.x, state.u, &next.x)?);
        }
        state = next;
    }
    Ok((trace, output.expect("R < iters")))
}

//! Mean-semideviation risk minimisation for linear models.
//!
//! The objective is `F(x) = rho[l(x, D)]` with
//! `rho[Z] = E Z + kappa E (Z - E Z)_+`, minimised over a box by one of two
//! stochastic compositional subgradient methods ([`scs`], [`spider`]).
//! [`stationarity`] measures near-stationarity through the Moreau envelope and
//! [`robusteval`] scores trained models under test-time attacks.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix `f64`.

// Checks are written `!(v > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod constraint;
pub mod data;
pub mod error;
pub mod models;
pub mod risk;
pub mod rng;
pub mod robusteval;
pub mod scalar;
pub mod scs;
pub mod spider;
pub mod stationarity;
pub mod trace;
pub mod vector;

pub use constraint::{BoxConstraint, FeasibleSet};
pub use data::{DataPoint, Dataset};
pub use error::{Error, Result};
pub use models::{BaseLoss, LossSpec, Penalty, PenaltyKind, PenaltyParams};
pub use risk::{FiniteDistribution, RiskParams};
pub use rng::RngStream;
pub use scalar::Scalar;
pub use vector::ParameterVector;

pub type Vector = ParameterVector<f64>;
pub type Box64 = BoxConstraint<f64>;
pub type Point = DataPoint<f64>;
pub type Data = Dataset<f64>;
pub type Loss = LossSpec<f64>;
pub type Risk = RiskParams<f64>;
pub type Distribution = FiniteDistribution<f64>;
pub type Trace = trace::RunTrace<f64>;
pub type ScsConfig = scs::ScsConfig<f64>;
pub type SpiderConfig = spider::SpiderConfig<f64>;
pub type Probe = stationarity::MoreauProbe<f64>;
pub type Report = stationarity::StationarityReport<f64>;
pub type Attack = robusteval::AttackConfig<f64>;

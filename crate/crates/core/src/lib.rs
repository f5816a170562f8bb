//! Over-parametrized deep regression with parallel logistic blocks.
//!
//! The estimator is a linear combination of `K` independent, fully connected
//! logistic-squasher networks of depth `L` and width `r`. All outer weights
//! start at zero, inner weights are drawn uniformly from `[-B, B]` and input
//! weights from `[-A, A]`. The network is then fitted by plain full-batch
//! gradient descent on the empirical L2 risk, either with a fixed
//! stepsize/step budget or with the doubling schedule in [`training`], which
//! picks the stepsize and the number of steps from the data.
//!
//! Besides the estimator the crate carries the pieces needed to evaluate it:
//!
//! - [`simulation`]: the univariate synthetic regression model, exact L2
//!   errors by piecewise Gauss-Legendre quadrature, and a replication harness
//!   that reports medians and IQRs.
//! - [`selection`]: choice of the initialization bounds by sample splitting.
//! - [`baseline`]: a standard fully connected network trained with ADAM, used
//!   as the comparison estimate.
//! - [`experiments`]: the named experiment protocols and their CSV outputs.

// `!(x > 0.0)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod baseline;
pub mod data;
pub mod error;
pub mod experiments;
pub mod gradient;
mod linalg;
pub mod network;
pub mod quadrature;
pub mod rng;
pub mod selection;
pub mod simulation;
pub mod stats;
pub mod training;

pub use data::Dataset;
pub use error::{Error, Result};
pub use network::{Architecture, InitBounds, WeightIndex, WeightVector};
pub use rng::SeedStream;
pub use training::{ScheduleConfig, ScheduleOutcome, StopReason};

/// Default truncation multiplier: the estimate is clamped to `[-c12 ln n, c12 ln n]`.
pub const DEFAULT_C12: f64 = 10.0;

/// Truncation level `beta_n = c12 * ln(n)`.
pub fn truncation_level(c12: f64, n: usize) -> f64 {
    c12 * (n as f64).ln()
}

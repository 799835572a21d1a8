//! Bivariate Hawkes processes for limit-order-book event streams.
//!
//! The crate models buy and sell order arrivals as a two-component
//! self- and cross-exciting point process with either exponential or
//! power-law excitation kernels:
//!
//! ```text
//! λ_i(t) = μ_i + Σ_j Σ_{t_k^j < t} φ_ij(t − t_k^j),   i, j ∈ {Buy, Sell}
//! φ(τ) = α·exp(−β·τ)          (exponential)
//! φ(τ) = α / (τ + ε)^β        (power law)
//! ```
//!
//! On top of the model it provides maximum-likelihood fitting under box
//! bounds, thinning simulation, time-rescaling goodness-of-fit tests,
//! AIC-based kernel comparison and an event-driven backtest of a
//! clustering-based liquidity-provision strategy.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimate;
pub mod event_data;
pub mod kernels;
pub mod model;
pub mod optim;
pub mod simulate;
pub mod strategy;

pub use error::{Error, Result};
pub use event_data::{Event, EventStream, IngestConfig, Side};
pub use kernels::{KernelKind, KernelSpec};
pub use model::{HawkesModel, IntensitySample};

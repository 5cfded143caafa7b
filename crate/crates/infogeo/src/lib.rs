//! # infogeo
//!
//! Alternating minimization of Kullback–Leibler divergence between a
//! *data* set of distributions (everything consistent with the
//! observations) and a *model* set (the parametric family), iterated as
//! e-projections onto the data side and m-projections onto the model
//! side. Each round moves the joint divergence monotonically, and every
//! fitting routine here returns the per-iteration [`Trace`] so that the
//! monotone guarantee can be checked rather than trusted.
//!
//! ## Modules
//!
//! | Module | Problem | Monotone quantity |
//! |--------|---------|-------------------|
//! | [`simplex`] | KL divergence, e/m-geodesics, projection diagnostics | — |
//! | [`bregman`] | U-function family and Bregman (u-) divergences | — |
//! | [`gmm`] | Gaussian mixture EM | joint divergence ↓ |
//! | [`channel`] | Discrete memoryless channel capacity (Arimoto) | mutual information ↑ |
//! | [`ranking`] | Bradley–Terry preference estimation | mean divergence to data manifolds ↓ |
//! | [`modal_regression`] | Modal linear regression | kernel objective ↑ |
//! | [`epca`] | e-PCA / m-PCA over exponential-family points | reconstruction divergence ↓ |
//! | [`boltzmann`] | Exact small-scale Boltzmann machine learning | bilevel divergence ↓ |
//!
//! ## Precision
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`) with
//! `f64` as the default type parameter, so `ProbabilityVector` written
//! without parameters is the double-precision type. The tolerances
//! quoted in the docs assume `f64`.

pub mod boltzmann;
pub mod bregman;
pub mod channel;
pub mod epca;
mod error;
pub mod gmm;
mod linalg;
pub mod modal_regression;
pub mod ranking;
mod scalar;
pub mod simplex;
mod trace;

pub use error::{Error, Result};
pub use scalar::{kahan_sum, log_sum_exp, KahanSum, Scalar};
pub use simplex::{
    e_interpolate, kl_divergence, m_interpolate, normalize, pythagorean_residual, GeodesicParam,
    ProbabilityVector,
};
pub use trace::{Direction, EmConfig, Trace, TraceRecord};

/// Double-precision aliases for the most commonly passed-around types.
pub type ProbVec64 = ProbabilityVector<f64>;
pub type Channel64 = channel::DiscreteChannel<f64>;
pub type Trace64 = Trace<f64>;

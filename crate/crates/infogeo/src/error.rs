//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the estimation routines.
///
/// Numeric payloads are carried as `f64` regardless of the working
/// precision; they are for diagnostics only.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("non-finite entry at index {0}")]
    NonFiniteEntry(usize),

    #[error("entries sum to {sum}, not 1 within tolerance")]
    NotNormalized { sum: f64 },

    #[error("vector has no positive mass")]
    ZeroMass,

    #[error("infinite divergence (absolute-continuity violation) at index {0}")]
    AbsoluteContinuity(usize),

    #[error("empty common support")]
    EmptySupport,

    #[error("supports disagree at index {0}: one side is zero, the other positive")]
    SupportMismatch(usize),

    #[error("interpolation parameter {0} outside [0, 1]")]
    ParamOutOfRange(f64),

    #[error("parameter {name} = {value} outside its domain ({requirement})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("value {value} at index {index} outside the u-representation domain ({requirement})")]
    URepresentationDomain {
        index: usize,
        value: f64,
        requirement: &'static str,
    },

    #[error("covariance matrix {index} is not symmetric positive definite")]
    NotPositiveDefinite { index: usize },

    #[error("all component densities vanished for observation {0}")]
    DensityUnderflow(usize),

    #[error("empty component {0}: responsibility column sums to zero")]
    EmptyComponent(usize),

    #[error("responsibility row {index} sums to {sum}, not 1 within tolerance")]
    InvalidResponsibilityRow { index: usize, sum: f64 },

    #[error("empty dataset")]
    EmptyData,

    #[error("pair ({i}, {j}) was never compared")]
    UnobservedPair { i: usize, j: usize },

    #[error("pair ({i}, {j}) has a one-sided count; enable smoothing or drop the pair")]
    ZeroRatioPair { i: usize, j: usize },

    #[error("comparison graph is disconnected: parameters unidentifiable across components")]
    DisconnectedComparisons,

    #[error("index {0} repeated in ranking")]
    RepeatedIndex(usize),

    #[error("item index {index} out of range for {size} items")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("rank-deficient weighted design")]
    RankDeficient,

    #[error("expectation parameter on the domain boundary at index {0}")]
    BoundaryEta(usize),

    #[error("reconstruction left the natural-parameter domain for point {0}")]
    OutOfDomainReconstruction(usize),

    #[error("enumeration bound exceeded: {units} units > 20")]
    EnumerationBound { units: usize },

    #[error("weights diverged: moment constraint sits on the family boundary")]
    WeightDivergence,

    #[error("empty input list")]
    EmptyList,
}

pub type Result<T> = std::result::Result<T, Error>;

//! Convergence traces and iteration configs shared by the fitting routines.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One record of a convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T: Scalar = f64> {
    /// Iteration counter, starting at 0 for the initial state.
    pub iteration: usize,
    /// The monotone quantity the owning algorithm guarantees.
    pub objective: T,
    /// Algorithm-specific extras (bounds, log-likelihoods, ...).
    pub extras: Vec<(&'static str, T)>,
}

impl<T: Scalar> TraceRecord<T> {
    pub fn new(iteration: usize, objective: T) -> Self {
        Self {
            iteration,
            objective,
            extras: Vec::new(),
        }
    }

    pub fn with_extra(mut self, key: &'static str, value: T) -> Self {
        self.extras.push((key, value));
        self
    }

    pub fn extra(&self, key: &str) -> Option<T> {
        self.extras.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

/// Ordered per-iteration records of the quantity an algorithm drives
/// monotonically, plus whether the stopping rule fired before the
/// iteration budget ran out.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T: Scalar = f64> {
    pub records: Vec<TraceRecord<T>>,
    pub converged: bool,
}

impl<T: Scalar> Trace<T> {
    pub fn new() -> Self {
        Self {
            records: Vec::new(),
            converged: false,
        }
    }

    pub fn push(&mut self, record: TraceRecord<T>) {
        debug_assert!(
            self.records
                .last()
                .map_or(record.iteration == 0, |r| record.iteration > r.iteration),
            "iterations must increase strictly from 0"
        );
        self.records.push(record);
    }

    pub fn objectives(&self) -> impl Iterator<Item = T> + '_ {
        self.records.iter().map(|r| r.objective)
    }

    pub fn last_objective(&self) -> Option<T> {
        self.records.last().map(|r| r.objective)
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    /// Checks that consecutive objectives never move against `direction`
    /// by more than `slack`.
    pub fn is_monotone(&self, direction: Direction, slack: T) -> bool {
        self.records.windows(2).all(|w| match direction {
            Direction::NonIncreasing => w[1].objective <= w[0].objective + slack,
            Direction::NonDecreasing => w[1].objective >= w[0].objective - slack,
        })
    }
}

impl<T: Scalar> Default for Trace<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Which way the traced objective is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

/// Stopping rule for the alternating-projection fits: quit once the
/// objective improves by less than `tol`, or after `max_iters` rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig<T: Scalar = f64> {
    pub tol: T,
    pub max_iters: usize,
}

impl<T: Scalar> EmConfig<T> {
    pub fn new(tol: T, max_iters: usize) -> Result<Self> {
        if !(tol > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "tol",
                value: tol.to_f64_lossy(),
                requirement: "tol > 0",
            });
        }
        Ok(Self { tol, max_iters })
    }
}

impl<T: Scalar> Default for EmConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::cast(1e-8),
            max_iters: 1000,
        }
    }
}

//! Geometry of the finite probability simplex.
//!
//! Distributions over a finite alphabet are the common currency of every
//! estimator in this crate. Two families of straight lines matter:
//!
//! - the *m-geodesic* `r(t) = (1-t) p + t q`, linear in the densities;
//! - the *e-geodesic*, linear in the log-densities up to normalization,
//!   `r_k(t) ∝ p_k^{1-t} q_k^t`.
//!
//! A set closed under m-geodesics (e-geodesics) between its members is
//! m-flat (e-flat). Minimizing `D(q, ·)` over an e-flat set, or `D(·, q)`
//! over an m-flat set, yields a unique projection point characterized by
//! geodesic orthogonality, which shows up numerically as the Pythagorean
//! identity `D(q, p) = D(q, mid) + D(mid, p)` through the projection
//! `mid`. [`pythagorean_residual`] measures the defect of that identity
//! and is the test harness for every projection routine downstream.
//!
//! All divergences are natural-log (nats). Conversion to bits is a
//! presentation concern and lives in the CLI.

use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, KahanSum, Scalar};

/// Relative slack accepted on the sum of a freshly constructed
/// probability vector. Anything within is silently renormalized;
/// anything beyond is rejected as a real bug.
///
/// 1e-12 absorbs f64 round-off from upstream arithmetic; for wider
/// epsilons (f32) the machine precision takes over.
fn construction_tol<T: Scalar>() -> T {
    let floor = T::epsilon() * T::cast(16.0);
    floor.max(T::cast(1e-12))
}

/// A point on the probability simplex over a finite alphabet.
///
/// Invariants: entries are nonnegative and sum to 1 within
/// construction tolerance (the constructor renormalizes the residual
/// round-off away).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector<T: Scalar = f64> {
    probs: Vec<T>,
}

impl<T: Scalar> ProbabilityVector<T> {
    /// Validates and renormalizes `probs` into a simplex point.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut sum = KahanSum::new();
        for (k, &v) in probs.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry(k));
            }
            if v < T::zero() {
                return Err(Error::NegativeEntry {
                    index: k,
                    value: v.to_f64_lossy(),
                });
            }
            sum.add(v);
        }
        let sum = sum.value();
        if (sum - T::one()).abs() > construction_tol() {
            return Err(Error::NotNormalized {
                sum: sum.to_f64_lossy(),
            });
        }
        let probs = probs.into_iter().map(|v| v / sum).collect();
        Ok(Self { probs })
    }

    /// The uniform distribution over `d` letters.
    pub fn uniform(d: usize) -> Self {
        assert!(d > 0, "empty alphabet");
        let w = T::one() / T::cast(d as f64);
        Self {
            probs: vec![w; d],
        }
    }

    /// A point mass on letter `index`.
    pub fn delta(d: usize, index: usize) -> Self {
        assert!(index < d, "index out of range");
        let mut probs = vec![T::zero(); d];
        probs[index] = T::one();
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.probs.iter()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    /// True when every entry is strictly positive.
    pub fn is_interior(&self) -> bool {
        self.probs.iter().all(|&v| v > T::zero())
    }

    /// Largest absolute entry difference against `other`.
    pub fn linf_distance(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(other.probs.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }
}

impl<T: Scalar> std::ops::Index<usize> for ProbabilityVector<T> {
    type Output = T;
    fn index(&self, index: usize) -> &T {
        &self.probs[index]
    }
}

/// Interpolation parameter of a geodesic, confined to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicParam<T: Scalar = f64>(T);

impl<T: Scalar> GeodesicParam<T> {
    pub fn new(t: T) -> Result<Self> {
        if t.is_finite() && t >= T::zero() && t <= T::one() {
            Ok(Self(t))
        } else {
            Err(Error::ParamOutOfRange(t.to_f64_lossy()))
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

fn check_same_dim<T: Scalar>(p: &ProbabilityVector<T>, q: &ProbabilityVector<T>) -> Result<()> {
    if p.len() == q.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(p.len(), q.len()))
    }
}

/// Kullback–Leibler divergence `D(p, q) = Σ_k p_k log(p_k / q_k)` in nats.
///
/// Uses the convention `0 log 0 = 0`. A letter with `p_k > 0` and
/// `q_k = 0` is an absolute-continuity violation and raises an error
/// rather than returning an infinity that would silently corrupt an
/// optimizer downstream.
pub fn kl_divergence<T: Scalar>(p: &ProbabilityVector<T>, q: &ProbabilityVector<T>) -> Result<T> {
    check_same_dim(p, q)?;
    let mut acc = KahanSum::new();
    for (k, (&pk, &qk)) in p.iter().zip(q.iter()).enumerate() {
        if pk == T::zero() {
            acc.add(qk);
            continue;
        }
        if qk == T::zero() {
            return Err(Error::AbsoluteContinuity(k));
        }
        // Summed in the extended form p log(p/q) + q − p (the q − p
        // telescope away on normalized inputs), with log(p/q) as
        // log1p((p−q)/q). Two effects: nearby terms keep full relative
        // accuracy, and the linear sensitivity to normalization dust in
        // the inputs cancels exactly. Convergence stopping rules
        // downstream difference this value near its floor and need both.
        acc.add(pk * ((pk - qk) / qk).ln_1p());
        acc.add(qk - pk);
    }
    // Round-off can leave a tiny negative residue when p == q.
    Ok(acc.value().max(T::zero()))
}

/// Point at parameter `t` on the m-geodesic from `p` to `q`:
/// `(1-t) p + t q`.
pub fn m_interpolate<T: Scalar>(
    p: &ProbabilityVector<T>,
    q: &ProbabilityVector<T>,
    t: GeodesicParam<T>,
) -> Result<ProbabilityVector<T>> {
    check_same_dim(p, q)?;
    let t = t.value();
    let s = T::one() - t;
    let probs = p
        .iter()
        .zip(q.iter())
        .map(|(&pk, &qk)| s * pk + t * qk)
        .collect();
    ProbabilityVector::new(probs)
}

/// Point at parameter `t` on the e-geodesic from `p` to `q`: the
/// normalized vector with entries `p_k^{1-t} q_k^t`.
///
/// `p` and `q` must share their support: letters carrying mass in
/// exactly one of the two have no interior log-representation.
pub fn e_interpolate<T: Scalar>(
    p: &ProbabilityVector<T>,
    q: &ProbabilityVector<T>,
    t: GeodesicParam<T>,
) -> Result<ProbabilityVector<T>> {
    check_same_dim(p, q)?;
    let t = t.value();
    let s = T::one() - t;
    let mut logs = Vec::with_capacity(p.len());
    let mut support = 0usize;
    for (k, (&pk, &qk)) in p.iter().zip(q.iter()).enumerate() {
        match (pk > T::zero(), qk > T::zero()) {
            (true, true) => {
                logs.push(Some(s * pk.ln() + t * qk.ln()));
                support += 1;
            }
            (false, false) => logs.push(None),
            _ => return Err(Error::SupportMismatch(k)),
        }
    }
    if support == 0 {
        return Err(Error::EmptySupport);
    }
    // Normalize in the log domain so extreme t stays finite.
    let max = logs
        .iter()
        .flatten()
        .copied()
        .fold(T::neg_infinity(), T::max);
    let weights: Vec<T> = logs
        .iter()
        .map(|l| l.map_or(T::zero(), |v| (v - max).exp()))
        .collect();
    normalize(&weights)
}

/// Defect of the Pythagorean identity `D(q, p) - D(q, mid) - D(mid, p)`.
///
/// Vanishes when `mid` is the m-projection of `q` onto an e-flat set
/// containing `p` (and dually), so a near-zero residual certifies a
/// projection without re-deriving the orthogonality it rests on.
pub fn pythagorean_residual<T: Scalar>(
    q: &ProbabilityVector<T>,
    mid: &ProbabilityVector<T>,
    p: &ProbabilityVector<T>,
) -> Result<T> {
    let total = kl_divergence(q, p)?;
    let first = kl_divergence(q, mid)?;
    let second = kl_divergence(mid, p)?;
    Ok(total - first - second)
}

/// Scales a nonnegative vector onto the simplex.
///
/// Division by the largest entry first keeps tiny inputs (denormal
/// territory) away from underflow.
pub fn normalize<T: Scalar>(v: &[T]) -> Result<ProbabilityVector<T>> {
    if v.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut max = T::zero();
    for (k, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteEntry(k));
        }
        if x < T::zero() {
            return Err(Error::NegativeEntry {
                index: k,
                value: x.to_f64_lossy(),
            });
        }
        max = max.max(x);
    }
    if max == T::zero() {
        return Err(Error::ZeroMass);
    }
    let scaled: Vec<T> = v.iter().map(|&x| x / max).collect();
    let sum = kahan_sum(scaled.iter().copied());
    Ok(ProbabilityVector {
        probs: scaled.into_iter().map(|x| x / sum).collect(),
    })
}

//! Bradley–Terry preference estimation by alternating projections.
//!
//! Each observed pair `(i, j)` with win counts `(n_ij, n_ji)` pins the
//! ratio `π_i : π_j = n_ij : n_ji` and thereby carves an m-flat *data
//! manifold* `D_ij` out of the simplex. The parameter point `Q = {θ}`
//! is scored by how close it sits to all of those slices at once,
//!
//! ```text
//! F(Q) = (1/N) Σ_pairs min_{P ∈ D_ij} D(P, Q),
//! ```
//!
//! and the fit alternates the e-projection of `Q` onto every `D_ij`
//! (closed form below) with the m-projection back to a single point,
//! which for KL divergence in the second argument is the arithmetic
//! mean of the projections. All pairs are projected from the same
//! `Q_t` and then averaged, so the per-iteration `F` never increases.
//!
//! The e-projection has a closed form: with `r = n_ij/(n_ij + n_ji)`
//! and `g = (θ_i/r)^r (θ_j/(1−r))^{1−r}`, keep `p_k ∝ θ_k` off the
//! pair, set `p_i ∝ r·g`, `p_j ∝ (1−r)·g`, and normalize. The tests
//! hold this form against a derivative-bisection minimizer of the
//! constrained divergence; the form is trusted only because that gate
//! passes.
//!
//! `F`-minimization is a sound estimate but not a priori the
//! likelihood maximizer of the model; [`bt_log_likelihood`] is provided
//! so callers can report the gap against any direct likelihood
//! optimizer rather than assume it is zero.

use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, KahanSum, Scalar};
use crate::simplex::{kl_divergence, ProbabilityVector};
use crate::trace::{EmConfig, Trace, TraceRecord};

/// Pairwise win counts: `counts[i][j]` = times item `i` beat item `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonCounts {
    n: Vec<Vec<u64>>,
}

impl ComparisonCounts {
    /// Validates a square count matrix with an unused zero diagonal.
    pub fn new(n: Vec<Vec<u64>>) -> Result<Self> {
        let size = n.len();
        if size == 0 {
            return Err(Error::EmptyData);
        }
        for (i, row) in n.iter().enumerate() {
            if row.len() != size {
                return Err(Error::DimensionMismatch(size, row.len()));
            }
            if row[i] != 0 {
                return Err(Error::InvalidParameter {
                    name: "diagonal",
                    value: row[i] as f64,
                    requirement: "n[i][i] = 0",
                });
            }
        }
        Ok(Self { n })
    }

    /// Builds counts from `(winner, loser, count)` triplets.
    pub fn from_triplets(size: usize, triplets: &[(usize, usize, u64)]) -> Result<Self> {
        let mut n = vec![vec![0u64; size]; size];
        for &(i, j, c) in triplets {
            for &idx in &[i, j] {
                if idx >= size {
                    return Err(Error::IndexOutOfRange { index: idx, size });
                }
            }
            if i == j {
                return Err(Error::RepeatedIndex(i));
            }
            n[i][j] += c;
        }
        Self::new(n)
    }

    pub fn num_items(&self) -> usize {
        self.n.len()
    }

    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.n[i][j]
    }

    /// Unordered pairs `(i, j)`, `i < j`, with at least one comparison.
    pub fn observed_pairs(&self) -> Vec<(usize, usize)> {
        let size = self.num_items();
        let mut pairs = Vec::new();
        for i in 0..size {
            for j in (i + 1)..size {
                if self.n[i][j] + self.n[j][i] > 0 {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// True when the observed pairs connect all items.
    pub fn is_connected(&self) -> bool {
        let size = self.num_items();
        let mut parent: Vec<usize> = (0..size).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, j) in self.observed_pairs() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        (1..size).all(|i| find(&mut parent, i) == root)
    }
}

/// Strictly positive preference weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceParams<T: Scalar = f64> {
    theta: ProbabilityVector<T>,
}

impl<T: Scalar> PreferenceParams<T> {
    pub fn new(theta: ProbabilityVector<T>) -> Result<Self> {
        if !theta.is_interior() {
            let k = theta.iter().position(|&v| v == T::zero()).unwrap_or(0);
            return Err(Error::NegativeEntry {
                index: k,
                value: 0.0,
            });
        }
        Ok(Self { theta })
    }

    pub fn uniform(num_items: usize) -> Self {
        Self {
            theta: ProbabilityVector::uniform(num_items),
        }
    }

    pub fn theta(&self) -> &ProbabilityVector<T> {
        &self.theta
    }

    pub fn num_items(&self) -> usize {
        self.theta.len()
    }
}

/// Smoothing policy for one-sided pairs (a positive count in only one
/// direction forces the loser's mass to zero, leaving the open
/// simplex). `None` rejects such pairs; `Some(s)` adds `s` to *both*
/// directions of every observed pair before taking ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtConfig<T: Scalar = f64> {
    pub smoothing: Option<T>,
    pub em: EmConfig<T>,
}

impl<T: Scalar> Default for BtConfig<T> {
    fn default() -> Self {
        Self {
            smoothing: None,
            em: EmConfig::default(),
        }
    }
}

/// Core projection with real-valued effective counts.
fn e_project_ratio<T: Scalar>(
    q: &PreferenceParams<T>,
    i: usize,
    j: usize,
    wins_ij: T,
    wins_ji: T,
) -> Result<ProbabilityVector<T>> {
    let theta = q.theta();
    let size = theta.len();
    for &idx in &[i, j] {
        if idx >= size {
            return Err(Error::IndexOutOfRange { index: idx, size });
        }
    }
    let total = wins_ij + wins_ji;
    if !(total > T::zero()) {
        return Err(Error::UnobservedPair { i, j });
    }
    let r = wins_ij / total;
    if r == T::zero() || r == T::one() {
        return Err(Error::ZeroRatioPair { i, j });
    }
    // g = (θ_i/r)^r (θ_j/(1−r))^{1−r}, evaluated in the log domain.
    let one_minus_r = T::one() - r;
    let log_g = r * (theta[i].ln() - r.ln()) + one_minus_r * (theta[j].ln() - one_minus_r.ln());
    let g = log_g.exp();
    let mut unnorm: Vec<T> = theta.as_slice().to_vec();
    unnorm[i] = r * g;
    unnorm[j] = one_minus_r * g;
    crate::simplex::normalize(&unnorm)
}

/// E-projection of `q` onto the data manifold of pair `(i, j)`: the
/// simplex point with `p_i : p_j = n_ij : n_ji` minimizing `D(P, q)`.
pub fn e_project_pair<T: Scalar>(
    q: &PreferenceParams<T>,
    i: usize,
    j: usize,
    counts: &ComparisonCounts,
) -> Result<ProbabilityVector<T>> {
    e_project_ratio(
        q,
        i,
        j,
        T::cast(counts.wins(i, j) as f64),
        T::cast(counts.wins(j, i) as f64),
    )
}

/// M-projection of a set of projections back to a single parameter
/// point: the arithmetic mean, which minimizes `Σ_l D(P_l, Q)` over
/// the simplex.
pub fn m_step_mean<T: Scalar>(projections: &[ProbabilityVector<T>]) -> Result<PreferenceParams<T>> {
    let first = projections.first().ok_or(Error::EmptyList)?;
    let d = first.len();
    let inv = T::one() / T::cast(projections.len() as f64);
    let mut mean = vec![T::zero(); d];
    for p in projections {
        if p.len() != d {
            return Err(Error::DimensionMismatch(d, p.len()));
        }
        for (m, &v) in mean.iter_mut().zip(p.iter()) {
            *m = *m + v * inv;
        }
    }
    PreferenceParams::new(ProbabilityVector::new(mean)?)
}

/// Log-likelihood `L(Q) = Σ_{i≠j} n_ij log(θ_i / (θ_i + θ_j))`.
pub fn bt_log_likelihood<T: Scalar>(counts: &ComparisonCounts, q: &PreferenceParams<T>) -> Result<T> {
    if counts.num_items() != q.num_items() {
        return Err(Error::DimensionMismatch(counts.num_items(), q.num_items()));
    }
    let theta = q.theta();
    let mut acc = KahanSum::new();
    for i in 0..counts.num_items() {
        for j in 0..counts.num_items() {
            if i == j || counts.wins(i, j) == 0 {
                continue;
            }
            let n = T::cast(counts.wins(i, j) as f64);
            acc.add(n * (theta[i] / (theta[i] + theta[j])).ln());
        }
    }
    Ok(acc.value())
}

/// Probability of observing the ordering `ranking[0] ≻ ranking[1] ≻ …`
/// among exactly the ranked items:
/// `Π_i θ_{a(i)} / Σ_{j ≥ i} θ_{a(j)}`.
pub fn pl_probability<T: Scalar>(ranking: &[usize], q: &PreferenceParams<T>) -> Result<T> {
    let theta = q.theta();
    let mut seen = vec![false; theta.len()];
    for &idx in ranking {
        if idx >= theta.len() {
            return Err(Error::IndexOutOfRange {
                index: idx,
                size: theta.len(),
            });
        }
        if seen[idx] {
            return Err(Error::RepeatedIndex(idx));
        }
        seen[idx] = true;
    }
    let mut remaining = kahan_sum(ranking.iter().map(|&idx| theta[idx]));
    let mut prob = T::one();
    for &idx in ranking.iter().take(ranking.len().saturating_sub(1)) {
        prob = prob * theta[idx] / remaining;
        remaining = remaining - theta[idx];
    }
    Ok(prob)
}

/// Effective (possibly smoothed) win counts for the observed pairs.
fn effective_counts<T: Scalar>(
    counts: &ComparisonCounts,
    smoothing: Option<T>,
) -> Result<Vec<(usize, usize, T, T)>> {
    let s = smoothing.unwrap_or_else(T::zero);
    if s < T::zero() {
        return Err(Error::InvalidParameter {
            name: "smoothing",
            value: s.to_f64_lossy(),
            requirement: "smoothing >= 0",
        });
    }
    counts
        .observed_pairs()
        .into_iter()
        .map(|(i, j)| {
            let wins_ij = T::cast(counts.wins(i, j) as f64) + s;
            let wins_ji = T::cast(counts.wins(j, i) as f64) + s;
            if wins_ij == T::zero() || wins_ji == T::zero() {
                return Err(Error::ZeroRatioPair { i, j });
            }
            Ok((i, j, wins_ij, wins_ji))
        })
        .collect()
}

/// Alternates e-projections onto every observed pair's data manifold
/// with the mean m-projection, tracing `F(Q_t)`.
pub fn fit_bt_em<T: Scalar>(
    counts: &ComparisonCounts,
    init: &PreferenceParams<T>,
    config: &BtConfig<T>,
) -> Result<(PreferenceParams<T>, Trace<T>)> {
    if counts.num_items() != init.num_items() {
        return Err(Error::DimensionMismatch(
            counts.num_items(),
            init.num_items(),
        ));
    }
    if !counts.is_connected() {
        return Err(Error::DisconnectedComparisons);
    }
    let pairs = effective_counts(counts, config.smoothing)?;
    if pairs.is_empty() {
        return Err(Error::EmptyList);
    }
    let num_pairs = T::cast(pairs.len() as f64);

    let mut q = init.clone();
    let mut trace = Trace::new();
    let mut prev_f: Option<T> = None;
    for t in 0..=config.em.max_iters {
        let projections: Vec<ProbabilityVector<T>> = pairs
            .iter()
            .map(|&(i, j, wij, wji)| e_project_ratio(&q, i, j, wij, wji))
            .collect::<Result<_>>()?;
        let f = kahan_sum(
            projections
                .iter()
                .map(|p| kl_divergence(p, q.theta()).unwrap_or_else(|_| T::infinity())),
        ) / num_pairs;
        trace.push(TraceRecord::new(t, f));
        if let Some(pf) = prev_f {
            if pf - f < config.em.tol {
                trace.converged = true;
                break;
            }
        }
        if t == config.em.max_iters {
            break;
        }
        q = m_step_mean(&projections)?;
        prev_f = Some(f);
    }
    Ok((q, trace))
}

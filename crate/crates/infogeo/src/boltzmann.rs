//! Exact small-scale Boltzmann machine learning.
//!
//! The family is the pairwise log-linear model on binary states
//! `z ∈ {0,1}^n`, with no linear terms:
//!
//! ```text
//! B(z) ∝ exp( Σ_{i<j} w_ij z_i z_j ).
//! ```
//!
//! With `v` visible and `h` hidden units, learning drives the visible
//! marginal `B_v` toward an empirical distribution `P̂` by the bilevel
//! problem `inf_B inf_{P ∈ D} D(P, B)`, where `D` is the set of joint
//! distributions whose visible marginal equals `P̂` — the data side of
//! the alternation. Both infima have exact desk-scale solutions:
//!
//! - [`project_to_data`]: `P(x, y) = P̂(x) B(y|x)`, filling the hidden
//!   units by exact conditioning; after it, `D(P, B)` equals the
//!   visible-marginal divergence `D(P̂, B_v)`.
//! - [`fit_weights_to_joint`]: maximum likelihood of the fully observed
//!   joint, gradient ascent on `Σ_z P(z) log B(z)` with the exact
//!   moment-matching gradient `E_P[z_i z_j] − E_B[z_i z_j]`.
//!
//! Everything enumerates all `2^n` states (guarded at `n ≤ 20`), so
//! there is no sampling noise anywhere and each half-step provably
//! lowers the traced divergence.

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};
use crate::simplex::{kl_divergence, ProbabilityVector};
use crate::trace::{Trace, TraceRecord};

/// Hard cap on total units: 2^20 states enumerate in seconds.
pub const MAX_UNITS: usize = 20;

/// Pairwise connectivities of a machine with `v` visible and `h`
/// hidden units; weights are stored for the `n(n−1)/2` pairs `i < j`.
///
/// State integers use bit `i` for unit `i`, visible units in the low
/// bits, so a joint state splits as `s = x + (y << v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannParams<T: Scalar = f64> {
    visible: usize,
    hidden: usize,
    weights: Vec<T>,
}

impl<T: Scalar> BoltzmannParams<T> {
    /// All-zero weights (the uniform machine).
    pub fn new(visible: usize, hidden: usize) -> Result<Self> {
        let n = visible + hidden;
        if n == 0 || n > MAX_UNITS {
            return Err(Error::EnumerationBound { units: n });
        }
        Ok(Self {
            visible,
            hidden,
            weights: vec![T::zero(); n * (n - 1) / 2],
        })
    }

    /// From packed upper-triangular weights, ordered `(0,1), (0,2), …,
    /// (0,n−1), (1,2), …`.
    pub fn from_weights(visible: usize, hidden: usize, weights: Vec<T>) -> Result<Self> {
        let mut params = Self::new(visible, hidden)?;
        if weights.len() != params.weights.len() {
            return Err(Error::DimensionMismatch(params.weights.len(), weights.len()));
        }
        params.weights = weights;
        Ok(params)
    }

    pub fn num_units(&self) -> usize {
        self.visible + self.hidden
    }

    pub fn num_visible(&self) -> usize {
        self.visible
    }

    pub fn num_hidden(&self) -> usize {
        self.hidden
    }

    pub fn num_pairs(&self) -> usize {
        self.weights.len()
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.num_units());
        let n = self.num_units();
        // Offset of row i in the packed upper triangle.
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[self.pair_index(i, j)]
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: T) {
        let idx = self.pair_index(i, j);
        self.weights[idx] = w;
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Ordered pair list matching the packed weight layout.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.num_units();
        let mut out = Vec::with_capacity(self.weights.len());
        for i in 0..n {
            for j in (i + 1)..n {
                out.push((i, j));
            }
        }
        out
    }

    /// Unnormalized log-probability `Σ_{i<j} w_ij z_i z_j` of state `s`.
    fn energy(&self, s: usize) -> T {
        let n = self.num_units();
        let mut acc = T::zero();
        let mut idx = 0;
        for i in 0..n {
            let zi = (s >> i) & 1;
            for j in (i + 1)..n {
                if zi == 1 && (s >> j) & 1 == 1 {
                    acc = acc + self.weights[idx];
                }
                idx += 1;
            }
        }
        acc
    }
}

/// Exact distribution over all `2^n` states.
pub fn bm_distribution<T: Scalar>(params: &BoltzmannParams<T>) -> Result<ProbabilityVector<T>> {
    let n = params.num_units();
    if n > MAX_UNITS {
        return Err(Error::EnumerationBound { units: n });
    }
    let states = 1usize << n;
    let logs: Vec<T> = (0..states).map(|s| params.energy(s)).collect();
    let log_z = log_sum_exp(&logs);
    let probs: Vec<T> = logs.iter().map(|&l| (l - log_z).exp()).collect();
    crate::simplex::normalize(&probs)
}

/// Visible marginal `B_v(x) = Σ_y B(x, y)` of a joint distribution.
pub fn visible_marginal<T: Scalar>(
    joint: &ProbabilityVector<T>,
    visible: usize,
    hidden: usize,
) -> Result<ProbabilityVector<T>> {
    let states = 1usize << (visible + hidden);
    if joint.len() != states {
        return Err(Error::DimensionMismatch(states, joint.len()));
    }
    let vis_states = 1usize << visible;
    let mut out = vec![T::zero(); vis_states];
    for s in 0..states {
        out[s & (vis_states - 1)] = out[s & (vis_states - 1)] + joint[s];
    }
    ProbabilityVector::new(out)
}

/// E-projection onto the data manifold: the joint `P(x, y) =
/// P̂(x) B(y|x)` is the closest point to `B` among all joints whose
/// visible marginal is `P̂`.
pub fn project_to_data<T: Scalar>(
    visible_empirical: &ProbabilityVector<T>,
    params: &BoltzmannParams<T>,
) -> Result<ProbabilityVector<T>> {
    let v = params.num_visible();
    let h = params.num_hidden();
    let vis_states = 1usize << v;
    if visible_empirical.len() != vis_states {
        return Err(Error::DimensionMismatch(vis_states, visible_empirical.len()));
    }
    let b = bm_distribution(params)?;
    if h == 0 {
        return Ok(visible_empirical.clone());
    }
    let b_v = visible_marginal(&b, v, h)?;
    let states = 1usize << (v + h);
    let mut joint = vec![T::zero(); states];
    for s in 0..states {
        let x = s & (vis_states - 1);
        // B is strictly positive by construction, so B_v(x) > 0.
        joint[s] = visible_empirical[x] * b[s] / b_v[x];
    }
    ProbabilityVector::new(joint)
}

/// Pairwise second moments `E_P[z_i z_j]` in packed order.
fn pair_moments<T: Scalar>(dist: &ProbabilityVector<T>, n: usize) -> Vec<T> {
    let mut moments = vec![T::zero(); n * (n - 1) / 2];
    for s in 0..dist.len() {
        let p = dist[s];
        if p == T::zero() {
            continue;
        }
        let mut idx = 0;
        for i in 0..n {
            let zi = (s >> i) & 1;
            for j in (i + 1)..n {
                if zi == 1 && (s >> j) & 1 == 1 {
                    moments[idx] = moments[idx] + p;
                }
                idx += 1;
            }
        }
    }
    moments
}

/// Exact log-likelihood gain of the move `w → w + α·g`:
///
/// ```text
/// Δll(α) = α ⟨g, E_P[zz]⟩ − log E_B[ exp(α s) ],   s(z) = Σ_p g_p z_i z_j.
/// ```
///
/// Evaluated through `exp_m1`/`ln_1p`, the gain keeps full precision
/// even when it is many orders below the log-likelihood itself; naive
/// differencing of two O(1) log-likelihoods stalls the line search at
/// the f64 noise floor long before tight moment tolerances are met.
fn ascent_gain<T: Scalar>(
    b: &ProbabilityVector<T>,
    direction_scores: &[T],
    target_dot: T,
    alpha: T,
) -> T {
    let mut acc = crate::scalar::KahanSum::new();
    for s in 0..b.len() {
        acc.add(b[s] * (alpha * direction_scores[s]).exp_m1());
    }
    alpha * target_dot - acc.value().ln_1p()
}

/// Iteration control for the weight fit and the outer alternation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig<T: Scalar = f64> {
    /// M-step stationarity: largest allowed pairwise-moment residual.
    pub moment_tol: T,
    /// Outer stopping rule: quit once the divergence improves by less.
    pub objective_tol: T,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
}

impl<T: Scalar> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            moment_tol: T::cast(1e-9),
            objective_tol: T::cast(1e-12),
            max_inner_iters: 100_000,
            max_outer_iters: 5_000,
        }
    }
}

/// Maximum-likelihood weights for a fully observed joint `P`: gradient
/// ascent on `Σ_z P(z) log B(z)` with backtracking, stopping when every
/// pairwise moment of `B` matches `P` within `config.moment_tol`.
///
/// A `P` whose moments the family can only reach on its boundary (a
/// required moment of exactly 0 or shared support constraints) drives
/// some weight to infinity; that surfaces as [`Error::WeightDivergence`]
/// after the iteration budget.
pub fn fit_weights_to_joint<T: Scalar>(
    target: &ProbabilityVector<T>,
    init: &BoltzmannParams<T>,
    config: &FitConfig<T>,
) -> Result<BoltzmannParams<T>> {
    let n = init.num_units();
    if target.len() != 1usize << n {
        return Err(Error::DimensionMismatch(1usize << n, target.len()));
    }
    let target_moments = pair_moments(target, n);
    let pairs = init.pairs();
    let mut params = init.clone();
    let mut step = T::one();
    for _ in 0..config.max_inner_iters {
        let b = bm_distribution(&params)?;
        let model_moments = pair_moments(&b, n);
        let grad: Vec<T> = target_moments
            .iter()
            .zip(model_moments.iter())
            .map(|(&t, &m)| t - m)
            .collect();
        let residual = grad.iter().map(|g| g.abs()).fold(T::zero(), T::max);
        if residual < config.moment_tol {
            return Ok(params);
        }
        let gsq = grad.iter().fold(T::zero(), |s, &g| s + g * g);
        let target_dot = grad
            .iter()
            .zip(target_moments.iter())
            .fold(T::zero(), |s, (&g, &t)| s + g * t);
        // Per-state score of the ascent direction.
        let scores: Vec<T> = (0..b.len())
            .map(|s| {
                let mut acc = T::zero();
                for (idx, &(i, j)) in pairs.iter().enumerate() {
                    if (s >> i) & 1 == 1 && (s >> j) & 1 == 1 {
                        acc = acc + grad[idx];
                    }
                }
                acc
            })
            .collect();
        // Backtracking on the exact gain.
        let c = T::cast(0.25);
        let mut local = step;
        let mut accepted = false;
        for _ in 0..80 {
            let gain = ascent_gain(&b, &scores, target_dot, local);
            if gain.is_finite() && gain >= c * local * gsq {
                for (w, &g) in params.weights.iter_mut().zip(grad.iter()) {
                    *w = *w + local * g;
                }
                step = (local * T::cast(2.0)).min(T::cast(1e3));
                accepted = true;
                break;
            }
            local = local / T::cast(2.0);
            if local < T::cast(1e-18) {
                break;
            }
        }
        if !accepted {
            // No ascent at machine precision: the moment constraint
            // sits on the family boundary.
            return Err(Error::WeightDivergence);
        }
    }
    // Budget exhausted; accept only a stationary point.
    let b = bm_distribution(&params)?;
    let residual = pair_moments(&b, n)
        .iter()
        .zip(target_moments.iter())
        .map(|(&m, &t)| (m - t).abs())
        .fold(T::zero(), T::max);
    if residual < config.moment_tol {
        Ok(params)
    } else {
        Err(Error::WeightDivergence)
    }
}

/// Alternates [`project_to_data`] with [`fit_weights_to_joint`],
/// tracing `D(P_t, B_t)` after every half-step (extras `"after_e"` and
/// `"after_m"` carry the two half-step values of each round).
pub fn fit_bm_em<T: Scalar>(
    visible_empirical: &ProbabilityVector<T>,
    visible: usize,
    hidden: usize,
    config: &FitConfig<T>,
) -> Result<(BoltzmannParams<T>, Trace<T>)> {
    let mut params = BoltzmannParams::new(visible, hidden)?;
    if visible_empirical.len() != 1usize << visible {
        return Err(Error::DimensionMismatch(
            1usize << visible,
            visible_empirical.len(),
        ));
    }
    let mut trace = Trace::new();
    let mut prev: Option<T> = None;
    for t in 0..config.max_outer_iters {
        let joint = project_to_data(visible_empirical, &params)?;
        let after_e = kl_divergence(&joint, &bm_distribution(&params)?)?;
        params = fit_weights_to_joint(&joint, &params, config)?;
        let after_m = kl_divergence(&joint, &bm_distribution(&params)?)?;
        trace.push(
            TraceRecord::new(t, after_m)
                .with_extra("after_e", after_e)
                .with_extra("after_m", after_m),
        );
        if let Some(p) = prev {
            if p - after_m < config.objective_tol {
                trace.converged = true;
                break;
            }
        }
        prev = Some(after_m);
    }
    Ok((params, trace))
}

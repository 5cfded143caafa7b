//! Principal component analysis for exponential-family parameter points.
//!
//! A datum here is a distribution, carried as a [`DualPoint`]: its
//! natural coordinate `θ` and expectation coordinate `η = ∇ψ(θ)` kept
//! consistent. Two dual reductions exist:
//!
//! - **e-PCA** fits an affine subspace in `θ`: `θ̂_i = Σ_k w_ik u_k`
//!   with `Σ_k w_ik = 1`, minimizing `L = Σ_i D(θ_i, θ̂_i)`;
//! - **m-PCA** exchanges the roles: the subspace is affine in `η` and
//!   the divergence direction flips, `L = Σ_i D(θ̂_i, θ_i)`.
//!
//! Because the divergence is the Bregman divergence of the
//! log-partition `ψ` (or of its dual), the gradients collapse to the
//! dual-coordinate mismatch of the reconstructions,
//!
//! ```text
//! ∂L/∂w_ik = u_k · (η̂_i − η_i),    ∂L/∂u_k = Σ_i w_ik (η̂_i − η_i),
//! ```
//!
//! (with `θ̂ − θ` in place of `η̂ − η` for m-PCA), and both alternating
//! subproblems are smooth and convex. The fit runs projected gradient
//! descent with Armijo backtracking, projecting the `w`-gradient onto
//! the sum-zero tangent of the affine constraint and rejecting any step
//! whose reconstruction leaves the parameter domain.
//!
//! At `K = 1` the optima are the closed-form centers: the e-center
//! averages `η` and maps back, the m-center averages `θ`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{kahan_sum, Scalar};
use crate::simplex::ProbabilityVector;
use crate::trace::{Trace, TraceRecord};

/// Which exponential family the points live in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpFamilySpec<T: Scalar = f64> {
    /// Finite alphabet of size `d`; parameters have dimension `d − 1`
    /// (the last category is the reference).
    Categorical { d: usize },
    /// Univariate Gaussian with known variance; the mean is the only
    /// parameter, `η = σ²θ`.
    GaussianFixedVariance { variance: T },
}

impl<T: Scalar> ExpFamilySpec<T> {
    pub fn categorical(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter {
                name: "d",
                value: d as f64,
                requirement: "d >= 2",
            });
        }
        Ok(Self::Categorical { d })
    }

    pub fn gaussian_fixed_variance(variance: T) -> Result<Self> {
        if !(variance > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "variance",
                value: variance.to_f64_lossy(),
                requirement: "variance > 0",
            });
        }
        Ok(Self::GaussianFixedVariance { variance })
    }

    /// Dimension of the parameter vectors.
    pub fn param_dim(&self) -> usize {
        match self {
            Self::Categorical { d } => d - 1,
            Self::GaussianFixedVariance { .. } => 1,
        }
    }

    /// Log-partition `ψ(θ)`.
    pub fn log_partition(&self, theta: &[T]) -> T {
        match self {
            Self::Categorical { .. } => {
                // log(1 + Σ e^{θ_j}), max-subtracted against overflow.
                let max = theta.iter().copied().fold(T::zero(), T::max);
                let sum = (-max).exp() + kahan_sum(theta.iter().map(|&t| (t - max).exp()));
                max + sum.ln()
            }
            Self::GaussianFixedVariance { variance } => {
                *variance * theta[0] * theta[0] / T::cast(2.0)
            }
        }
    }
}

/// Natural-to-expectation coordinate transform `η = ∇ψ(θ)`.
pub fn theta_to_eta<T: Scalar>(spec: &ExpFamilySpec<T>, theta: &[T]) -> Result<Vec<T>> {
    if theta.len() != spec.param_dim() {
        return Err(Error::DimensionMismatch(spec.param_dim(), theta.len()));
    }
    match spec {
        ExpFamilySpec::Categorical { .. } => {
            let max = theta.iter().copied().fold(T::zero(), T::max);
            let denom = (-max).exp() + kahan_sum(theta.iter().map(|&t| (t - max).exp()));
            Ok(theta.iter().map(|&t| (t - max).exp() / denom).collect())
        }
        ExpFamilySpec::GaussianFixedVariance { variance } => Ok(vec![*variance * theta[0]]),
    }
}

/// Expectation-to-natural coordinate transform, exact inverse of
/// [`theta_to_eta`]. For the categorical family the expectation
/// parameters must lie strictly inside the simplex.
pub fn eta_to_theta<T: Scalar>(spec: &ExpFamilySpec<T>, eta: &[T]) -> Result<Vec<T>> {
    if eta.len() != spec.param_dim() {
        return Err(Error::DimensionMismatch(spec.param_dim(), eta.len()));
    }
    match spec {
        ExpFamilySpec::Categorical { .. } => {
            if let Some(k) = eta.iter().position(|&e| !(e > T::zero())) {
                return Err(Error::BoundaryEta(k));
            }
            let rest = T::one() - kahan_sum(eta.iter().copied());
            if !(rest > T::zero()) {
                return Err(Error::BoundaryEta(eta.len()));
            }
            let log_rest = rest.ln();
            Ok(eta.iter().map(|&e| e.ln() - log_rest).collect())
        }
        ExpFamilySpec::GaussianFixedVariance { variance } => Ok(vec![eta[0] / *variance]),
    }
}

/// A family member carried in both coordinate systems at once.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint<T: Scalar = f64> {
    theta: Vec<T>,
    eta: Vec<T>,
}

impl<T: Scalar> DualPoint<T> {
    pub fn from_theta(spec: &ExpFamilySpec<T>, theta: Vec<T>) -> Result<Self> {
        let eta = theta_to_eta(spec, &theta)?;
        Ok(Self { theta, eta })
    }

    pub fn from_eta(spec: &ExpFamilySpec<T>, eta: Vec<T>) -> Result<Self> {
        let theta = eta_to_theta(spec, &eta)?;
        Ok(Self { theta, eta })
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn eta(&self) -> &[T] {
        &self.eta
    }

    /// Full probability vector of a categorical point.
    pub fn to_probability_vector(&self, spec: &ExpFamilySpec<T>) -> Result<ProbabilityVector<T>> {
        match spec {
            ExpFamilySpec::Categorical { .. } => {
                let mut probs = self.eta.clone();
                probs.push(T::one() - kahan_sum(self.eta.iter().copied()));
                ProbabilityVector::new(probs)
            }
            ExpFamilySpec::GaussianFixedVariance { .. } => Err(Error::InvalidParameter {
                name: "family",
                value: 0.0,
                requirement: "categorical",
            }),
        }
    }
}

/// KL divergence between two family members,
/// `D(p, q) = ψ(θ_q) − ψ(θ_p) − η_p · (θ_q − θ_p)`.
pub fn kl<T: Scalar>(spec: &ExpFamilySpec<T>, from: &DualPoint<T>, to: &DualPoint<T>) -> T {
    let mut cross = T::zero();
    for ((&e, &tq), &tp) in from.eta.iter().zip(to.theta.iter()).zip(from.theta.iter()) {
        cross = cross + e * (tq - tp);
    }
    (spec.log_partition(&to.theta) - spec.log_partition(&from.theta) - cross).max(T::zero())
}

/// Affine subspace plus per-point weights; `basis` is expressed in the
/// affine coordinate of the fit that produced it (`θ` for e-PCA, `η`
/// for m-PCA), and every weight row sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T: Scalar = f64> {
    basis: Vec<Vec<T>>,
    weights: Vec<Vec<T>>,
}

impl<T: Scalar> Subspace<T> {
    pub fn new(basis: Vec<Vec<T>>, weights: Vec<Vec<T>>) -> Result<Self> {
        if basis.is_empty() || weights.is_empty() {
            return Err(Error::EmptyList);
        }
        let k = basis.len();
        let dim = basis[0].len();
        for u in &basis {
            if u.len() != dim {
                return Err(Error::DimensionMismatch(dim, u.len()));
            }
        }
        let tol = T::cast(1e-10);
        for (i, row) in weights.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(k, row.len()));
            }
            let sum = kahan_sum(row.iter().copied());
            if (sum - T::one()).abs() > tol {
                return Err(Error::InvalidResponsibilityRow {
                    index: i,
                    sum: sum.to_f64_lossy(),
                });
            }
        }
        Ok(Self { basis, weights })
    }

    pub fn num_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    pub fn weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    /// Affine reconstruction `Σ_k w_ik u_k` of point `i`.
    pub fn reconstruction(&self, i: usize) -> Vec<T> {
        let dim = self.basis[0].len();
        let mut out = vec![T::zero(); dim];
        for (w, u) in self.weights[i].iter().zip(self.basis.iter()) {
            for (o, &v) in out.iter_mut().zip(u.iter()) {
                *o = *o + *w * v;
            }
        }
        out
    }
}

/// Iteration control for the alternating fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpcaConfig<T: Scalar = f64> {
    /// Stop once an outer round gains less than this (measured by the
    /// exact line-search gains, so values near 1e-18 are meaningful).
    pub tol: T,
    pub max_outer: usize,
    /// Gradient steps per block per outer round.
    pub inner_steps: usize,
    /// Seed for the basis initialization.
    pub seed: u64,
}

impl<T: Scalar> Default for EpcaConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::cast(1e-18),
            max_outer: 1000,
            inner_steps: 60,
            seed: 0,
        }
    }
}

/// Which coordinate the subspace is affine in.
#[derive(Clone, Copy, PartialEq)]
enum AffineSide {
    Theta, // e-PCA
    Eta,   // m-PCA
}

/// Full categorical probabilities (all `d` entries) from `d − 1`
/// natural parameters.
fn full_probs_from_theta<T: Scalar>(theta: &[T]) -> Vec<T> {
    let max = theta.iter().copied().fold(T::zero(), T::max);
    let mut probs: Vec<T> = theta.iter().map(|&t| (t - max).exp()).collect();
    probs.push((-max).exp());
    let z = kahan_sum(probs.iter().copied());
    probs.iter_mut().for_each(|p| *p = *p / z);
    probs
}

/// Full categorical probabilities from `d − 1` expectation parameters.
fn full_probs_from_eta<T: Scalar>(eta: &[T]) -> Vec<T> {
    let mut probs = eta.to_vec();
    probs.push(T::one() - kahan_sum(eta.iter().copied()));
    probs
}

struct Problem<'a, T: Scalar> {
    spec: &'a ExpFamilySpec<T>,
    side: AffineSide,
    points: &'a [DualPoint<T>],
}

impl<'a, T: Scalar> Problem<'a, T> {
    /// The affine coordinate of data point `i`.
    fn affine_coord(&self, i: usize) -> &[T] {
        match self.side {
            AffineSide::Theta => self.points[i].theta(),
            AffineSide::Eta => self.points[i].eta(),
        }
    }

    /// Per-point loss of a reconstruction in the affine coordinate.
    fn point_loss(&self, i: usize, recon: &[T]) -> Result<T> {
        let p = &self.points[i];
        match self.side {
            AffineSide::Theta => {
                // D(point, recon) = ψ(θ̂) − ψ(θ) − η · (θ̂ − θ)
                let mut cross = T::zero();
                for ((&e, &r), &t) in p.eta.iter().zip(recon.iter()).zip(p.theta.iter()) {
                    cross = cross + e * (r - t);
                }
                Ok(self.spec.log_partition(recon) - self.spec.log_partition(&p.theta) - cross)
            }
            AffineSide::Eta => {
                // D(recon, point) = ψ(θ) − ψ(θ̂) − η̂ · (θ − θ̂)
                let theta_hat = eta_to_theta(self.spec, recon)
                    .map_err(|_| Error::OutOfDomainReconstruction(i))?;
                let mut cross = T::zero();
                for ((&e, &t), &th) in recon.iter().zip(p.theta.iter()).zip(theta_hat.iter()) {
                    cross = cross + e * (t - th);
                }
                Ok(self.spec.log_partition(&p.theta) - self.spec.log_partition(&theta_hat) - cross)
            }
        }
    }

    /// Exact decrease `loss_i(recon) − loss_i(recon + delta)`.
    ///
    /// Evaluated in a cancellation-free form (`ln_1p`/`exp_m1` around
    /// the current reconstruction), so the line searches keep resolving
    /// gains far below the absolute loss's f64 noise floor; differencing
    /// two loss values would stall the fit around 1e-7 accuracy.
    fn point_gain(&self, i: usize, recon: &[T], delta: &[T]) -> Result<T> {
        let p = &self.points[i];
        match (self.spec, self.side) {
            (ExpFamilySpec::Categorical { .. }, AffineSide::Theta) => {
                // gain = η_p · Δ − [ψ(θ̂+Δ) − ψ(θ̂)]
                //      = η_p · Δ − log(1 + Σ_k q_k expm1(Δ_k)),
                // with q the full reconstruction probabilities.
                let q = full_probs_from_theta(recon);
                let mut bump = crate::scalar::KahanSum::new();
                for (k, &d) in delta.iter().enumerate() {
                    bump.add(q[k] * d.exp_m1());
                }
                let mut dot = T::zero();
                for (&e, &d) in p.eta.iter().zip(delta.iter()) {
                    dot = dot + e * d;
                }
                Ok(dot - bump.value().ln_1p())
            }
            (ExpFamilySpec::Categorical { .. }, AffineSide::Eta) => {
                // Full-coordinate move: the reference category absorbs
                // −ΣΔ. gain = Σ_k [−o_k ln1p(δ_k/o_k) + δ_k log(p_k/n_k)].
                let o = full_probs_from_eta(recon);
                let mut deltas: Vec<T> = delta.to_vec();
                deltas.push(-kahan_sum(delta.iter().copied()));
                let p_full = full_probs_from_eta(&p.eta);
                let mut acc = crate::scalar::KahanSum::new();
                for (k, &d) in deltas.iter().enumerate() {
                    let n = o[k] + d;
                    if !(n > T::zero()) {
                        return Err(Error::OutOfDomainReconstruction(i));
                    }
                    acc.add(-o[k] * (d / o[k]).ln_1p() + d * (p_full[k] / n).ln());
                }
                Ok(acc.value())
            }
            (ExpFamilySpec::GaussianFixedVariance { variance }, side) => {
                // Quadratic loss either way; only the scale differs.
                let (offset, scale) = match side {
                    AffineSide::Theta => (recon[0] - p.theta[0], *variance / T::cast(2.0)),
                    AffineSide::Eta => (
                        recon[0] - p.eta[0],
                        T::one() / (T::cast(2.0) * *variance),
                    ),
                };
                let d = delta[0];
                Ok(-scale * d * (T::cast(2.0) * offset + d))
            }
        }
    }

    /// Dual-coordinate mismatch of the reconstruction, the shared
    /// factor of both gradients.
    fn dual_gap(&self, i: usize, recon: &[T]) -> Result<Vec<T>> {
        let p = &self.points[i];
        match self.side {
            AffineSide::Theta => {
                let eta_hat = theta_to_eta(self.spec, recon)?;
                Ok(eta_hat
                    .iter()
                    .zip(p.eta.iter())
                    .map(|(&a, &b)| a - b)
                    .collect())
            }
            AffineSide::Eta => {
                let theta_hat = eta_to_theta(self.spec, recon)
                    .map_err(|_| Error::OutOfDomainReconstruction(i))?;
                Ok(theta_hat
                    .iter()
                    .zip(p.theta.iter())
                    .map(|(&a, &b)| a - b)
                    .collect())
            }
        }
    }

    fn total_loss(&self, sub: &Subspace<T>) -> Result<T> {
        let mut acc = T::zero();
        for i in 0..self.points.len() {
            acc = acc + self.point_loss(i, &sub.reconstruction(i))?;
        }
        Ok(acc.max(T::zero()))
    }
}

fn gradients<T: Scalar>(
    prob: &Problem<'_, T>,
    sub: &Subspace<T>,
) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>)> {
    let n = prob.points.len();
    let k = sub.num_basis();
    let dim = sub.basis()[0].len();
    let kf = T::cast(k as f64);
    let mut dw = vec![vec![T::zero(); k]; n];
    let mut du = vec![vec![T::zero(); dim]; k];
    for i in 0..n {
        let recon = sub.reconstruction(i);
        let gap = prob.dual_gap(i, &recon)?;
        for (j, u) in sub.basis().iter().enumerate() {
            let mut g = T::zero();
            for (&uv, &gv) in u.iter().zip(gap.iter()) {
                g = g + uv * gv;
            }
            dw[i][j] = g;
            let w = sub.weights()[i][j];
            for (duv, &gv) in du[j].iter_mut().zip(gap.iter()) {
                *duv = *duv + w * gv;
            }
        }
        // Project the row onto the tangent of Σ_k w_ik = 1.
        let mean = kahan_sum(dw[i].iter().copied()) / kf;
        for g in dw[i].iter_mut() {
            *g = *g - mean;
        }
    }
    Ok((dw, du))
}

/// Gradients of the e-PCA loss `L(w, u) = Σ_i D(θ_i, Σ_k w_ik u_k)`:
/// the `w`-gradient per row (projected to sum to zero, respecting the
/// affine constraint) and the basis gradient.
pub fn epca_gradients<T: Scalar>(
    spec: &ExpFamilySpec<T>,
    sub: &Subspace<T>,
    points: &[DualPoint<T>],
) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>)> {
    let prob = Problem {
        spec,
        side: AffineSide::Theta,
        points,
    };
    gradients(&prob, sub)
}

/// Gradients of the m-PCA loss `L(w, u) = Σ_i D(Σ_k w_ik u_k, θ_i)`
/// with the subspace affine in `η`.
pub fn mpca_gradients<T: Scalar>(
    spec: &ExpFamilySpec<T>,
    sub: &Subspace<T>,
    points: &[DualPoint<T>],
) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>)> {
    let prob = Problem {
        spec,
        side: AffineSide::Eta,
        points,
    };
    gradients(&prob, sub)
}

/// e-center: the point whose `η` is the arithmetic mean of the inputs'
/// `η`-coordinates; the `K = 1` optimum of e-PCA.
pub fn e_center<T: Scalar>(
    spec: &ExpFamilySpec<T>,
    points: &[DualPoint<T>],
) -> Result<DualPoint<T>> {
    if points.is_empty() {
        return Err(Error::EmptyList);
    }
    let dim = spec.param_dim();
    let inv = T::one() / T::cast(points.len() as f64);
    let mut mean = vec![T::zero(); dim];
    for p in points {
        for (m, &e) in mean.iter_mut().zip(p.eta()) {
            *m = *m + e * inv;
        }
    }
    DualPoint::from_eta(spec, mean)
}

/// m-center: the point whose `θ` is the arithmetic mean of the inputs'
/// `θ`-coordinates; the `K = 1` optimum of m-PCA.
pub fn m_center<T: Scalar>(
    spec: &ExpFamilySpec<T>,
    points: &[DualPoint<T>],
) -> Result<DualPoint<T>> {
    if points.is_empty() {
        return Err(Error::EmptyList);
    }
    let dim = spec.param_dim();
    let inv = T::one() / T::cast(points.len() as f64);
    let mut mean = vec![T::zero(); dim];
    for p in points {
        for (m, &t) in mean.iter_mut().zip(p.theta()) {
            *m = *m + t * inv;
        }
    }
    DualPoint::from_theta(spec, mean)
}

/// Armijo backtracking on exact gains: accepts the largest halved step
/// whose gain clears `c·α·‖g‖²`, or `None` when no step helps. An
/// out-of-domain candidate (gain evaluation fails) is a rejected step.
fn backtrack_gain<T: Scalar, F>(grad_sq: T, mut step: T, gain_at: F) -> Option<(T, T)>
where
    F: Fn(T) -> Result<T>,
{
    let c = T::cast(0.25);
    for _ in 0..80 {
        if let Ok(gain) = gain_at(step) {
            if gain.is_finite() && gain >= c * step * grad_sq {
                return Some((step, gain));
            }
        }
        step = step / T::cast(2.0);
        if step < T::cast(1e-20) {
            return None;
        }
    }
    None
}

fn fit_affine<T: Scalar>(
    spec: &ExpFamilySpec<T>,
    points: &[DualPoint<T>],
    k: usize,
    config: &EpcaConfig<T>,
    side: AffineSide,
) -> Result<(Subspace<T>, Trace<T>)> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyList);
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter {
            name: "K",
            value: k as f64,
            requirement: "1 <= K <= N",
        });
    }
    for p in points {
        if p.theta().len() != spec.param_dim() {
            return Err(Error::DimensionMismatch(spec.param_dim(), p.theta().len()));
        }
    }
    let prob = Problem { spec, side, points };

    // Basis from K distinct data points: an in-domain start.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let chosen = sample(&mut rng, n, k);
    let basis: Vec<Vec<T>> = chosen.iter().map(|i| prob.affine_coord(i).to_vec()).collect();
    let weights = vec![vec![T::one() / T::cast(k as f64); k]; n];
    let mut sub = Subspace::new(basis, weights)?;

    let loss = prob.total_loss(&sub)?;
    let mut trace = Trace::new();
    trace.push(TraceRecord::new(0, loss));

    let dim = spec.param_dim();
    let mut w_step = T::one();
    let mut u_step = T::one();
    for outer in 1..=config.max_outer {
        // Exact progress made this round, accumulated from the line
        // searches; the absolute loss is too noisy to difference at
        // the accuracies the fixed points are pinned to.
        let mut round_gain = T::zero();

        // Block 1: weights, row by row (independent subproblems).
        for _ in 0..config.inner_steps {
            let (dw, _) = gradients(&prob, &sub)?;
            let mut moved = false;
            for i in 0..n {
                let g = &dw[i];
                let gsq = g.iter().fold(T::zero(), |s, &v| s + v * v);
                if gsq <= T::epsilon() * T::epsilon() {
                    continue;
                }
                // Reconstruction moves by −α · Σ_k g_k u_k.
                let mut dir = vec![T::zero(); dim];
                for (j, u) in sub.basis().iter().enumerate() {
                    for (dv, &uv) in dir.iter_mut().zip(u.iter()) {
                        *dv = *dv + g[j] * uv;
                    }
                }
                let recon = sub.reconstruction(i);
                let gain_at = |step: T| -> Result<T> {
                    let delta: Vec<T> = dir.iter().map(|&d| -step * d).collect();
                    prob.point_gain(i, &recon, &delta)
                };
                if let Some((accepted, gain)) = backtrack_gain(gsq, w_step, gain_at) {
                    for (w, &gv) in sub.weights[i].iter_mut().zip(g.iter()) {
                        *w = *w - accepted * gv;
                    }
                    w_step = (accepted * T::cast(2.0)).min(T::cast(1e6));
                    round_gain = round_gain + gain;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }

        // Block 2: basis vectors, jointly.
        for _ in 0..config.inner_steps {
            let (_, du) = gradients(&prob, &sub)?;
            let gsq = du
                .iter()
                .flat_map(|u| u.iter())
                .fold(T::zero(), |s, &v| s + v * v);
            if gsq <= T::epsilon() * T::epsilon() {
                break;
            }
            // Per-point reconstruction direction −α · Σ_k w_ik du_k.
            let dirs: Vec<Vec<T>> = (0..n)
                .map(|i| {
                    let mut d = vec![T::zero(); dim];
                    for (j, g) in du.iter().enumerate() {
                        let w = sub.weights()[i][j];
                        for (dv, &gv) in d.iter_mut().zip(g.iter()) {
                            *dv = *dv + w * gv;
                        }
                    }
                    d
                })
                .collect();
            let recons: Vec<Vec<T>> = (0..n).map(|i| sub.reconstruction(i)).collect();
            let gain_at = |step: T| -> Result<T> {
                let mut total = crate::scalar::KahanSum::new();
                for i in 0..n {
                    let delta: Vec<T> = dirs[i].iter().map(|&d| -step * d).collect();
                    total.add(prob.point_gain(i, &recons[i], &delta)?);
                }
                Ok(total.value())
            };
            match backtrack_gain(gsq, u_step, gain_at) {
                Some((accepted, gain)) => {
                    for (u, g) in sub.basis.iter_mut().zip(du.iter()) {
                        for (uv, &gv) in u.iter_mut().zip(g.iter()) {
                            *uv = *uv - accepted * gv;
                        }
                    }
                    u_step = (accepted * T::cast(2.0)).min(T::cast(1e6));
                    round_gain = round_gain + gain;
                }
                None => break,
            }
        }

        trace.push(TraceRecord::new(outer, prob.total_loss(&sub)?));
        if round_gain < config.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((sub, trace))
}

/// e-PCA: fits a `K`-dimensional affine subspace in the natural
/// coordinate, minimizing `Σ_i D(θ_i, θ̂_i)` by alternating projected
/// gradient descent. The trace records the (non-increasing) loss per
/// outer round.
pub fn fit_epca<T: Scalar>(
    spec: &ExpFamilySpec<T>,
    points: &[DualPoint<T>],
    k: usize,
    config: &EpcaConfig<T>,
) -> Result<(Subspace<T>, Trace<T>)> {
    fit_affine(spec, points, k, config, AffineSide::Theta)
}

/// m-PCA: the dual fit, affine in the expectation coordinate with the
/// divergence direction reversed (`Σ_i D(θ̂_i, θ_i)`).
pub fn fit_mpca<T: Scalar>(
    spec: &ExpFamilySpec<T>,
    points: &[DualPoint<T>],
    k: usize,
    config: &EpcaConfig<T>,
) -> Result<(Subspace<T>, Trace<T>)> {
    fit_affine(spec, points, k, config, AffineSide::Eta)
}

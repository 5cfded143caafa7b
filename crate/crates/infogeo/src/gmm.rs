//! EM estimation for Gaussian mixture models as alternating projections.
//!
//! The data side is the set of joint distributions over (observation,
//! component label) whose observation marginal is the empirical one; a
//! point of it is a matrix of [`Responsibilities`]. The model side is
//! the mixture family parametrized by [`GaussianMixtureParams`]. The
//! joint objective
//!
//! ```text
//! J(r, θ) = (1/N) Σ_i Σ_k r_ik [log r_ik − log(w_k N(x_i; μ_k, Σ_k))]
//! ```
//!
//! is the divergence between the two, up to the data-entropy constant.
//! [`e_step`] minimizes it over `r` at fixed `θ` (the minimizer is the
//! posterior of the label given the observation), [`m_step`] over `θ`
//! at fixed `r` (weighted maximum likelihood in closed form), so the
//! objective decreases at every half-step and `−J` evaluated at a
//! matched pair equals the average marginal log-likelihood.
//!
//! For curved exponential families the classical E-step (a conditional
//! expectation of the hidden variables) and the divergence-minimizing
//! step can disagree, because `E[Z]` and `E[Z | x = E[X]]` differ in
//! general. For the mixture family fitted here the two coincide: the
//! posterior equality `r_ik = p(z = k | x_i; θ)` solves the projection
//! exactly, and no separate update is needed.
//!
//! Degenerate covariances are kept away from the boundary by flooring
//! the scatter eigenvalues at `1e-6 · trace/p` per component (with an
//! absolute fallback of `1e-6` when the scatter vanishes entirely);
//! without a floor the likelihood is unbounded along collapsing
//! components.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{from_eigen, is_symmetric, sym_eigen, Mat};
use crate::scalar::{kahan_sum, log_sum_exp, KahanSum, Scalar};
use crate::simplex::ProbabilityVector;
use crate::trace::{EmConfig, Trace, TraceRecord};

/// Relative eigenvalue floor applied to fitted covariances.
const COV_FLOOR_REL: f64 = 1e-6;
/// Absolute fallback when a scatter matrix has zero trace.
const COV_FLOOR_ABS: f64 = 1e-6;

/// Observations: `N` points of dimension `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar = f64> {
    obs: Vec<Vec<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(obs: Vec<Vec<T>>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::EmptyData);
        }
        let dim = obs[0].len();
        if dim == 0 {
            return Err(Error::EmptyData);
        }
        for row in &obs {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(dim, row.len()));
            }
            if let Some(k) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEntry(k));
            }
        }
        Ok(Self { obs })
    }

    /// One-dimensional convenience constructor.
    pub fn from_column(values: Vec<T>) -> Result<Self> {
        Self::new(values.into_iter().map(|v| vec![v]).collect())
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.obs[0].len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.obs[i]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.obs
    }
}

/// Mixture weights, means and covariances for `K` Gaussian components.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureParams<T: Scalar = f64> {
    weights: ProbabilityVector<T>,
    means: Vec<Vec<T>>,
    covariances: Vec<Mat<T>>,
}

impl<T: Scalar> GaussianMixtureParams<T> {
    /// Validates shapes, symmetry and positive definiteness.
    pub fn new(
        weights: ProbabilityVector<T>,
        means: Vec<Vec<T>>,
        covariances: Vec<Mat<T>>,
    ) -> Result<Self> {
        let k = weights.len();
        if means.len() != k {
            return Err(Error::DimensionMismatch(k, means.len()));
        }
        if covariances.len() != k {
            return Err(Error::DimensionMismatch(k, covariances.len()));
        }
        let p = means.first().map_or(0, |m| m.len());
        if p == 0 {
            return Err(Error::EmptyData);
        }
        for m in &means {
            if m.len() != p {
                return Err(Error::DimensionMismatch(p, m.len()));
            }
        }
        for (index, cov) in covariances.iter().enumerate() {
            if cov.len() != p || cov.iter().any(|row| row.len() != p) {
                return Err(Error::DimensionMismatch(p, cov.len()));
            }
            let scale = cov
                .iter()
                .flat_map(|r| r.iter().map(|v| v.abs()))
                .fold(T::zero(), T::max);
            let sym_tol = T::epsilon() * T::cast(64.0) * (scale + T::one());
            if !is_symmetric(cov, sym_tol) {
                return Err(Error::NotPositiveDefinite { index });
            }
            let (eig, _) = sym_eigen(cov);
            if eig.iter().any(|&l| !(l > T::zero())) {
                return Err(Error::NotPositiveDefinite { index });
            }
        }
        Ok(Self {
            weights,
            means,
            covariances,
        })
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &ProbabilityVector<T> {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<T>] {
        &self.means
    }

    pub fn covariances(&self) -> &[Mat<T>] {
        &self.covariances
    }
}

/// Posterior component memberships: row `i` is `q(z | x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities<T: Scalar = f64> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Responsibilities<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        let k = rows[0].len();
        let tol = T::epsilon().max(T::cast(1e-12)) * T::cast(16.0);
        for (index, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(k, row.len()));
            }
            let mut sum = KahanSum::new();
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry(j));
                }
                if v < T::zero() {
                    return Err(Error::NegativeEntry {
                        index: j,
                        value: v.to_f64_lossy(),
                    });
                }
                sum.add(v);
            }
            if (sum.value() - T::one()).abs() > tol {
                return Err(Error::InvalidResponsibilityRow {
                    index,
                    sum: sum.value().to_f64_lossy(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn num_components(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }
}

/// Per-component Gaussian prepared for repeated density evaluation.
struct ComponentDensity<T: Scalar> {
    mean: Vec<T>,
    eigvals: Vec<T>,
    eigvecs: Mat<T>,
    log_norm: T, // −(p log 2π + log det Σ) / 2
}

impl<T: Scalar> ComponentDensity<T> {
    fn prepare(mean: &[T], cov: &Mat<T>) -> Self {
        let (eigvals, eigvecs) = sym_eigen(cov);
        let p = mean.len();
        let log_det = kahan_sum(eigvals.iter().map(|&l| l.ln()));
        let log_two_pi = T::cast(2.0 * std::f64::consts::PI).ln();
        Self {
            mean: mean.to_vec(),
            eigvals,
            eigvecs,
            log_norm: -(T::cast(p as f64) * log_two_pi + log_det) / T::cast(2.0),
        }
    }

    fn log_density(&self, x: &[T]) -> T {
        let p = self.mean.len();
        let mut mahal = T::zero();
        for k in 0..p {
            // k-th eigenvector column dotted with (x − μ).
            let mut z = T::zero();
            for j in 0..p {
                z = z + self.eigvecs[j][k] * (x[j] - self.mean[j]);
            }
            mahal = mahal + z * z / self.eigvals[k];
        }
        self.log_norm - mahal / T::cast(2.0)
    }
}

/// `log(w_k) + log N(x_i; μ_k, Σ_k)` for all observations and components.
fn joint_log_densities<T: Scalar>(
    params: &GaussianMixtureParams<T>,
    data: &Dataset<T>,
) -> Result<Vec<Vec<T>>> {
    if data.dim() != params.dim() {
        return Err(Error::DimensionMismatch(params.dim(), data.dim()));
    }
    let comps: Vec<ComponentDensity<T>> = params
        .means
        .iter()
        .zip(params.covariances.iter())
        .map(|(m, c)| ComponentDensity::prepare(m, c))
        .collect();
    let log_weights: Vec<T> = params.weights.iter().map(|&w| w.ln()).collect();
    Ok(data
        .rows()
        .iter()
        .map(|x| {
            comps
                .iter()
                .zip(log_weights.iter())
                .map(|(c, &lw)| lw + c.log_density(x))
                .collect()
        })
        .collect())
}

/// Posterior responsibilities `r_ik ∝ w_k N(x_i; μ_k, Σ_k)`.
///
/// Computed in the log domain with per-row max subtraction, so rows
/// only fail when every component log-density is actually `-inf`.
pub fn e_step<T: Scalar>(
    params: &GaussianMixtureParams<T>,
    data: &Dataset<T>,
) -> Result<Responsibilities<T>> {
    let logs = joint_log_densities(params, data)?;
    let mut rows = Vec::with_capacity(logs.len());
    for (i, log_row) in logs.iter().enumerate() {
        let max = log_row.iter().copied().fold(T::neg_infinity(), T::max);
        if !max.is_finite() {
            return Err(Error::DensityUnderflow(i));
        }
        let unnorm: Vec<T> = log_row.iter().map(|&l| (l - max).exp()).collect();
        let sum = kahan_sum(unnorm.iter().copied());
        rows.push(unnorm.into_iter().map(|v| v / sum).collect());
    }
    Responsibilities::new(rows)
}

/// Floors the eigenvalues of a scatter matrix and reassembles it.
fn floor_covariance<T: Scalar>(scatter: &Mat<T>) -> Mat<T> {
    let p = scatter.len();
    let trace = (0..p).fold(T::zero(), |s, i| s + scatter[i][i]);
    let mut floor = T::cast(COV_FLOOR_REL) * trace / T::cast(p as f64);
    if !(floor > T::zero()) {
        floor = T::cast(COV_FLOOR_ABS);
    }
    let (eig, v) = sym_eigen(scatter);
    let floored: Vec<T> = eig.iter().map(|&l| l.max(floor)).collect();
    from_eigen(&floored, &v)
}

/// Weighted maximum-likelihood update of the mixture parameters.
pub fn m_step<T: Scalar>(
    data: &Dataset<T>,
    resp: &Responsibilities<T>,
) -> Result<GaussianMixtureParams<T>> {
    if resp.n() != data.len() {
        return Err(Error::DimensionMismatch(data.len(), resp.n()));
    }
    let n = data.len();
    let p = data.dim();
    let k = resp.num_components();

    let mut col_sums = vec![T::zero(); k];
    for row in resp.rows() {
        for (j, &r) in row.iter().enumerate() {
            col_sums[j] = col_sums[j] + r;
        }
    }
    if let Some(j) = col_sums.iter().position(|&s| !(s > T::zero())) {
        return Err(Error::EmptyComponent(j));
    }

    let weights =
        ProbabilityVector::new(col_sums.iter().map(|&s| s / T::cast(n as f64)).collect())?;

    let mut means = vec![vec![T::zero(); p]; k];
    for (x, row) in data.rows().iter().zip(resp.rows()) {
        for (j, &r) in row.iter().enumerate() {
            for (d, &xd) in x.iter().enumerate() {
                means[j][d] = means[j][d] + r * xd;
            }
        }
    }
    for (j, mean) in means.iter_mut().enumerate() {
        for v in mean.iter_mut() {
            *v = *v / col_sums[j];
        }
    }

    let mut covariances = Vec::with_capacity(k);
    for j in 0..k {
        let mut scatter = vec![vec![T::zero(); p]; p];
        for (x, row) in data.rows().iter().zip(resp.rows()) {
            let r = row[j];
            if r == T::zero() {
                continue;
            }
            for a in 0..p {
                let da = x[a] - means[j][a];
                for b in a..p {
                    let db = x[b] - means[j][b];
                    scatter[a][b] = scatter[a][b] + r * da * db;
                }
            }
        }
        for a in 0..p {
            for b in a..p {
                let v = scatter[a][b] / col_sums[j];
                scatter[a][b] = v;
                scatter[b][a] = v;
            }
        }
        covariances.push(floor_covariance(&scatter));
    }

    GaussianMixtureParams::new(weights, means, covariances)
}

/// The variational objective
/// `(1/N) Σ_i Σ_k r_ik [log r_ik − log(w_k N(x_i; μ_k, Σ_k))]`,
/// with `0 log 0 = 0`.
///
/// At `resp = e_step(params, data)` this equals the average negative
/// marginal log-likelihood; for any other responsibilities it exceeds
/// it by the mean KL divergence of the rows from the true posteriors.
pub fn joint_divergence_objective<T: Scalar>(
    data: &Dataset<T>,
    resp: &Responsibilities<T>,
    params: &GaussianMixtureParams<T>,
) -> Result<T> {
    if resp.n() != data.len() {
        return Err(Error::DimensionMismatch(data.len(), resp.n()));
    }
    if resp.num_components() != params.num_components() {
        return Err(Error::DimensionMismatch(
            params.num_components(),
            resp.num_components(),
        ));
    }
    let logs = joint_log_densities(params, data)?;
    let mut acc = KahanSum::new();
    for (i, (r_row, log_row)) in resp.rows().iter().zip(logs.iter()).enumerate() {
        for (&r, &l) in r_row.iter().zip(log_row.iter()) {
            if r == T::zero() {
                continue;
            }
            if !l.is_finite() {
                return Err(Error::DensityUnderflow(i));
            }
            acc.add(r * (r.ln() - l));
        }
    }
    Ok(acc.value() / T::cast(data.len() as f64))
}

/// Average marginal log-likelihood `(1/N) Σ_i log p(x_i; θ)`.
pub fn avg_log_likelihood<T: Scalar>(
    params: &GaussianMixtureParams<T>,
    data: &Dataset<T>,
) -> Result<T> {
    let logs = joint_log_densities(params, data)?;
    let total = kahan_sum(logs.iter().map(|row| log_sum_exp(row)));
    Ok(total / T::cast(data.len() as f64))
}

/// Seeded initialization: `K` distinct observations as means, the
/// pooled sample covariance everywhere, uniform weights.
pub fn init_from_data<T: Scalar>(
    data: &Dataset<T>,
    k: usize,
    seed: u64,
) -> Result<GaussianMixtureParams<T>> {
    if k == 0 || k > data.len() {
        return Err(Error::InvalidParameter {
            name: "components",
            value: k as f64,
            requirement: "1 <= K <= N",
        });
    }
    let n = data.len();
    let p = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = sample(&mut rng, n, k);
    let means: Vec<Vec<T>> = chosen.iter().map(|i| data.row(i).to_vec()).collect();

    let inv_n = T::one() / T::cast(n as f64);
    let mut grand_mean = vec![T::zero(); p];
    for x in data.rows() {
        for (d, &v) in x.iter().enumerate() {
            grand_mean[d] = grand_mean[d] + v * inv_n;
        }
    }
    let mut pooled = vec![vec![T::zero(); p]; p];
    for x in data.rows() {
        for a in 0..p {
            let da = x[a] - grand_mean[a];
            for b in a..p {
                let db = x[b] - grand_mean[b];
                pooled[a][b] = pooled[a][b] + da * db * inv_n;
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            pooled[b][a] = pooled[a][b];
        }
    }
    let pooled = floor_covariance(&pooled);

    GaussianMixtureParams::new(ProbabilityVector::uniform(k), means, vec![pooled; k])
}

/// Alternates [`e_step`] and [`m_step`] until the matched objective
/// stops improving by `config.tol` or `config.max_iters` is reached.
///
/// Trace records carry the objective after each m-step and, as the
/// `"nll"` extra, the average negative marginal log-likelihood of the
/// current parameters; both sequences are non-increasing.
pub fn fit_em<T: Scalar>(
    data: &Dataset<T>,
    init: &GaussianMixtureParams<T>,
    config: &EmConfig<T>,
) -> Result<(GaussianMixtureParams<T>, Trace<T>)> {
    if !(config.tol > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: config.tol.to_f64_lossy(),
            requirement: "tol > 0",
        });
    }
    let mut params = init.clone();
    let mut resp = e_step(&params, data)?;
    let mut prev_nll = joint_divergence_objective(data, &resp, &params)?;
    let mut trace = Trace::new();
    trace.push(TraceRecord::new(0, prev_nll).with_extra("nll", prev_nll));

    for t in 1..=config.max_iters {
        let new_params = m_step(data, &resp)?;
        let after_m = joint_divergence_objective(data, &resp, &new_params)?;
        params = new_params;
        resp = e_step(&params, data)?;
        let nll = joint_divergence_objective(data, &resp, &params)?;
        trace.push(TraceRecord::new(t, after_m).with_extra("nll", nll));
        if prev_nll - nll < config.tol {
            trace.converged = true;
            break;
        }
        prev_nll = nll;
    }
    Ok((params, trace))
}

//! Command-line front-end for the alternating-projection estimators.
//!
//! Each subcommand ingests a data file, runs the corresponding fit, and
//! emits a result JSON (schema `infogeo-em/1`) plus an optional JSONL
//! convergence trace. Exit status: 0 on convergence, 2 when the
//! iteration budget ran out first, 1 on input or algorithm errors.

mod io;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use infogeo::boltzmann::{bm_distribution, fit_bm_em, FitConfig};
use infogeo::channel::{capacity, verify_capacity, CapacityConfig};
use infogeo::epca::{eta_to_theta, fit_epca, fit_mpca, EpcaConfig, ExpFamilySpec};
use infogeo::gmm::{avg_log_likelihood, fit_em, init_from_data};
use infogeo::modal_regression::{fit_mlr, ols, silverman_bandwidth, MlrConfig};
use infogeo::ranking::{bt_log_likelihood, fit_bt_em, BtConfig, PreferenceParams};
use infogeo::{Direction, EmConfig, Trace};

use output::{emit_result, write_trace_jsonl, Envelope};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Parser)]
#[command(
    name = "infogeo",
    about = "Alternating e-/m-projection estimators: channel capacity, mixtures, ranking, modal regression, exponential-family PCA, and Boltzmann machines",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Result JSON path (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSONL convergence trace path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Channel capacity of a discrete memoryless channel.
    Capacity {
        /// Row-stochastic channel matrix, CSV (rows = input letters) or JSON.
        #[arg(long)]
        channel: PathBuf,
        /// Stop once the max-minus-mean divergence gap falls below this.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Gaussian mixture fit by EM.
    Gmm {
        /// Observations, one CSV row per point.
        #[arg(long)]
        data: PathBuf,
        /// Number of mixture components.
        #[arg(long)]
        components: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1_000)]
        max_iters: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Bradley–Terry preference weights from pairwise win counts.
    BtRank {
        /// Counts as a square CSV matrix or (winner, loser, count) triplets.
        #[arg(long)]
        counts: PathBuf,
        /// Counts file layout.
        #[arg(long, value_enum, default_value_t = CountsFormat::Matrix)]
        counts_format: CountsFormat,
        /// Add this to both directions of every observed pair.
        #[arg(long)]
        smoothing: Option<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 50_000)]
        max_iters: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Modal linear regression.
    Mlr {
        /// CSV with predictors in the leading columns, response last.
        #[arg(long)]
        data: PathBuf,
        /// Kernel bandwidth; a residual-scaled rule of thumb when omitted.
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Use the design matrix as given, without an intercept column.
        #[arg(long)]
        no_intercept: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1_000)]
        max_iters: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// e-PCA / m-PCA over exponential-family parameter points.
    Epca {
        /// Expectation-coordinate points, one CSV row each.
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum)]
        family: Family,
        /// Known variance for the gaussian family.
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        /// Subspace dimension.
        #[arg(short = 'k', long)]
        components: usize,
        /// Which coordinate the fitted subspace is affine in.
        #[arg(long, value_enum, default_value_t = PcaKind::E)]
        pca: PcaKind,
        #[arg(long, default_value_t = 1e-18)]
        tol: f64,
        #[arg(long, default_value_t = 1_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Boltzmann machine learning at exact enumeration scale.
    Boltzmann {
        /// Visible distribution as (bitstring, probability) CSV rows.
        #[arg(long)]
        visible_dist: PathBuf,
        /// Number of hidden units.
        #[arg(long, default_value_t = 0)]
        hidden: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 5_000)]
        max_iters: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CountsFormat {
    Matrix,
    Triplets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Categorical,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum PcaKind {
    E,
    M,
}

fn main() -> ExitCode {
    match run() {
        Ok(converged) => {
            if converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn finish<P: Serialize>(
    command: &'static str,
    trace: &Trace<f64>,
    direction: Direction,
    payload: P,
    common: &CommonArgs,
) -> Result<bool> {
    let envelope = Envelope::new(command, trace, direction, payload);
    emit_result(&envelope, common.output.as_deref())?;
    if let Some(trace_path) = &common.trace {
        write_trace_jsonl(trace, trace_path)?;
    }
    Ok(trace.converged)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Capacity {
            channel,
            tol,
            max_iters,
            common,
        } => {
            let ch = io::read_channel(&channel)?;
            let cfg = CapacityConfig { tol, max_iters };
            let (res, trace) = capacity(&ch, &cfg)?;
            let certified = res.converged
                && verify_capacity(&ch, &res.input_dist, res.capacity, 1e-6)?;

            #[derive(Serialize)]
            struct Payload {
                capacity_bits: f64,
                capacity_nats: f64,
                input_dist: Vec<f64>,
                certificate_gap: f64,
                certificate_ok: bool,
            }
            finish(
                "capacity",
                &trace,
                Direction::NonDecreasing,
                Payload {
                    capacity_bits: res.capacity / LN_2,
                    capacity_nats: res.capacity,
                    input_dist: res.input_dist.as_slice().to_vec(),
                    certificate_gap: res.certificate_gap,
                    certificate_ok: certified,
                },
                &common,
            )
        }
        Command::Gmm {
            data,
            components,
            seed,
            tol,
            max_iters,
            common,
        } => {
            let dataset = io::read_dataset(&data)?;
            let init = init_from_data(&dataset, components, seed)?;
            let cfg = EmConfig { tol, max_iters };
            let (fitted, trace) = fit_em(&dataset, &init, &cfg)?;
            let loglik = avg_log_likelihood(&fitted, &dataset)?;

            #[derive(Serialize)]
            struct Payload {
                weights: Vec<f64>,
                means: Vec<Vec<f64>>,
                covariances: Vec<Vec<Vec<f64>>>,
                avg_log_likelihood: f64,
                objective_trace: Vec<f64>,
                seed: u64,
            }
            finish(
                "gmm",
                &trace,
                Direction::NonIncreasing,
                Payload {
                    weights: fitted.weights().as_slice().to_vec(),
                    means: fitted.means().to_vec(),
                    covariances: fitted.covariances().to_vec(),
                    avg_log_likelihood: loglik,
                    objective_trace: trace.objectives().collect(),
                    seed,
                },
                &common,
            )
        }
        Command::BtRank {
            counts,
            counts_format,
            smoothing,
            tol,
            max_iters,
            common,
        } => {
            let counts = match counts_format {
                CountsFormat::Matrix => io::read_counts_matrix(&counts)?,
                CountsFormat::Triplets => io::read_counts_triplets(&counts)?,
            };
            let cfg = BtConfig {
                smoothing,
                em: EmConfig { tol, max_iters },
            };
            let init = PreferenceParams::uniform(counts.num_items());
            let (fitted, trace) = fit_bt_em(&counts, &init, &cfg)?;
            let loglik = bt_log_likelihood(&counts, &fitted)?;

            #[derive(Serialize)]
            struct Payload {
                theta: Vec<f64>,
                #[serde(rename = "F_trace")]
                f_trace: Vec<f64>,
                loglik: f64,
            }
            finish(
                "bt-rank",
                &trace,
                Direction::NonIncreasing,
                Payload {
                    theta: fitted.theta().as_slice().to_vec(),
                    f_trace: trace.objectives().collect(),
                    loglik,
                },
                &common,
            )
        }
        Command::Mlr {
            data,
            bandwidth,
            no_intercept,
            tol,
            max_iters,
            common,
        } => {
            let dataset = io::read_regression(&data, no_intercept)?;
            let h = match bandwidth {
                Some(h) if h > 0.0 => h,
                Some(h) => return Err(anyhow!("bandwidth must be positive, got {h}")),
                None => silverman_bandwidth(&dataset)?,
            };
            let cfg = MlrConfig {
                h,
                tol,
                max_iters,
                ridge: false,
            };
            let init = ols(&dataset)?;
            let (beta, trace) = fit_mlr(&dataset, &cfg, &init)?;

            #[derive(Serialize)]
            struct Payload {
                beta: Vec<f64>,
                objective_trace: Vec<f64>,
                h: f64,
                intercept: bool,
            }
            finish(
                "mlr",
                &trace,
                Direction::NonDecreasing,
                Payload {
                    beta,
                    objective_trace: trace.objectives().collect(),
                    h,
                    intercept: !no_intercept,
                },
                &common,
            )
        }
        Command::Epca {
            points,
            family,
            variance,
            components,
            pca,
            tol,
            max_iters,
            seed,
            common,
        } => {
            let spec = match family {
                Family::Gaussian => ExpFamilySpec::gaussian_fixed_variance(variance)?,
                Family::Categorical => {
                    let rows = io::read_numeric_csv(&points)?;
                    ExpFamilySpec::categorical(rows[0].len() + 1)?
                }
            };
            let pts = io::read_eta_points(&points, &spec)?;
            let cfg = EpcaConfig {
                tol,
                max_outer: max_iters,
                inner_steps: 60,
                seed,
            };
            let (sub, trace) = match pca {
                PcaKind::E => fit_epca(&spec, &pts, components, &cfg)?,
                PcaKind::M => fit_mpca(&spec, &pts, components, &cfg)?,
            };
            // The basis is reported in natural coordinates either way;
            // an m-PCA basis lives in expectation coordinates and is
            // converted pointwise.
            let basis_theta: Vec<Vec<f64>> = match pca {
                PcaKind::E => sub.basis().to_vec(),
                PcaKind::M => sub
                    .basis()
                    .iter()
                    .map(|u| eta_to_theta(&spec, u))
                    .collect::<infogeo::Result<_>>()?,
            };

            #[derive(Serialize)]
            struct Payload {
                basis_theta: Vec<Vec<f64>>,
                weights: Vec<Vec<f64>>,
                loss_trace: Vec<f64>,
                pca_kind: &'static str,
            }
            finish(
                "epca",
                &trace,
                Direction::NonIncreasing,
                Payload {
                    basis_theta,
                    weights: sub.weights().to_vec(),
                    loss_trace: trace.objectives().collect(),
                    pca_kind: match pca {
                        PcaKind::E => "e",
                        PcaKind::M => "m",
                    },
                },
                &common,
            )
        }
        Command::Boltzmann {
            visible_dist,
            hidden,
            tol,
            max_iters,
            common,
        } => {
            let (visible, p_hat) = io::read_visible_dist(&visible_dist)?;
            let cfg = FitConfig {
                objective_tol: tol,
                max_outer_iters: max_iters,
                ..FitConfig::default()
            };
            let (params, trace) = fit_bm_em(&p_hat, visible, hidden, &cfg)?;
            let n = params.num_units();
            let mut weights = vec![vec![0.0; n]; n];
            for (i, j) in params.pairs() {
                weights[i][j] = params.weight(i, j);
                weights[j][i] = params.weight(i, j);
            }
            let final_divergence = trace.last_objective().unwrap_or(f64::NAN);
            // Sanity figure for the report: how close the visible
            // marginal actually got.
            let marginal = infogeo::boltzmann::visible_marginal(
                &bm_distribution(&params)?,
                visible,
                hidden,
            )?;
            let marginal_kl = infogeo::kl_divergence(&p_hat, &marginal)?;

            #[derive(Serialize)]
            struct Payload {
                visible: usize,
                hidden: usize,
                weights: Vec<Vec<f64>>,
                divergence_trace: Vec<f64>,
                final_divergence: f64,
                visible_marginal_kl: f64,
            }
            finish(
                "boltzmann",
                &trace,
                Direction::NonIncreasing,
                Payload {
                    visible,
                    hidden,
                    weights,
                    divergence_trace: trace.objectives().collect(),
                    final_divergence,
                    visible_marginal_kl: marginal_kl,
                },
                &common,
            )
        }
    }
}

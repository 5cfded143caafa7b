//! Acceptance suite: one test per release criterion, each printing a
//! single PASS/FAIL line (run with `--nocapture` to see them all).
//!
//! Every tolerance here is pinned in code; nothing is deferred to
//! later calibration.

use std::time::Instant;

use infogeo::boltzmann::{
    bm_distribution, fit_bm_em, fit_weights_to_joint, project_to_data, visible_marginal,
    BoltzmannParams, FitConfig,
};
use infogeo::bregman::{bregman_divergence, UFunction};
use infogeo::channel::{capacity, verify_capacity, CapacityConfig, DiscreteChannel};
use infogeo::epca::{
    e_center, epca_gradients, eta_to_theta, fit_epca, fit_mpca, m_center, mpca_gradients,
    DualPoint, EpcaConfig, ExpFamilySpec, Subspace,
};
use infogeo::gmm::{
    avg_log_likelihood, e_step, init_from_data, joint_divergence_objective, m_step, Dataset,
};
use infogeo::modal_regression::{
    fit_mlr, mlr_objective, mlr_surrogate, ols, MlrConfig, RegressionDataset,
};
use infogeo::ranking::{
    bt_log_likelihood, e_project_pair, fit_bt_em, BtConfig, ComparisonCounts, PreferenceParams,
};
use infogeo::simplex::{
    e_interpolate, kl_divergence, m_interpolate, normalize, pythagorean_residual, GeodesicParam,
    ProbabilityVector,
};
use infogeo::EmConfig;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const LN_2: f64 = std::f64::consts::LN_2;

fn report(number: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "[{}] criterion {number} ({name}): {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number} ({name}) failed: {detail}");
}

fn random_simplex(d: usize, rng: &mut ChaCha8Rng) -> ProbabilityVector<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(1e-3..1.0)).collect();
    normalize(&raw).unwrap()
}

#[test]
fn criterion_1_channel_capacity() {
    let cfg = CapacityConfig {
        tol: 1e-12,
        max_iters: 100_000,
    };
    let cases: Vec<(&str, DiscreteChannel<f64>, f64, f64)> = vec![
        (
            "BSC(0.1)",
            DiscreteChannel::binary_symmetric(0.1).unwrap(),
            {
                let p: f64 = 0.1;
                1.0 + p * p.log2() + (1.0 - p) * (1.0 - p).log2()
            },
            1e-8,
        ),
        (
            "BEC(0.3)",
            DiscreteChannel::binary_erasure(0.3).unwrap(),
            0.7,
            1e-8,
        ),
        (
            "identity 4x4",
            DiscreteChannel::identity(4),
            2.0,
            1e-10,
        ),
    ];

    let mut pass = true;
    let mut detail = String::new();
    for (name, ch, expected_bits, tol_bits) in cases {
        let start = Instant::now();
        let (res, trace) = capacity(&ch, &cfg).unwrap();
        let elapsed = start.elapsed();
        let bits = res.capacity / LN_2;
        let err = (bits - expected_bits).abs();

        let monotone = trace
            .records
            .windows(2)
            .all(|w| w[1].objective >= w[0].objective - 1e-14);
        let certified = verify_capacity(&ch, &res.input_dist, res.capacity, 1e-6).unwrap();
        let timely = elapsed.as_secs_f64() < 1.0;

        let ok = res.converged && err < tol_bits && monotone && certified && timely;
        pass &= ok;
        detail.push_str(&format!(
            "{name}: |C-C*|={err:.2e} bits, monotone={monotone}, certificate={certified}, {:.0}ms; ",
            elapsed.as_secs_f64() * 1e3
        ));
    }
    report(1, "channel capacity", pass, detail.trim_end());
}

#[test]
fn criterion_2_gmm_monotonicity() {
    // Fixed two-component 1-D dataset, N = 400.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lo = Normal::new(0.0, 1.0).unwrap();
    let hi = Normal::new(5.0, 1.0).unwrap();
    let data = Dataset::from_column(
        (0..400)
            .map(|i| {
                if i % 2 == 0 {
                    lo.sample(&mut rng)
                } else {
                    hi.sample(&mut rng)
                }
            })
            .collect::<Vec<f64>>(),
    )
    .unwrap();

    let mut runs_ok = 0;
    for seed in 0..20 {
        let mut params = init_from_data(&data, 2, seed).unwrap();
        let mut ok = true;
        let mut prev_ll = avg_log_likelihood(&params, &data).unwrap();
        for _ in 0..50 {
            let resp = e_step(&params, &data).unwrap();
            let after_e = joint_divergence_objective(&data, &resp, &params).unwrap();
            let new_params = m_step(&data, &resp).unwrap();
            let after_m = joint_divergence_objective(&data, &resp, &new_params).unwrap();
            // e-step of the following round closes this round's check.
            let resp_next = e_step(&new_params, &data).unwrap();
            let after_e_next =
                joint_divergence_objective(&data, &resp_next, &new_params).unwrap();
            ok &= after_m <= after_e + 1e-10;
            ok &= after_e_next <= after_m + 1e-10;
            let ll = avg_log_likelihood(&new_params, &data).unwrap();
            ok &= ll >= prev_ll - 1e-10;
            prev_ll = ll;
            params = new_params;
        }
        if ok {
            runs_ok += 1;
        }
    }
    report(
        2,
        "GMM em monotonicity",
        runs_ok == 20,
        &format!("{runs_ok}/20 seeded runs monotone per half-step (slack 1e-10) with non-decreasing log-likelihood"),
    );
}

/// Independent 1-D minimizer of D(P, Q) over the ratio slice: free
/// coordinates reduce analytically, the pair mass is found by bisection
/// on the strictly increasing derivative.
fn numeric_pair_projection(
    theta: &[f64],
    i: usize,
    j: usize,
    wins_ij: f64,
    wins_ji: f64,
) -> Vec<f64> {
    let r = wins_ij / (wins_ij + wins_ji);
    let rest: f64 = (0..theta.len())
        .filter(|&k| k != i && k != j)
        .map(|k| theta[k])
        .sum();
    if rest == 0.0 {
        let mut p = vec![0.0; theta.len()];
        p[i] = r;
        p[j] = 1.0 - r;
        return p;
    }
    let fp = |s: f64| {
        r * (r * s / theta[i]).ln() + (1.0 - r) * ((1.0 - r) * s / theta[j]).ln()
            - ((1.0 - s) / rest).ln()
    };
    let (mut lo, mut hi) = (1e-15, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fp(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let mut p: Vec<f64> = theta.iter().map(|&t| (1.0 - s) * t / rest).collect();
    p[i] = r * s;
    p[j] = (1.0 - r) * s;
    p
}

/// Minorization-maximization likelihood maximizer for the ratio model:
/// an independent route to the maximum-likelihood estimate.
fn mm_likelihood_maximizer(counts: &ComparisonCounts, iters: usize) -> PreferenceParams<f64> {
    let n = counts.num_items();
    let mut theta = vec![1.0 / n as f64; n];
    for _ in 0..iters {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let wins: f64 = (0..n).map(|j| counts.wins(i, j) as f64).sum();
            let mut denom = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let pair = (counts.wins(i, j) + counts.wins(j, i)) as f64;
                if pair > 0.0 {
                    denom += pair / (theta[i] + theta[j]);
                }
            }
            next[i] = if denom > 0.0 { wins / denom } else { theta[i] };
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        theta = next;
    }
    PreferenceParams::new(ProbabilityVector::new(theta).unwrap()).unwrap()
}

#[test]
fn criterion_3_bradley_terry() {
    // Exact recovery on consistency-constructed counts.
    let cfg = BtConfig {
        smoothing: None,
        em: EmConfig {
            tol: 1e-20,
            max_iters: 200_000,
        },
    };
    let mut pass = true;
    let mut detail = String::new();
    for n in [3usize, 5, 8] {
        let weights: Vec<u64> = (1..=n as u64).collect();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    triplets.push((i, j, weights[i]));
                }
            }
        }
        let counts = ComparisonCounts::from_triplets(n, &triplets).unwrap();
        let (fitted, trace) = fit_bt_em(&counts, &PreferenceParams::uniform(n), &cfg).unwrap();
        let total: f64 = weights.iter().map(|&w| w as f64).sum();
        let max_err = (0..n)
            .map(|k| (fitted.theta()[k] - weights[k] as f64 / total).abs())
            .fold(0.0, f64::max);
        let monotone = trace.is_monotone(infogeo::Direction::NonIncreasing, 1e-10);
        pass &= max_err < 1e-8 && monotone;
        detail.push_str(&format!("N={n}: recovery err={max_err:.2e}, F monotone={monotone}; "));
    }

    // Closed-form projection vs the numeric constrained minimizer.
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(3..8);
        let q = PreferenceParams::new(random_simplex(d, &mut rng)).unwrap();
        let i = rng.gen_range(0..d);
        let j = (i + rng.gen_range(1..d)) % d;
        let (wins_ij, wins_ji) = (rng.gen_range(1..30) as u64, rng.gen_range(1..30) as u64);
        let counts = ComparisonCounts::from_triplets(
            d,
            &[(i, j, wins_ij), (j, i, wins_ji)],
        )
        .unwrap();
        let p = e_project_pair(&q, i, j, &counts).unwrap();
        let oracle =
            numeric_pair_projection(q.theta().as_slice(), i, j, wins_ij as f64, wins_ji as f64);
        for k in 0..d {
            worst = worst.max((p[k] - oracle[k]).abs());
        }
    }
    pass &= worst < 1e-8;
    detail.push_str(&format!("closed form vs numeric: max err={worst:.2e}; "));

    // Likelihood gap against a direct MM maximizer: reported, not
    // asserted zero, and bit-for-bit reproducible under the fixed seed.
    let run = || -> (f64, f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let n = 5;
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                triplets.push((i, j, rng.gen_range(1..25) as u64));
                triplets.push((j, i, rng.gen_range(1..25) as u64));
            }
        }
        let counts = ComparisonCounts::from_triplets(n, &triplets).unwrap();
        let (fitted, _) = fit_bt_em(&counts, &PreferenceParams::uniform(n), &cfg).unwrap();
        let f_loglik = bt_log_likelihood(&counts, &fitted).unwrap();
        let mle = mm_likelihood_maximizer(&counts, 20_000);
        let mle_loglik = bt_log_likelihood(&counts, &mle).unwrap();
        (f_loglik, mle_loglik, mle_loglik - f_loglik)
    };
    let (f_ll, mle_ll, gap) = run();
    let (f_ll2, _, gap2) = run();
    let reproducible = f_ll.to_bits() == f_ll2.to_bits() && gap.to_bits() == gap2.to_bits();
    pass &= reproducible;
    detail.push_str(&format!(
        "loglik(F-min)={f_ll:.12}, loglik(MLE)={mle_ll:.12}, gap={gap:.3e}, bit-reproducible={reproducible}"
    ));

    report(3, "Bradley-Terry", pass, &detail);
}

#[test]
fn criterion_4_modal_regression() {
    let mut pass = true;
    let mut detail = String::new();

    // Ascent with slack 1e-12 on 50 seeded problems.
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let noise = Normal::new(0.0, 0.7).unwrap();
    let mut ascent_ok = 0;
    for _ in 0..50 {
        let n = 60;
        let data = RegressionDataset::new(
            (0..n)
                .map(|_| vec![1.0, rng.gen_range(-2.0..2.0)])
                .collect::<Vec<Vec<f64>>>(),
            (0..n)
                .map(|_| 0.5 + noise.sample(&mut rng))
                .collect::<Vec<f64>>(),
        )
        .unwrap();
        let cfg = MlrConfig {
            h: 0.6,
            tol: 1e-13,
            max_iters: 1000,
            ridge: false,
        };
        let init = ols(&data).unwrap();
        let (_, trace) = fit_mlr(&data, &cfg, &init).unwrap();
        if trace.is_monotone(infogeo::Direction::NonDecreasing, 1e-12) {
            ascent_ok += 1;
        }
    }
    pass &= ascent_ok == 50;
    detail.push_str(&format!("{ascent_ok}/50 seeded runs non-decreasing (slack 1e-12); "));

    // Surrogate tangency at 1e-10 and minorization as an inequality.
    let data = RegressionDataset::new(
        (0..30)
            .map(|_| vec![1.0, rng.gen_range(-2.0..2.0)])
            .collect::<Vec<Vec<f64>>>(),
        (0..30)
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect::<Vec<f64>>(),
    )
    .unwrap();
    let h = 0.8;
    let mut tangency_ok = true;
    let mut minorization_ok = true;
    for _ in 0..50 {
        let anchor = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let gamma_here = mlr_surrogate(&anchor, &anchor, &data, h).unwrap();
        let log_obj = mlr_objective(&anchor, &data, h).unwrap().ln();
        tangency_ok &= (gamma_here - log_obj).abs() < 1e-10;
        let probe = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
        let gamma = mlr_surrogate(&probe, &anchor, &data, h).unwrap();
        minorization_ok &= gamma <= mlr_objective(&probe, &data, h).unwrap().ln() + 1e-14;
    }
    pass &= tangency_ok && minorization_ok;
    detail.push_str(&format!(
        "tangency@1e-10={tangency_ok}, minorization={minorization_ok}; "
    ));

    // Skewed noise: the modal intercept must beat the OLS intercept.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let core = Normal::new(0.0, 0.4).unwrap();
    let tail = Normal::new(3.0, 1.5).unwrap();
    let truth = [1.5, 2.0];
    let xs: Vec<f64> = (0..400).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let data = RegressionDataset::new(
        xs.iter().map(|&x| vec![1.0, x]).collect(),
        xs.iter()
            .map(|&x| {
                let eps = if rng.gen_bool(0.25) {
                    tail.sample(&mut rng)
                } else {
                    core.sample(&mut rng)
                };
                truth[0] + truth[1] * x + eps
            })
            .collect(),
    )
    .unwrap();
    let beta_ols = ols(&data).unwrap();
    let cfg = MlrConfig {
        h: 0.5,
        tol: 1e-13,
        max_iters: 5000,
        ridge: false,
    };
    let (beta_mlr, _) = fit_mlr(&data, &cfg, &beta_ols).unwrap();
    let mlr_err = (beta_mlr[0] - truth[0]).abs();
    let ols_err = (beta_ols[0] - truth[0]).abs();
    pass &= mlr_err < ols_err;
    detail.push_str(&format!(
        "skewed noise: |modal intercept err|={mlr_err:.3} < |OLS err|={ols_err:.3}"
    ));

    report(4, "modal regression", pass, &detail);
}

fn random_categorical_points(
    spec: &ExpFamilySpec<f64>,
    d: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<DualPoint<f64>> {
    (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let eta: Vec<f64> = raw[..d - 1].iter().map(|&v| v / total).collect();
            DualPoint::from_eta(spec, eta).unwrap()
        })
        .collect()
}

fn fd_check(
    spec: &ExpFamilySpec<f64>,
    m_side: bool,
    points: &[DualPoint<f64>],
    sub: &Subspace<f64>,
) -> f64 {
    let loss = |s: &Subspace<f64>| -> f64 {
        (0..points.len())
            .map(|i| {
                let recon = s.reconstruction(i);
                if m_side {
                    let th = eta_to_theta(spec, &recon).unwrap();
                    let rp = DualPoint::from_theta(spec, th).unwrap();
                    infogeo::epca::kl(spec, &rp, &points[i])
                } else {
                    let rp = DualPoint::from_theta(spec, recon).unwrap();
                    infogeo::epca::kl(spec, &points[i], &rp)
                }
            })
            .sum()
    };
    let (dw, du) = if m_side {
        mpca_gradients(spec, sub, points).unwrap()
    } else {
        epca_gradients(spec, sub, points).unwrap()
    };
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    let k = sub.num_basis();
    let dim = sub.basis()[0].len();
    for i in 0..points.len() {
        for j in 0..k.saturating_sub(1) {
            let mut plus = sub.clone();
            let mut minus = sub.clone();
            let mut wp = plus.weights()[i].to_vec();
            let mut wm = minus.weights()[i].to_vec();
            wp[j] += eps;
            wp[j + 1] -= eps;
            wm[j] -= eps;
            wm[j + 1] += eps;
            plus = Subspace::new(plus.basis().to_vec(), {
                let mut rows = plus.weights().to_vec();
                rows[i] = wp;
                rows
            })
            .unwrap();
            minus = Subspace::new(minus.basis().to_vec(), {
                let mut rows = minus.weights().to_vec();
                rows[i] = wm;
                rows
            })
            .unwrap();
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * eps);
            let an = dw[i][j] - dw[i][j + 1];
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-3));
        }
    }
    for j in 0..k {
        for d in 0..dim {
            let mut bp = sub.basis().to_vec();
            let mut bm = sub.basis().to_vec();
            bp[j][d] += eps;
            bm[j][d] -= eps;
            let plus = Subspace::new(bp, sub.weights().to_vec()).unwrap();
            let minus = Subspace::new(bm, sub.weights().to_vec()).unwrap();
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * eps);
            let an = du[j][d];
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-3));
        }
    }
    worst
}

#[test]
fn criterion_5_epca() {
    let mut pass = true;
    let mut detail = String::new();
    let mut rng = ChaCha8Rng::seed_from_u64(550);

    // Analytic gradients vs central finite differences, 50 instances
    // per family kind.
    let mut worst_cat: f64 = 0.0;
    let mut worst_gauss: f64 = 0.0;
    for t in 0..50 {
        let d = rng.gen_range(3..6);
        let spec = ExpFamilySpec::categorical(d).unwrap();
        let n = rng.gen_range(3..7);
        let k = rng.gen_range(2..=n.min(3));
        let points = random_categorical_points(&spec, d, n, &mut rng);
        let anchors = random_categorical_points(&spec, d, k, &mut rng);
        let m_side = t % 2 == 1;
        let basis: Vec<Vec<f64>> = anchors
            .iter()
            .map(|p| {
                if m_side {
                    p.eta().to_vec()
                } else {
                    p.theta().to_vec()
                }
            })
            .collect();
        let weights: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|&v| v / s).collect()
            })
            .collect();
        let sub = Subspace::new(basis, weights).unwrap();
        worst_cat = worst_cat.max(fd_check(&spec, m_side, &points, &sub));

        let gspec = ExpFamilySpec::gaussian_fixed_variance(rng.gen_range(0.5..2.0)).unwrap();
        let gn = rng.gen_range(3..7);
        let gk = 2.min(gn);
        let gpoints: Vec<DualPoint<f64>> = (0..gn)
            .map(|_| DualPoint::from_eta(&gspec, vec![rng.gen_range(-2.0..2.0)]).unwrap())
            .collect();
        let gbasis: Vec<Vec<f64>> = (0..gk)
            .map(|_| vec![rng.gen_range(-2.0..2.0)])
            .collect();
        let gweights: Vec<Vec<f64>> = (0..gn)
            .map(|_| {
                let a: f64 = rng.gen_range(0.2..0.8);
                vec![a, 1.0 - a]
            })
            .collect();
        let gsub = Subspace::new(gbasis, gweights).unwrap();
        worst_gauss = worst_gauss.max(fd_check(&gspec, t % 2 == 0, &gpoints, &gsub));
    }
    pass &= worst_cat < 1e-6 && worst_gauss < 1e-6;
    detail.push_str(&format!(
        "FD rel err: categorical={worst_cat:.2e}, gaussian={worst_gauss:.2e}; "
    ));

    // K = 1 alternating fits agree with the closed-form centers.
    let spec = ExpFamilySpec::categorical(4).unwrap();
    let points = random_categorical_points(&spec, 4, 9, &mut rng);
    let cfg = EpcaConfig::default();
    let (sub_e, _) = fit_epca(&spec, &points, 1, &cfg).unwrap();
    let center_e = e_center(&spec, &points).unwrap();
    let err_e = (0..3)
        .map(|d| (sub_e.basis()[0][d] - center_e.theta()[d]).abs())
        .fold(0.0, f64::max);
    let (sub_m, _) = fit_mpca(&spec, &points, 1, &cfg).unwrap();
    let center_m = m_center(&spec, &points).unwrap();
    let err_m = (0..3)
        .map(|d| (sub_m.basis()[0][d] - center_m.eta()[d]).abs())
        .fold(0.0, f64::max);
    pass &= err_e < 1e-8 && err_m < 1e-8;
    detail.push_str(&format!("K=1 vs centers: e={err_e:.2e}, m={err_m:.2e}; "));

    // Exact-subspace instances reach (numerically) zero loss.
    let anchors = random_categorical_points(&spec, 4, 2, &mut rng);
    let e_points: Vec<DualPoint<f64>> = (0..8)
        .map(|_| {
            let w: f64 = rng.gen_range(0.1..0.9);
            let theta: Vec<f64> = (0..3)
                .map(|d| w * anchors[0].theta()[d] + (1.0 - w) * anchors[1].theta()[d])
                .collect();
            DualPoint::from_theta(&spec, theta).unwrap()
        })
        .collect();
    let (_, trace_e) = fit_epca(&spec, &e_points, 2, &cfg).unwrap();
    let loss_e = trace_e.last_objective().unwrap();

    let m_points: Vec<DualPoint<f64>> = (0..8)
        .map(|_| {
            let w: f64 = rng.gen_range(0.1..0.9);
            let eta: Vec<f64> = (0..3)
                .map(|d| w * anchors[0].eta()[d] + (1.0 - w) * anchors[1].eta()[d])
                .collect();
            DualPoint::from_eta(&spec, eta).unwrap()
        })
        .collect();
    let (_, trace_m) = fit_mpca(&spec, &m_points, 2, &cfg).unwrap();
    let loss_m = trace_m.last_objective().unwrap();
    pass &= loss_e < 1e-10 && loss_m < 1e-10;
    detail.push_str(&format!("exact-subspace loss: e={loss_e:.2e}, m={loss_m:.2e}"));

    report(5, "e-PCA / m-PCA", pass, &detail);
}

#[test]
fn criterion_6_geometry_core() {
    let mut pass = true;
    let mut detail = String::new();
    let mut rng = ChaCha8Rng::seed_from_u64(606);

    // m-projections onto e-flat one-parameter families: the projection
    // parameter comes from bisection on the closed-form derivative
    // D'(t) = Σ_k (r_k(t) − q_k) log(p1_k / p0_k).
    let mut done = 0;
    let mut worst_residual: f64 = 0.0;
    while done < 100 {
        let p0 = random_simplex(3, &mut rng);
        let p1 = random_simplex(3, &mut rng);
        let q = random_simplex(3, &mut rng);
        let family = |t: f64| {
            e_interpolate(&p0, &p1, GeodesicParam::new(t).unwrap()).unwrap()
        };
        let slope = |t: f64| -> f64 {
            let r = family(t);
            (0..3)
                .map(|k| (r[k] - q[k]) * (p1[k] / p0[k]).ln())
                .sum()
        };
        // Keep only instances whose projection is interior.
        if slope(0.0) >= 0.0 || slope(1.0) <= 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = family(0.5 * (lo + hi));
        for &tp in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            let p = family(tp);
            let res = pythagorean_residual(&q, &mid, &p).unwrap();
            worst_residual = worst_residual.max(res.abs());
        }
        done += 1;
    }
    pass &= worst_residual < 1e-8;
    detail.push_str(&format!(
        "pythagorean residual over 100 m-projections: max={worst_residual:.2e}; "
    ));

    // 10,000 random property cases: KL nonnegativity and geodesic
    // endpoint identities.
    let mut props_ok = true;
    for _ in 0..10_000 {
        let d = rng.gen_range(2..6);
        let p = random_simplex(d, &mut rng);
        let q = random_simplex(d, &mut rng);
        let kl = kl_divergence(&p, &q).unwrap();
        props_ok &= kl >= 0.0;
        if p.linf_distance(&q) < 1e-12 {
            props_ok &= kl < 1e-10;
        }
        let zero = GeodesicParam::new(0.0).unwrap();
        let one = GeodesicParam::new(1.0).unwrap();
        props_ok &= m_interpolate(&p, &q, zero).unwrap().linf_distance(&p) < 1e-14;
        props_ok &= m_interpolate(&p, &q, one).unwrap().linf_distance(&q) < 1e-14;
        props_ok &= e_interpolate(&p, &q, zero).unwrap().linf_distance(&p) < 1e-12;
        props_ok &= e_interpolate(&p, &q, one).unwrap().linf_distance(&q) < 1e-12;
    }
    pass &= props_ok;
    detail.push_str(&format!(
        "10,000 property cases (KL >= 0, endpoint identities): {props_ok}"
    ));

    report(6, "geometry core", pass, &detail);
}

#[test]
fn criterion_7_bregman() {
    let mut pass = true;
    let mut detail = String::new();
    let mut rng = ChaCha8Rng::seed_from_u64(707);

    // Exponential kind equals KL on 1,000 random normalized pairs.
    let exp_u = UFunction::exponential();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.gen_range(2..6);
        let p = random_simplex(d, &mut rng);
        let q = random_simplex(d, &mut rng);
        let lhs = bregman_divergence(&exp_u, &p, &q).unwrap();
        let rhs = kl_divergence(&p, &q).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    pass &= worst < 1e-12;
    detail.push_str(&format!("exp-kind vs KL: max err={worst:.2e}; "));

    // Legendre round-trips at 1e-10 for all three kinds.
    let mut rt_worst: f64 = 0.0;
    for _ in 0..500 {
        let kinds = [
            UFunction::exponential(),
            UFunction::eta_type(rng.gen_range(0.001..0.5)).unwrap(),
            UFunction::beta_type(rng.gen_range(0.05..2.0)).unwrap(),
        ];
        for u in kinds {
            let z: f64 = rng.gen_range(-3.0..3.0);
            if let Ok(fwd) = u.u_forward(z) {
                let back = u.u_inverse(fwd).unwrap();
                rt_worst = rt_worst.max((back - z).abs());
            }
        }
    }
    pass &= rt_worst < 1e-10;
    detail.push_str(&format!("Legendre round-trip: max err={rt_worst:.2e}; "));

    // β → 0 linear convergence to the KL value on a fixed pair.
    let p = ProbabilityVector::new(vec![0.2f64, 0.5, 0.3]).unwrap();
    let q = ProbabilityVector::new(vec![0.4f64, 0.25, 0.35]).unwrap();
    let kl = kl_divergence(&p, &q).unwrap();
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&b| {
            let u = UFunction::beta_type(b).unwrap();
            (bregman_divergence(&u, &p, &q).unwrap() - kl).abs()
        })
        .collect();
    let linear = (0.05..0.2).contains(&(errs[1] / errs[0]))
        && (0.05..0.2).contains(&(errs[2] / errs[1]));
    pass &= linear;
    detail.push_str(&format!(
        "beta->0 errors {:?} decay linearly: {linear}",
        errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
    ));

    report(7, "Bregman divergences", pass, &detail);
}

#[test]
fn criterion_8_boltzmann() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    let mut rng = ChaCha8Rng::seed_from_u64(88);

    // Generate-and-refit weight recovery, h = 0.
    let mut worst: f64 = 0.0;
    for n in [2usize, 3, 4] {
        let mut truth = BoltzmannParams::<f64>::new(n, 0).unwrap();
        for (i, j) in truth.pairs() {
            truth.set_weight(i, j, rng.gen_range(-1.0..1.0));
        }
        let target = bm_distribution(&truth).unwrap();
        let cfg = FitConfig {
            moment_tol: 1e-10,
            ..FitConfig::default()
        };
        let fitted =
            fit_weights_to_joint(&target, &BoltzmannParams::new(n, 0).unwrap(), &cfg).unwrap();
        for (i, j) in truth.pairs() {
            worst = worst.max((fitted.weight(i, j) - truth.weight(i, j)).abs());
        }
    }
    pass &= worst < 1e-6;
    detail.push_str(&format!("weight recovery err={worst:.2e}; "));

    // Bilevel trace and visible-marginal constraint for (v, h) pairs.
    for (v, h) in [(2usize, 1usize), (3, 1)] {
        let mut gen = BoltzmannParams::new(v, h).unwrap();
        for (i, j) in gen.pairs() {
            gen.set_weight(i, j, rng.gen_range(-1.2..1.2));
        }
        let p_hat = visible_marginal(&bm_distribution(&gen).unwrap(), v, h).unwrap();
        let (_, trace) = fit_bm_em(&p_hat, v, h, &FitConfig::default()).unwrap();
        let mut seq = Vec::new();
        for rec in &trace.records {
            seq.push(rec.extra("after_e").unwrap());
            seq.push(rec.extra("after_m").unwrap());
        }
        let monotone = seq.windows(2).all(|w| w[1] <= w[0] + 1e-10);
        pass &= monotone;
        detail.push_str(&format!("(v={v},h={h}) half-step monotone={monotone}; "));
    }

    // Visible marginal exact after every projection.
    let mut marg_worst: f64 = 0.0;
    for _ in 0..20 {
        let mut params = BoltzmannParams::new(3, 1).unwrap();
        for (i, j) in params.pairs() {
            params.set_weight(i, j, rng.gen_range(-1.5..1.5));
        }
        let p_hat = normalize(
            &(0..8)
                .map(|_| rng.gen_range(0.02..1.0))
                .collect::<Vec<f64>>(),
        )
        .unwrap();
        let joint = project_to_data(&p_hat, &params).unwrap();
        let marg = visible_marginal(&joint, 3, 1).unwrap();
        marg_worst = marg_worst.max(marg.linf_distance(&p_hat));
    }
    pass &= marg_worst < 1e-12;
    detail.push_str(&format!("projection marginal err={marg_worst:.2e}; "));

    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 10.0;
    detail.push_str(&format!("suite time={elapsed:.2}s"));

    report(8, "Boltzmann machines", pass, &detail);
}

//! Experiment drivers shared by the CLI and the acceptance tests.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{self, ShapesConfig, SpectrumSpec};
use crate::error::{Error, Result};
use crate::game::{self, GameConfig};
use crate::linear_mse::{pca_solution, solve_mixed, solve_pure};
use crate::oracles::{fit_logistic, logistic_oracle, mean_cross_entropy, stable_sigmoid, EmpiricalDistribution, FiniteClassOracle, MseOracle, PredictorFit};
use crate::regret::mixture_regret_linear;
use crate::rng::{self, TAG_DATA, TAG_TRIAL};
use crate::spd::SpdMatrix;
use crate::types::{MixedRepresentation, ResponseClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub d: usize,
    pub algo_regret: f64,
    pub theory_regret: f64,
    pub ratio: f64,
    pub atoms_used: usize,
}

/// Game solution against the closed form on a random log-normal diagonal
/// covariance with `S = I`. `algo_regret` is the exact worst-case regret of
/// the returned mixture.
pub fn ratio_trial(d: usize, r: usize, sigma0: f64, cfg: &GameConfig, trial: u64) -> Result<RatioRow> {
    let mut rng = rng::stream(cfg.seed, TAG_DATA, ((d as u64) << 32) | trial);
    let sigma_x = data::make_covariance(&SpectrumSpec::log_normal(sigma0, d), &mut rng)?;
    let s = SpdMatrix::identity(d);
    let theory = solve_mixed(&sigma_x, &s, r)?.regret;
    let oracle = MseOracle::new(sigma_x.clone(), s.clone())?;
    let mut cfg = cfg.clone();
    cfg.seed = rng::derive_seed(cfg.seed, TAG_TRIAL, ((d as u64) << 32) | trial);
    let res = game::solve(&oracle, &cfg, r)?;
    let algo = mixture_regret_linear(&res.mixture, &ResponseClass::quadratic_ball(s)?, &sigma_x)?.value;
    Ok(RatioRow {
        d,
        algo_regret: algo,
        theory_regret: theory,
        ratio: algo / theory,
        atoms_used: res.mixture.support_size(),
    })
}

/// `(m, regret)` rows from one logistic run with budget `max(ms)`; the
/// regret at `m` is the best prefix regret among the first `m` iterations.
pub fn logistic_curve(d: usize, r: usize, b: usize, ms: &[usize], cfg: &GameConfig) -> Result<Vec<(usize, f64)>> {
    let m_max = *ms.iter().max().ok_or_else(|| Error::Config("empty m sweep".into()))?;
    let mut rng = rng::stream(cfg.seed, TAG_DATA, 0);
    let samples = data::gaussian_samples(d, b, &SpdMatrix::identity(d), &mut rng)?;
    let oracle = logistic_oracle(samples, SpdMatrix::identity(d))?;
    let mut cfg = cfg.clone();
    cfg.m = m_max;
    let res = game::solve(&oracle, &cfg, r)?;
    Ok(ms.iter().map(|&m| (m, prefix_min(&res.reg_trace, m))).collect())
}

fn prefix_min(trace: &[f64], m: usize) -> f64 {
    trace[..m.min(trace.len())].iter().copied().fold(f64::INFINITY, f64::min)
}

/// `(k, reg_k)` for a log-normal covariance, `S = I`.
pub fn learning_curve(d: usize, r: usize, sigma0: f64, cfg: &GameConfig) -> Result<Vec<(usize, f64)>> {
    let mut rng = rng::stream(cfg.seed, TAG_DATA, 0);
    let sigma_x = data::make_covariance(&SpectrumSpec::log_normal(sigma0, d), &mut rng)?;
    let oracle = MseOracle::new(sigma_x, SpdMatrix::identity(d))?;
    let res = game::solve(&oracle, cfg, r)?;
    Ok(res.reg_trace.iter().enumerate().map(|(k, &v)| (k + 1, v)).collect())
}

/// One row of the closed-form sweep: pure and mixed regret with `ell*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub alpha: f64,
    pub pure_regret: f64,
    pub mixed_regret: f64,
    pub ell_star: usize,
}

/// `Sigma_x = diag(i^{-alpha})` against `S = diag(i^{s_exponent})`, scaled
/// so that `S` has unit top entry.
pub fn spectrum_sweep(d: usize, r: usize, alphas: &[f64], s_exponent: f64) -> Result<Vec<SpectrumRow>> {
    let s_diag: Vec<f64> = (1..=d).map(|i| (i as f64).powf(s_exponent)).collect();
    let top = s_diag.iter().copied().fold(f64::MIN, f64::max);
    let s = SpdMatrix::from_diagonal(&s_diag.iter().map(|v| v / top).collect::<Vec<_>>())?;
    let mut rng = rng::stream(0, TAG_DATA, 0);
    alphas
        .iter()
        .map(|&alpha| {
            let sigma_x = data::make_covariance(&SpectrumSpec::power_law(alpha, d), &mut rng)?;
            let pure = solve_pure(&sigma_x, &s, r)?;
            let mixed = solve_mixed(&sigma_x, &s, r)?;
            Ok(SpectrumRow {
                alpha,
                pure_regret: pure.regret,
                mixed_regret: mixed.regret,
                ell_star: mixed.ell.ell_star,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapesRow {
    pub r: usize,
    pub method: String,
    pub worst_case_xent: f64,
    pub avg_xent: f64,
    pub worst_case_acc: f64,
    pub avg_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapesExperiment {
    pub n_train: usize,
    pub n_test: usize,
    pub ranks: Vec<usize>,
    /// PCA ranks evaluated in addition to `ranks`.
    #[serde(default)]
    pub pca_ranks: Vec<usize>,
    pub seed: u64,
}

/// Held-out evaluation of a mixture on the shapes labels: each atom's
/// predictor is fit on the training split, losses and accuracies are
/// averaged over atoms with the mixture weights.
pub fn evaluate_on_test(
    mix: &MixedRepresentation,
    train: &DMatrix<f64>,
    train_labels: &[Vec<f64>],
    test: &DMatrix<f64>,
    test_labels: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = train_labels.len();
    let mut xent = vec![0.0; t];
    let mut acc = vec![0.0; t];
    for (atom, w) in mix.iter() {
        if w == 0.0 {
            continue;
        }
        let z_train = train * atom.matrix();
        let z_test = test * atom.matrix();
        for i in 0..t {
            let target = to_targets(&train_labels[i]);
            let q = fit_logistic(&z_train, &target, None, PredictorFit::Full)?;
            let test_target = to_targets(&test_labels[i]);
            xent[i] += w * mean_cross_entropy(&z_test, &test_target, &q);
            let logits = &z_test * &q;
            let correct = logits
                .iter()
                .zip(test_target.iter())
                .filter(|(&l, &y)| (stable_sigmoid(l) >= 0.5) == (y == 1.0))
                .count();
            acc[i] += w * correct as f64 / test.nrows() as f64;
        }
    }
    Ok((xent, acc))
}

fn to_targets(labels: &[f64]) -> DVector<f64> {
    DVector::from_iterator(labels.len(), labels.iter().map(|&y| 0.5 * (1.0 + y)))
}

fn summarize(r: usize, method: &str, xent: &[f64], acc: &[f64]) -> ShapesRow {
    let n = xent.len() as f64;
    ShapesRow {
        r,
        method: method.into(),
        worst_case_xent: xent.iter().copied().fold(f64::MIN, f64::max),
        avg_xent: xent.iter().sum::<f64>() / n,
        worst_case_acc: acc.iter().copied().fold(f64::MAX, f64::min),
        avg_acc: acc.iter().sum::<f64>() / n,
    }
}

/// Optimized mixtures versus PCA on held-out shapes images.
pub fn shapes_experiment(exp: &ShapesExperiment, cfg: &GameConfig) -> Result<Vec<ShapesRow>> {
    let train_raw = data::shapes_dataset(&ShapesConfig::new(exp.n_train, rng::derive_seed(exp.seed, TAG_DATA, 1)))?;
    let test_raw = data::shapes_dataset(&ShapesConfig::new(exp.n_test, rng::derive_seed(exp.seed, TAG_DATA, 2)))?;
    let train_dist = EmpiricalDistribution::new(train_raw.images.clone())?;
    let mean = train_dist.mean();
    let train = train_dist.centered_by(&mean);
    let test = EmpiricalDistribution::new(test_raw.images.clone())?.centered_by(&mean);
    let train_labels = train_raw.label_functions();
    let test_labels = test_raw.label_functions();
    let oracle = FiniteClassOracle::new(train.clone(), train_labels.clone())?;
    let sigma = SpdMatrix::from_product(train.second_moment())?;

    let mut rows = Vec::new();
    let mut cfg = cfg.clone();
    cfg.seed = exp.seed;
    for &r in &exp.ranks {
        let sol = game::run_finite(&oracle, &cfg, r)?;
        let (x, a) = evaluate_on_test(&sol.mixture, train.samples(), &train_labels, test.samples(), &test_labels)?;
        rows.push(summarize(r, "optimized", &x, &a));
    }
    let mut pca_ranks: Vec<usize> = exp.ranks.iter().chain(&exp.pca_ranks).copied().collect();
    pca_ranks.sort_unstable();
    pca_ranks.dedup();
    for r in pca_ranks {
        let (rep, _) = pca_solution(&sigma, r)?;
        let mix = MixedRepresentation::single(rep);
        let (x, a) = evaluate_on_test(&mix, train.samples(), &train_labels, test.samples(), &test_labels)?;
        rows.push(summarize(r, "pca", &x, &a));
    }
    Ok(rows)
}

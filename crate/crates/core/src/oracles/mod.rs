//! Regret oracles: the pluggable backends that compute regret values,
//! gradients, predictor fits and feasibility maps for a loss/class pair.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::SpdMatrix;
use crate::tol;

mod finite;
mod logistic;
mod mse;

pub use finite::{finite_class_oracle, FiniteClassOracle};
pub use logistic::{fit_logistic, logistic_oracle, mean_cross_entropy, softplus, stable_sigmoid, LogisticOracle};
pub use mse::{mse_oracle, MseOracle};

/// RNG type threaded through the game engine and oracles.
pub type GameRng = ChaCha8Rng;

/// How predictors are refit inside the game loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PredictorFit {
    /// Closed form when available, otherwise iterate to tolerance.
    Full,
    /// `g` warm-started gradient steps of size `eta`.
    Steps { g: usize, eta: f64 },
}

impl Default for PredictorFit {
    fn default() -> Self {
        Self::Full
    }
}

/// The regret of a representation/function pair and its derivatives.
///
/// Representations are passed as raw `d x r` matrices so the inner loops of
/// the game engine avoid re-validation.
pub trait RegretOracle: Sync {
    /// How a response function is identified: a parameter vector for
    /// continuous classes, an index for finite ones.
    type Func: Clone + Send + Sync + std::fmt::Debug;

    fn dim(&self) -> usize;

    /// Expected loss excess of predictor `q` on `z = R^T x` for function `f`.
    fn loss(&self, rep: &DMatrix<f64>, f: &Self::Func, q: &DVector<f64>) -> f64;

    fn fit_predictor(
        &self,
        rep: &DMatrix<f64>,
        f: &Self::Func,
        warm: Option<&DVector<f64>>,
        fit: PredictorFit,
    ) -> Result<DVector<f64>>;

    /// Regret with a fully fitted predictor.
    fn regret(&self, rep: &DMatrix<f64>, f: &Self::Func) -> Result<f64> {
        let q = self.fit_predictor(rep, f, None, PredictorFit::Full)?;
        Ok(self.loss(rep, f, &q))
    }

    fn grad_q(&self, rep: &DMatrix<f64>, f: &Self::Func, q: &DVector<f64>) -> DVector<f64>;

    fn grad_r(&self, rep: &DMatrix<f64>, f: &Self::Func, q: &DVector<f64>) -> DMatrix<f64>;

    fn normalize_r(&self, rep: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        normalize_r(rep)
    }

    /// A direction worth placing in a fresh representation atom that must
    /// serve `f`, if the oracle knows one.
    fn atom_seed(&self, f: &Self::Func) -> Option<DVector<f64>>;
}

/// Oracles over a continuous class `{ f : ||f||_S <= 1 }`.
pub trait ContinuousOracle: RegretOracle<Func = DVector<f64>> {
    fn grad_f(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DVector<f64>;

    /// Projection onto the class. Maps to the boundary `||f||_S = 1`.
    fn project_f(&self, f: &DVector<f64>) -> DVector<f64>;

    /// Random feasible starting point for the adversarial search.
    fn random_function(&self, rng: &mut GameRng) -> DVector<f64> {
        let g = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        self.project_f(&g)
    }

    /// Number of rank-one atoms harvested by the initialization run for a
    /// target rank `r`.
    fn init_harvest(&self, r: usize) -> usize;
}

/// Oracles over a finite list of response functions.
pub trait FiniteOracle: RegretOracle<Func = usize> {
    fn num_functions(&self) -> usize;
}

/// Samples from the feature distribution; expectations are row averages.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    samples: DMatrix<f64>,
}

impl EmpiricalDistribution {
    pub fn new(samples: DMatrix<f64>) -> Result<Self> {
        if samples.nrows() < 2 || samples.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "need at least 2 samples of positive dimension, got {}x{}",
                samples.nrows(),
                samples.ncols()
            )));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("samples contain non-finite values".into()));
        }
        Ok(Self { samples })
    }

    /// B x d sample matrix, one sample per row.
    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    /// Column means.
    pub fn mean(&self) -> DVector<f64> {
        self.samples.row_mean().transpose()
    }

    /// Copy with the column means subtracted.
    pub fn centered(&self) -> Self {
        let mean = self.samples.row_mean();
        let mut samples = self.samples.clone();
        for mut row in samples.row_iter_mut() {
            row -= &mean;
        }
        Self { samples }
    }

    /// Same shift applied to other data, e.g. a test split.
    pub fn centered_by(&self, mean: &DVector<f64>) -> Self {
        let mut samples = self.samples.clone();
        let m = mean.transpose();
        for mut row in samples.row_iter_mut() {
            row -= &m;
        }
        Self { samples }
    }

    /// Second-moment matrix `X^T X / B`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        self.samples.transpose() * &self.samples / self.len() as f64
    }

    /// Reads a headerless CSV with one sample per row.
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        Self::new(crate::data::read_matrix_csv(path)?)
    }
}

/// `R / ||R||_F`.
pub fn normalize_r(rep: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm = rep.norm();
    if !(norm >= tol::ZERO_NORM) {
        return Err(Error::ZeroRepresentation);
    }
    Ok(rep / norm)
}

/// Quadratic-ball projection that always lands on the boundary.
pub(crate) fn project_to_sphere(s: &SpdMatrix, f: &DVector<f64>) -> DVector<f64> {
    let norm = s.mahalanobis_norm(f);
    if norm > 0.0 && norm.is_finite() {
        f / norm
    } else {
        f.clone()
    }
}

pub(crate) fn all_finite<'a>(it: impl IntoIterator<Item = &'a f64>) -> bool {
    it.into_iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        let r = DMatrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let n = normalize_r(&r).unwrap();
        assert!((n.norm() - 1.0).abs() < 1e-15);
        assert_eq!(normalize_r(&n).unwrap(), n);
        assert!((normalize_r(&(&r * 2.0)).unwrap() - &n).norm() < 1e-15);
        assert!(matches!(normalize_r(&DMatrix::zeros(2, 1)), Err(Error::ZeroRepresentation)));
    }

    #[test]
    fn empirical_distribution_validates() {
        assert!(EmpiricalDistribution::new(DMatrix::zeros(1, 3)).is_err());
        let e = EmpiricalDistribution::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 6.0])).unwrap();
        let c = e.centered();
        assert!(c.mean().norm() < 1e-15);
        assert_eq!(c.samples()[(0, 1)], -2.0);
    }
}

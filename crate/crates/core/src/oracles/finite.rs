use nalgebra::{DMatrix, DVector};

use super::logistic::{fit_logistic, mean_cross_entropy, stable_sigmoid};
use super::{EmpiricalDistribution, FiniteOracle, PredictorFit, RegretOracle};
use crate::error::{Error, Result};
use crate::tol;

/// A finite list of binary labelings of the samples, predicted by logistic
/// regression on `z = R^T x`.
///
/// The loss of a pair is the mean cross-entropy through `z` minus the
/// cross-entropy of the same fitter applied to the raw features, which is
/// computed once per function at construction.
#[derive(Debug, Clone)]
pub struct FiniteClassOracle {
    x: DMatrix<f64>,
    targets: Vec<DVector<f64>>,
    baselines: Vec<f64>,
}

pub fn finite_class_oracle(data: EmpiricalDistribution, labels: Vec<Vec<f64>>) -> Result<FiniteClassOracle> {
    FiniteClassOracle::new(data, labels)
}

impl FiniteClassOracle {
    /// `labels[i][b]` is the `+-1` label function `i` assigns to sample `b`.
    pub fn new(data: EmpiricalDistribution, labels: Vec<Vec<f64>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("finite class needs at least one function".into()));
        }
        let x = data.samples().clone();
        let mut targets = Vec::with_capacity(labels.len());
        let mut baselines = Vec::with_capacity(labels.len());
        for (i, row) in labels.iter().enumerate() {
            if row.len() != x.nrows() {
                return Err(Error::Dimension(format!(
                    "function {i} labels {} samples, data has {}",
                    row.len(),
                    x.nrows()
                )));
            }
            if row.iter().any(|&y| y != 1.0 && y != -1.0) {
                return Err(Error::InvalidInput(format!("function {i} has labels outside {{-1, +1}}")));
            }
            if row.iter().all(|&y| y == row[0]) {
                log::warn!("DegenerateLabels: function {i} is constant on the sample");
            }
            let t = DVector::from_iterator(row.len(), row.iter().map(|&y| 0.5 * (1.0 + y)));
            let q = fit_logistic(&x, &t, None, PredictorFit::Full)?;
            baselines.push(mean_cross_entropy(&x, &t, &q));
            targets.push(t);
        }
        Ok(Self { x, targets, baselines })
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// 0/1 targets of function `i`.
    pub fn targets(&self, i: usize) -> &DVector<f64> {
        &self.targets[i]
    }

    pub fn baseline(&self, i: usize) -> f64 {
        self.baselines[i]
    }

    /// Mean cross-entropy through `rep` with predictor `q`, without the
    /// baseline subtracted.
    pub fn cross_entropy(&self, rep: &DMatrix<f64>, i: usize, q: &DVector<f64>) -> f64 {
        mean_cross_entropy(&(&self.x * rep), &self.targets[i], q)
    }

    fn residual(&self, rep: &DMatrix<f64>, i: usize, q: &DVector<f64>) -> DVector<f64> {
        let b = &self.x * (rep * q);
        DVector::from_fn(self.x.nrows(), |k, _| stable_sigmoid(b[k]) - self.targets[i][k])
    }
}

impl RegretOracle for FiniteClassOracle {
    type Func = usize;

    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn loss(&self, rep: &DMatrix<f64>, f: &usize, q: &DVector<f64>) -> f64 {
        self.cross_entropy(rep, *f, q) - self.baselines[*f]
    }

    fn fit_predictor(
        &self,
        rep: &DMatrix<f64>,
        f: &usize,
        warm: Option<&DVector<f64>>,
        fit: PredictorFit,
    ) -> Result<DVector<f64>> {
        fit_logistic(&(&self.x * rep), &self.targets[*f], warm, fit)
    }

    fn regret(&self, rep: &DMatrix<f64>, f: &usize) -> Result<f64> {
        let q = self.fit_predictor(rep, f, None, PredictorFit::Full)?;
        let value = self.loss(rep, f, &q);
        if value < -tol::NEGATIVE_REGRET_WARN {
            log::warn!("function {f}: representation beats the raw-feature baseline by {:.3e}", -value);
        }
        Ok(value.max(0.0))
    }

    fn grad_q(&self, rep: &DMatrix<f64>, f: &usize, q: &DVector<f64>) -> DVector<f64> {
        let z = &self.x * rep;
        z.transpose() * self.residual(rep, *f, q) / self.x.nrows() as f64
    }

    fn grad_r(&self, rep: &DMatrix<f64>, f: &usize, q: &DVector<f64>) -> DMatrix<f64> {
        self.x.transpose() * self.residual(rep, *f, q) * q.transpose() / self.x.nrows() as f64
    }

    /// Covariance of the features with the centered targets, the direction a
    /// one-dimensional representation would follow first.
    fn atom_seed(&self, f: &usize) -> Option<DVector<f64>> {
        let t = &self.targets[*f];
        let centered = t.add_scalar(-t.mean());
        Some(self.x.transpose() * centered / self.x.nrows() as f64)
    }
}

impl FiniteOracle for FiniteClassOracle {
    fn num_functions(&self) -> usize {
        self.targets.len()
    }
}

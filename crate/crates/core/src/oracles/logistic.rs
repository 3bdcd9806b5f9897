use nalgebra::{DMatrix, DVector};

use super::{all_finite, project_to_sphere, ContinuousOracle, EmpiricalDistribution, PredictorFit, RegretOracle};
use crate::error::{Error, Result};
use crate::spd::SpdMatrix;
use crate::tol;

const NEWTON_MAX_DIM: usize = 50;
const NEWTON_CAP: usize = 200;
const GD_CAP: usize = 5000;

/// `log(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub fn stable_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Binary KL divergence between `sigmoid(a)` and `sigmoid(b)`, in logits.
/// Clamped at zero against cancellation when `a` and `b` nearly agree.
pub(crate) fn kl_logits(a: f64, b: f64) -> f64 {
    (softplus(b) - softplus(a) - stable_sigmoid(a) * (b - a)).max(0.0)
}

/// Mean cross-entropy of predicting soft targets `t` with logits `Z q`.
pub fn mean_cross_entropy(z: &DMatrix<f64>, targets: &DVector<f64>, q: &DVector<f64>) -> f64 {
    let logits = z * q;
    logits
        .iter()
        .zip(targets.iter())
        .map(|(&b, &t)| softplus(b) - t * b)
        .sum::<f64>()
        / z.nrows() as f64
}

fn ce_gradient(z: &DMatrix<f64>, targets: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
    let logits = z * q;
    let resid = DVector::from_fn(z.nrows(), |i, _| stable_sigmoid(logits[i]) - targets[i]);
    z.transpose() * resid / z.nrows() as f64
}

/// Fits `q` minimizing the mean cross-entropy of `sigmoid(Z q)` against soft
/// targets in `[0, 1]`.
///
/// `Full` uses damped Newton with backtracking up to 50 dimensions and
/// gradient descent with step `4 / lambda_max(Z^T Z / B)` above that. On
/// separable data the iterate grows until the caps stop it.
pub fn fit_logistic(
    z: &DMatrix<f64>,
    targets: &DVector<f64>,
    warm: Option<&DVector<f64>>,
    fit: PredictorFit,
) -> Result<DVector<f64>> {
    let k = z.ncols();
    let mut q = match warm {
        Some(w) if w.len() == k => w.clone(),
        _ => DVector::zeros(k),
    };
    if z.norm() < tol::ZERO_NORM {
        return Ok(DVector::zeros(k));
    }
    match fit {
        PredictorFit::Steps { g, eta } => {
            for _ in 0..g {
                let grad = ce_gradient(z, targets, &q);
                q -= grad * eta;
            }
        }
        PredictorFit::Full if k <= NEWTON_MAX_DIM => newton(z, targets, &mut q),
        PredictorFit::Full => {
            let gram = z.transpose() * z / z.nrows() as f64;
            let lmax = crate::spd::sorted_eigen(&gram).0[0];
            let step = 4.0 / lmax;
            let mut prev = mean_cross_entropy(z, targets, &q);
            for _ in 0..GD_CAP {
                let grad = ce_gradient(z, targets, &q);
                if grad.amax() < tol::PREDICTOR_GRAD {
                    break;
                }
                q -= grad * step;
                let cur = mean_cross_entropy(z, targets, &q);
                if (prev - cur).abs() <= 1e-15 * (1.0 + cur.abs()) {
                    break;
                }
                prev = cur;
            }
        }
    }
    if !all_finite(q.iter()) {
        return Err(Error::NonFiniteGradient("logistic predictor"));
    }
    Ok(q)
}

fn newton(z: &DMatrix<f64>, targets: &DVector<f64>, q: &mut DVector<f64>) {
    let n = z.nrows() as f64;
    let k = z.ncols();
    let mut obj = mean_cross_entropy(z, targets, q);
    for _ in 0..NEWTON_CAP {
        let logits = &*z * &*q;
        let mut resid = DVector::zeros(z.nrows());
        let mut weighted = z.clone();
        for i in 0..z.nrows() {
            let p = stable_sigmoid(logits[i]);
            resid[i] = p - targets[i];
            let w = (p * (1.0 - p)).sqrt();
            weighted.row_mut(i).scale_mut(w);
        }
        let grad = z.transpose() * resid / n;
        if grad.amax() < tol::PREDICTOR_GRAD {
            return;
        }
        let hess = weighted.transpose() * &weighted / n;
        let mut damping = 1e-12 * (hess.trace() / k as f64).max(1e-300);
        let dir = loop {
            let damped = &hess + DMatrix::identity(k, k) * damping;
            if let Some(chol) = damped.cholesky() {
                break chol.solve(&grad);
            }
            damping *= 100.0;
        };
        let slope = grad.dot(&dir);
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-12 {
            let trial = &*q - &dir * step;
            let val = mean_cross_entropy(z, targets, &trial);
            if val <= obj - 1e-4 * step * slope {
                let gain = obj - val;
                *q = trial;
                obj = val;
                accepted = true;
                if gain <= 1e-16 * (1.0 + obj.abs()) {
                    return;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return;
        }
    }
}

/// Linear responses `sigmoid(f^T x)` predicted by `sigmoid(q^T R^T x)` on an
/// empirical feature distribution; regret is the mean binary KL divergence.
#[derive(Debug, Clone)]
pub struct LogisticOracle {
    x: DMatrix<f64>,
    s: SpdMatrix,
}

pub fn logistic_oracle(data: EmpiricalDistribution, s: SpdMatrix) -> Result<LogisticOracle> {
    LogisticOracle::new(data, s)
}

impl LogisticOracle {
    pub fn new(data: EmpiricalDistribution, s: SpdMatrix) -> Result<Self> {
        s.require_strictly_pd()?;
        if s.dim() != data.dim() {
            return Err(Error::Dimension(format!(
                "S is {0}x{0} but samples have dimension {1}",
                s.dim(),
                data.dim()
            )));
        }
        Ok(Self {
            x: data.samples().clone(),
            s,
        })
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.x
    }

    fn targets(&self, f: &DVector<f64>) -> DVector<f64> {
        (&self.x * f).map(stable_sigmoid)
    }

    /// Regret evaluated as cross-entropy through `z` minus cross-entropy of
    /// the best predictor on `x` (which is `f` itself).
    pub fn regret_via_cross_entropy(&self, rep: &DMatrix<f64>, f: &DVector<f64>) -> Result<f64> {
        let t = self.targets(f);
        let q = self.fit_predictor(rep, f, None, PredictorFit::Full)?;
        let z = &self.x * rep;
        Ok(mean_cross_entropy(&z, &t, &q) - mean_cross_entropy(&self.x, &t, f))
    }

    fn residual(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        let a = &self.x * f;
        let b = &self.x * (rep * q);
        DVector::from_fn(self.x.nrows(), |i, _| stable_sigmoid(b[i]) - stable_sigmoid(a[i]))
    }
}

impl RegretOracle for LogisticOracle {
    type Func = DVector<f64>;

    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn loss(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> f64 {
        let a = &self.x * f;
        let b = &self.x * (rep * q);
        a.iter().zip(b.iter()).map(|(&a, &b)| kl_logits(a, b)).sum::<f64>() / self.x.nrows() as f64
    }

    fn fit_predictor(
        &self,
        rep: &DMatrix<f64>,
        f: &DVector<f64>,
        warm: Option<&DVector<f64>>,
        fit: PredictorFit,
    ) -> Result<DVector<f64>> {
        let z = &self.x * rep;
        fit_logistic(&z, &self.targets(f), warm, fit)
    }

    fn grad_q(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        let z = &self.x * rep;
        z.transpose() * self.residual(rep, f, q) / self.x.nrows() as f64
    }

    fn grad_r(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DMatrix<f64> {
        self.x.transpose() * self.residual(rep, f, q) * q.transpose() / self.x.nrows() as f64
    }

    fn atom_seed(&self, f: &DVector<f64>) -> Option<DVector<f64>> {
        Some(f.clone())
    }
}

impl ContinuousOracle for LogisticOracle {
    fn grad_f(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        let a = &self.x * f;
        let b = &self.x * (rep * q);
        let w = DVector::from_fn(self.x.nrows(), |i, _| {
            let p = stable_sigmoid(a[i]);
            p * (1.0 - p) * (a[i] - b[i])
        });
        self.x.transpose() * w / self.x.nrows() as f64
    }

    fn project_f(&self, f: &DVector<f64>) -> DVector<f64> {
        project_to_sphere(&self.s, f)
    }

    fn init_harvest(&self, _r: usize) -> usize {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_and_sigmoid_are_stable() {
        for t in [-800.0, -50.0, -1.0, 0.0, 1.0, 50.0, 800.0] {
            assert!(softplus(t).is_finite());
            let s = stable_sigmoid(t);
            assert!((0.0..=1.0).contains(&s));
        }
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(stable_sigmoid(0.0), 0.5);
        assert!(kl_logits(3.0, 3.0).abs() < 1e-15);
        assert!(kl_logits(50.0, -50.0).is_finite());
    }

    #[test]
    fn newton_matches_one_dimensional_optimum() {
        // targets equal sigmoid(2 z): the optimum is q = 2 exactly
        let z = DMatrix::from_column_slice(4, 1, &[1.0, -0.5, 2.0, 0.3]);
        let t = z.column(0).map(|v| stable_sigmoid(2.0 * v));
        let q = fit_logistic(&z, &t, None, PredictorFit::Full).unwrap();
        assert!((q[0] - 2.0).abs() < 1e-8);
    }
}

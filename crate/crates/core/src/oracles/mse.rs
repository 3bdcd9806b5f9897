use nalgebra::{DMatrix, DVector};

use super::{project_to_sphere, ContinuousOracle, PredictorFit, RegretOracle};
use crate::error::Result;
use crate::regret::check_gram;
use crate::spd::SpdMatrix;
use crate::tol;

/// Linear predictions under squared loss, with expectations taken
/// analytically through `Sigma_x`.
#[derive(Debug, Clone)]
pub struct MseOracle {
    sigma_x: SpdMatrix,
    s: SpdMatrix,
}

pub fn mse_oracle(sigma_x: SpdMatrix, s: SpdMatrix) -> Result<MseOracle> {
    MseOracle::new(sigma_x, s)
}

impl MseOracle {
    pub fn new(sigma_x: SpdMatrix, s: SpdMatrix) -> Result<Self> {
        sigma_x.require_strictly_pd()?;
        s.require_strictly_pd()?;
        if sigma_x.dim() != s.dim() {
            return Err(crate::Error::Dimension("Sigma_x and S differ in size".into()));
        }
        Ok(Self { sigma_x, s })
    }

    pub fn sigma_x(&self) -> &SpdMatrix {
        &self.sigma_x
    }

    pub fn s(&self) -> &SpdMatrix {
        &self.s
    }

    /// `Sigma_x (f - R q)`.
    fn weighted_residual(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        self.sigma_x.matrix() * (f - rep * q)
    }
}

impl RegretOracle for MseOracle {
    type Func = DVector<f64>;

    fn dim(&self) -> usize {
        self.sigma_x.dim()
    }

    /// `f^T Sx f - 2 q^T R^T Sx f + q^T R^T Sx R q`, evaluated as the
    /// residual quadratic form.
    fn loss(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> f64 {
        let e = f - rep * q;
        self.sigma_x.quad_form(&e)
    }

    fn fit_predictor(
        &self,
        rep: &DMatrix<f64>,
        f: &DVector<f64>,
        _warm: Option<&DVector<f64>>,
        _fit: PredictorFit,
    ) -> Result<DVector<f64>> {
        // an all-zero representation carries no information; any q is optimal
        if rep.norm() < tol::ZERO_NORM {
            return Ok(DVector::zeros(rep.ncols()));
        }
        let gram = rep.transpose() * self.sigma_x.matrix() * rep;
        let gram = (&gram + gram.transpose()) * 0.5;
        check_gram(&gram)?;
        let chol = gram
            .cholesky()
            .ok_or(crate::Error::SingularRepresentation { cond: f64::INFINITY })?;
        Ok(chol.solve(&(rep.transpose() * (self.sigma_x.matrix() * f))))
    }

    fn grad_q(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        rep.transpose() * self.weighted_residual(rep, f, q) * -2.0
    }

    fn grad_r(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DMatrix<f64> {
        self.weighted_residual(rep, f, q) * q.transpose() * -2.0
    }

    fn atom_seed(&self, f: &DVector<f64>) -> Option<DVector<f64>> {
        Some(f.clone())
    }
}

impl ContinuousOracle for MseOracle {
    fn grad_f(&self, rep: &DMatrix<f64>, f: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        self.weighted_residual(rep, f, q) * 2.0
    }

    fn project_f(&self, f: &DVector<f64>) -> DVector<f64> {
        project_to_sphere(&self.s, f)
    }

    fn init_harvest(&self, r: usize) -> usize {
        r
    }
}

//! Closed-form regret primitives of the linear-MSE setting.
//!
//! For `y = f^T x + n` and predictor `q^T R^T x`, the best predictor is the
//! least-squares solution `q = (R^T Sx R)^{-1} R^T Sx f` and the regret is
//! the residual energy `(f - R q)^T Sx (f - R q)`. The noise term cancels in
//! the regret and is never simulated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spd::{sorted_eigen, SpdMatrix};
use crate::tol;
use crate::types::{MixedRepresentation, RegretReport, Representation, ResponseClass};

/// Cholesky-solvable Gram matrix `R^T Sx R`, or `SingularRepresentation`.
fn gram_solver(rep: &DMatrix<f64>, sigma_x: &SpdMatrix) -> Result<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>> {
    let gram = rep.transpose() * sigma_x.matrix() * rep;
    let gram = (&gram + gram.transpose()) * 0.5;
    check_gram(&gram)?;
    gram.cholesky()
        .ok_or(Error::SingularRepresentation { cond: f64::INFINITY })
}

pub(crate) fn check_gram(gram: &DMatrix<f64>) -> Result<()> {
    let (vals, _) = sorted_eigen(gram);
    let hi = vals[0];
    let lo = vals[vals.len() - 1];
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond.is_finite() && cond < tol::MAX_CONDITION) {
        return Err(Error::SingularRepresentation { cond });
    }
    Ok(())
}

fn check_shapes(rep: &Representation, f: &DVector<f64>, sigma_x: &SpdMatrix) -> Result<()> {
    if rep.dim() != sigma_x.dim() || f.len() != sigma_x.dim() {
        return Err(Error::Dimension(format!(
            "R is {}x{}, f has {} entries, Sigma_x is {}x{}",
            rep.dim(),
            rep.rank(),
            f.len(),
            sigma_x.dim(),
            sigma_x.dim()
        )));
    }
    Ok(())
}

/// Least-squares predictor `q = (R^T Sx R)^{-1} R^T Sx f`.
pub fn ls_predictor(rep: &Representation, f: &DVector<f64>, sigma_x: &SpdMatrix) -> Result<DVector<f64>> {
    check_shapes(rep, f, sigma_x)?;
    let chol = gram_solver(rep.matrix(), sigma_x)?;
    let rhs = rep.matrix().transpose() * (sigma_x.matrix() * f);
    Ok(chol.solve(&rhs))
}

/// Pointwise regret of representing `x` by `R^T x` when predicting `f^T x`
/// under squared loss.
pub fn linear_mse_regret(rep: &Representation, f: &DVector<f64>, sigma_x: &SpdMatrix) -> Result<f64> {
    let q = ls_predictor(rep, f, sigma_x)?;
    let residual = f - rep.matrix() * q;
    Ok(sigma_x.quad_form(&residual).max(0.0))
}

/// Orthogonal projector onto the column space of `Sx^{1/2} R`.
fn whitened_projector(rep: &Representation, sigma_x: &SpdMatrix, sx_half: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = gram_solver(rep.matrix(), sigma_x)?;
    let tilde = sx_half * rep.matrix();
    let coeffs = chol.solve(&tilde.transpose());
    Ok(&tilde * coeffs)
}

/// Worst-case expected regret of a mixed representation.
///
/// For a quadratic ball the value is the top eigenvalue of
/// `S^{1/2} Sx^{1/2} E[I - P_j] Sx^{1/2} S^{1/2}` with `P_j` the projector
/// onto `Sx^{1/2} R_j`; the witness is `S^{1/2} u_1`, which sits on the
/// boundary `||f||_S = 1`. For a finite class the maximum is taken over the
/// listed functions, first index winning ties.
pub fn mixture_regret_linear(
    mix: &MixedRepresentation,
    class: &ResponseClass,
    sigma_x: &SpdMatrix,
) -> Result<RegretReport> {
    let d = sigma_x.dim();
    if mix.atoms()[0].dim() != d {
        return Err(Error::Dimension("mixture atoms do not match Sigma_x".into()));
    }
    match class {
        ResponseClass::QuadraticBall { s } => {
            if s.dim() != d {
                return Err(Error::Dimension("S does not match Sigma_x".into()));
            }
            let sx_half = sigma_x.sqrt();
            let mut expected = DMatrix::<f64>::zeros(d, d);
            for (atom, w) in mix.iter() {
                if w == 0.0 {
                    continue;
                }
                let proj = whitened_projector(atom, sigma_x, &sx_half)?;
                expected += (DMatrix::identity(d, d) - proj) * w;
            }
            let s_half = s.sqrt();
            let bridge = &sx_half * &s_half;
            let a = bridge.transpose() * expected * &bridge;
            let a = (&a + a.transpose()) * 0.5;
            let (vals, vecs) = sorted_eigen(&a);
            let witness = &s_half * vecs.column(0);
            let per_atom_loss = mix
                .atoms()
                .iter()
                .map(|atom| linear_mse_regret(atom, &witness, sigma_x))
                .collect::<Result<Vec<_>>>()?;
            Ok(RegretReport {
                value: vals[0].max(0.0),
                witness_f: witness.iter().copied().collect(),
                per_atom_loss,
            })
        }
        ResponseClass::FiniteSet { functions } => {
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            for (i, f) in functions.iter().enumerate() {
                let losses = mix
                    .atoms()
                    .iter()
                    .map(|atom| linear_mse_regret(atom, f, sigma_x))
                    .collect::<Result<Vec<_>>>()?;
                let value: f64 = losses.iter().zip(mix.weights()).map(|(l, w)| l * w).sum();
                if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
                    best = Some((value, i, losses));
                }
            }
            let (value, i, per_atom_loss) = best.expect("finite class is non-empty");
            Ok(RegretReport {
                value,
                witness_f: functions[i].iter().copied().collect(),
                per_atom_loss,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn ls_predictor_projection_identity() {
        let sigma = SpdMatrix::identity(4);
        let rep = Representation::coordinate(4, &[0, 1]).unwrap();
        let q = ls_predictor(&rep, &dv(&[0.3, -2.0, 5.0, 1.0]), &sigma).unwrap();
        assert!((q - dv(&[0.3, -2.0])).norm() < 1e-14);
    }

    #[test]
    fn ls_predictor_one_dimensional() {
        let sigma = SpdMatrix::from_diagonal(&[2.0, 1.0]).unwrap();
        let rep = Representation::coordinate(2, &[0]).unwrap();
        let q = ls_predictor(&rep, &dv(&[1.0, 1.0]), &sigma).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regret_examples() {
        let i3 = SpdMatrix::identity(3);
        let e1 = Representation::coordinate(3, &[0]).unwrap();
        assert!((linear_mse_regret(&e1, &dv(&[0.0, 1.0, 0.0]), &i3).unwrap() - 1.0).abs() < 1e-15);
        let diag = SpdMatrix::from_diagonal(&[4.0, 2.0, 1.0]).unwrap();
        assert!((linear_mse_regret(&e1, &dv(&[0.0, 0.0, 1.0]), &diag).unwrap() - 1.0).abs() < 1e-15);
        let span = Representation::new(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 0.0])).unwrap();
        assert!(linear_mse_regret(&span, &dv(&[-0.5, -1.0, 0.0]), &diag).unwrap() < 1e-14);
    }

    #[test]
    fn singular_representation_is_an_error() {
        let sigma = SpdMatrix::identity(3);
        let rep = Representation::new(DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0])).unwrap();
        assert!(matches!(
            ls_predictor(&rep, &dv(&[1.0, 1.0, 1.0]), &sigma),
            Err(Error::SingularRepresentation { .. })
        ));
    }

    #[test]
    fn finite_class_picks_first_maximum() {
        let sigma = SpdMatrix::identity(3);
        let mix = MixedRepresentation::single(Representation::coordinate(3, &[0]).unwrap());
        let class = ResponseClass::finite(vec![dv(&[1.0, 0.0, 0.0]), dv(&[0.0, 1.0, 0.0]), dv(&[0.0, 0.0, 1.0])]).unwrap();
        let report = mixture_regret_linear(&mix, &class, &sigma).unwrap();
        assert!((report.value - 1.0).abs() < 1e-15);
        assert_eq!(report.witness_f, vec![0.0, 1.0, 0.0]);
    }
}

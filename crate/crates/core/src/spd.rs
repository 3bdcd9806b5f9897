//! Symmetric positive (semi)definite matrices with a cached, deterministic
//! eigendecomposition.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tol;

/// A symmetric PSD matrix together with its eigenpairs.
///
/// Eigenvalues are sorted non-increasing and each eigenvector is signed so
/// that its entry of largest magnitude is positive. Ties in the eigenvalues
/// are broken lexicographically on the signed eigenvectors, which keeps the
/// output reproducible across runs.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    entries: DMatrix<f64>,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl SpdMatrix {
    /// Builds the matrix, checking symmetry and positive semidefiniteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if d == 0 || entries.ncols() != d {
            return Err(Error::Dimension(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let gap = (entries[(i, j)] - entries[(j, i)]).abs();
                if gap > tol::SYMMETRY * entries[(i, j)].abs().max(1.0) {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
            }
        }
        // average out representation noise below the symmetry tolerance
        let entries = (&entries + entries.transpose()) * 0.5;
        let (values, vectors) = sorted_eigen(&entries);
        let lambda_max = values[0].max(0.0);
        let lambda_min = values[d - 1];
        if lambda_min < -tol::PSD_SLACK * lambda_max.max(f64::MIN_POSITIVE) {
            return Err(Error::NotPositiveDefinite { lambda_min });
        }
        Ok(Self {
            entries,
            values,
            vectors,
        })
    }

    /// Builds from a product that is symmetric only up to rounding, e.g. `A B A`.
    pub fn from_product(entries: DMatrix<f64>) -> Result<Self> {
        let sym = (&entries + entries.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn identity(d: usize) -> Self {
        Self::from_diagonal(&vec![1.0; d]).expect("identity is SPD")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Rebuilds `V diag(values) V^T` from explicit eigenpairs (`vectors` orthonormal).
    pub fn from_eigen(vectors: &DMatrix<f64>, values: &[f64]) -> Result<Self> {
        let diag = DMatrix::from_diagonal(&DVector::from_column_slice(values));
        Self::from_product(vectors * diag * vectors.transpose())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Eigenvalues, non-increasing.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// Orthonormal eigenvectors as columns, matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[self.dim() - 1]
    }

    /// `lambda_max / lambda_min`, infinite for singular matrices.
    pub fn condition_number(&self) -> f64 {
        let lo = self.lambda_min();
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            self.lambda_max() / lo
        }
    }

    pub fn is_strictly_positive_definite(&self) -> bool {
        self.lambda_min() > tol::PD_RATIO * self.lambda_max()
    }

    pub fn require_strictly_pd(&self) -> Result<()> {
        if self.is_strictly_positive_definite() {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite {
                lambda_min: self.lambda_min(),
            })
        }
    }

    /// Number of eigenvalues above `rel_tol * lambda_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.lambda_max().max(0.0);
        self.values.iter().filter(|&&l| l > cut).count()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// `V f(Lambda) V^T` for a scalar map applied to clamped eigenvalues.
    fn spectral_map(&self, map: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mapped = self.values.map(|l| map(l.max(0.0)));
        let scaled = &self.vectors * DMatrix::from_diagonal(&mapped);
        let out = scaled * self.vectors.transpose();
        (&out + out.transpose()) * 0.5
    }

    /// Symmetric square root.
    pub fn sqrt(&self) -> DMatrix<f64> {
        self.spectral_map(f64::sqrt)
    }

    /// Symmetric inverse square root; fails when the condition number exceeds
    /// [`tol::MAX_CONDITION`].
    pub fn inv_sqrt(&self) -> Result<DMatrix<f64>> {
        self.check_invertible()?;
        Ok(self.spectral_map(|l| 1.0 / l.sqrt()))
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.check_invertible()?;
        Ok(self.spectral_map(|l| 1.0 / l))
    }

    fn check_invertible(&self) -> Result<()> {
        let cond = self.condition_number();
        if cond.is_finite() && cond <= tol::MAX_CONDITION {
            Ok(())
        } else {
            Err(Error::IllConditioned { cond })
        }
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.entries * x))
    }

    /// Mahalanobis norm `(f^T A^{-1} f)^{1/2}` evaluated through the eigenpairs.
    pub fn mahalanobis_norm(&self, f: &DVector<f64>) -> f64 {
        let coords = self.vectors.transpose() * f;
        coords
            .iter()
            .zip(self.values.iter())
            .map(|(c, l)| c * c / l)
            .sum::<f64>()
            .sqrt()
    }
}

/// Eigendecomposition of a symmetric matrix with the crate's ordering and
/// sign conventions applied.
pub fn sorted_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let d = a.nrows();
    let eig = SymmetricEigen::new(a.clone());
    let mut vectors = eig.eigenvectors;
    for mut col in vectors.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        match eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]) {
            Ordering::Equal => {
                for k in 0..d {
                    match vectors[(k, j)].total_cmp(&vectors[(k, i)]) {
                        Ordering::Equal => continue,
                        other => return other,
                    }
                }
                Ordering::Equal
            }
            other => other,
        }
    });
    let values = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| vectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(d: usize, seed: u64) -> DMatrix<f64> {
        // deterministic LCG fill, no rng dependency needed here
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = DMatrix::from_fn(d, d, |_, _| next());
        &g * g.transpose() + DMatrix::identity(d, d) * 0.1
    }

    #[test]
    fn invariants_hold_on_random_matrices() {
        for seed in 0..20 {
            let a = random_spd(6, seed);
            let s = SpdMatrix::new(a.clone()).unwrap();
            let vals = s.eigenvalues();
            for i in 1..vals.len() {
                assert!(vals[i - 1] >= vals[i]);
            }
            let v = s.eigenvectors();
            let ortho = (v.transpose() * v - DMatrix::identity(6, 6)).norm();
            assert!(ortho <= tol::ORTHONORMALITY);
            let recon = v * DMatrix::from_diagonal(vals) * v.transpose();
            assert!((recon - &a).norm() <= tol::RECONSTRUCTION * a.norm());
            for col in v.column_iter() {
                let big = col.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
                assert!(big > 0.0);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(SpdMatrix::new(a), Err(Error::NotSymmetric { .. })));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(SpdMatrix::new(b), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn square_roots_compose() {
        let a = random_spd(5, 99);
        let s = SpdMatrix::new(a.clone()).unwrap();
        let r = s.sqrt();
        assert!((&r * &r - &a).norm() < 1e-10 * a.norm());
        let ri = s.inv_sqrt().unwrap();
        assert!((&ri * &a * &ri - DMatrix::identity(5, 5)).norm() < 1e-9);
    }

    #[test]
    fn mahalanobis_matches_direct_inverse() {
        let a = random_spd(4, 3);
        let s = SpdMatrix::new(a.clone()).unwrap();
        let f = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]);
        let direct = f.dot(&(a.try_inverse().unwrap() * &f)).sqrt();
        assert!((s.mahalanobis_norm(&f) - direct).abs() < 1e-10);
    }

    #[test]
    fn repeated_eigenvalues_are_deterministic() {
        let a = DMatrix::identity(4, 4) * 2.0;
        let s1 = SpdMatrix::new(a.clone()).unwrap();
        let s2 = SpdMatrix::new(a).unwrap();
        assert_eq!(s1.eigenvectors(), s2.eigenvectors());
    }

    #[test]
    fn ill_conditioned_inverse_sqrt_is_rejected() {
        let s = SpdMatrix::from_diagonal(&[1.0, 1e-13]).unwrap();
        assert!(matches!(s.inv_sqrt(), Err(Error::IllConditioned { .. })));
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::SpdMatrix;
use crate::tol;

/// A linear representation `z = R^T x` with `R` of shape `d x r`.
///
/// The type admits `r <= d` so that full-rank reference representations can
/// be expressed; solvers that need `r < d` check it themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation(DMatrix<f64>);

impl Representation {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() == 0 || matrix.nrows() < matrix.ncols() {
            return Err(Error::Dimension(format!(
                "representation must be d x r with d >= r >= 1, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("representation has non-finite entries".into()));
        }
        Ok(Self(matrix))
    }

    /// Columns `e_i` for the listed coordinates.
    pub fn coordinate(d: usize, coords: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(d, coords.len());
        for (c, &i) in coords.iter().enumerate() {
            if i >= d {
                return Err(Error::Dimension(format!("coordinate {i} out of range for d={d}")));
            }
            m[(i, c)] = 1.0;
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }
}

/// A finite mixture of representation atoms with simplex weights.
#[derive(Debug, Clone)]
pub struct MixedRepresentation {
    atoms: Vec<Representation>,
    weights: Vec<f64>,
}

impl MixedRepresentation {
    pub fn new(atoms: Vec<Representation>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidWeights("mixture needs at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        check_simplex(&weights)?;
        let (d, r) = (atoms[0].dim(), atoms[0].rank());
        if atoms.iter().any(|a| a.dim() != d || a.rank() != r) {
            return Err(Error::Dimension("mixture atoms differ in shape".into()));
        }
        Ok(Self { atoms, weights })
    }

    pub fn single(atom: Representation) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[Representation] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Representation, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// Number of atoms with non-zero weight.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }
}

/// Checks non-negativity and unit sum within [`tol::SIMPLEX`].
pub fn check_simplex(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidWeights(format!("negative or non-finite weight in {weights:?}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol::SIMPLEX {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

/// The constraint set of admissible response functions.
#[derive(Debug, Clone)]
pub enum ResponseClass {
    /// `{ f : f^T S^{-1} f <= 1 }`.
    QuadraticBall { s: SpdMatrix },
    /// An explicit finite list of response parameter vectors.
    FiniteSet { functions: Vec<DVector<f64>> },
}

impl ResponseClass {
    pub fn quadratic_ball(s: SpdMatrix) -> Result<Self> {
        s.require_strictly_pd()?;
        Ok(Self::QuadraticBall { s })
    }

    pub fn finite(functions: Vec<DVector<f64>>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidInput("finite response class is empty".into()));
        }
        Ok(Self::FiniteSet { functions })
    }
}

/// Worst-case regret of a (mixed) representation over a response class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegretReport {
    pub value: f64,
    pub witness_f: Vec<f64>,
    pub per_atom_loss: Vec<f64>,
}

//! Numerical tolerances used across the crate.
//!
//! Every threshold lives here so stricter runs only need to touch one table.

/// Relative symmetry tolerance accepted when building an [`crate::SpdMatrix`].
pub const SYMMETRY: f64 = 1e-12;
/// Frobenius tolerance on `V^T V - I` for cached eigenvectors.
pub const ORTHONORMALITY: f64 = 1e-9;
/// Relative Frobenius tolerance on the eigen reconstruction.
pub const RECONSTRUCTION: f64 = 1e-8;
/// Smallest admissible `lambda_min / lambda_max` for strictly positive definite input.
pub const PD_RATIO: f64 = 1e-12;
/// Largest admissible condition number for inverses and inverse square roots.
pub const MAX_CONDITION: f64 = 1e12;
/// Eigenvalues above `-PSD_SLACK * lambda_max` are treated as zero rather than negative.
pub const PSD_SLACK: f64 = 1e-10;
/// Tolerance on probability vectors summing to one.
pub const SIMPLEX: f64 = 1e-10;
/// Reconstruction tolerance for marginal decompositions.
pub const MARGINAL: f64 = 1e-8;
/// Tolerance on the sum of the marginal vector.
pub const MARGINAL_SUM: f64 = 1e-9;
/// Relative slack used when testing the effective-dimension sandwich.
pub const SANDWICH: f64 = 1e-12;
/// Pivot tolerance of the simplex method.
pub const LP_PIVOT: f64 = 1e-11;
/// Relative duality gap accepted from the matrix-game solver.
pub const GAME_GAP: f64 = 1e-8;
/// Norm below which a representation counts as zero.
pub const ZERO_NORM: f64 = 1e-14;
/// Regret improvement over the convergence window that stops phase one.
pub const PHASE1_IMPROVEMENT: f64 = 1e-8;
/// Window (iterations) for the phase-one convergence test.
pub const PHASE1_WINDOW: usize = 10;
/// Hard cap on phase-one iterations when running until convergence.
pub const PHASE1_CAP: usize = 10_000;
/// Gradient tolerance for logistic predictor fits.
pub const PREDICTOR_GRAD: f64 = 1e-10;
/// Negative regret beyond this is reported before clamping.
pub const NEGATIVE_REGRET_WARN: f64 = 1e-6;

/// Smallest singular-value ratio tolerated in a phase-2 atom before it is
/// re-orthonormalized.
pub const ATOM_COLUMN_RATIO: f64 = 1e-3;

//! Optimal dimensionality-reducing representations when the downstream
//! prediction task is chosen adversarially.
//!
//! - [`regret`] and [`linear_mse`]: closed-form regret, pure and mixed
//!   minimax representations for linear prediction under squared loss.
//! - [`game`]: the incremental game solver (adversarial function search,
//!   representation atoms, multiplicative weights) for arbitrary
//!   differentiable regret oracles, plus an exact matrix-game solver.
//! - [`oracles`]: squared-loss, logistic and finite-class regret oracles.
//! - [`data`]: seeded generators for covariances, Gaussian samples and the
//!   shapes image dataset.

pub mod data;
pub mod error;
pub mod experiments;
pub mod game;
pub mod linear_mse;
pub mod lp;
pub mod oracles;
pub mod regret;
pub mod rng;
pub mod spd;
pub mod tol;
pub mod types;

pub use error::{Error, Result};
pub use spd::SpdMatrix;
pub use types::{MixedRepresentation, RegretReport, Representation, ResponseClass};

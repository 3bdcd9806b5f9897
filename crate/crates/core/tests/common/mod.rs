#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use repgame::SpdMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random rotation of a spectrum drawn log-uniformly over two decades.
pub fn random_spd(d: usize, rng: &mut impl Rng) -> SpdMatrix {
    let q = gaussian_matrix(d, d, rng).qr().q();
    let diag: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
    let m = &q * DMatrix::from_diagonal(&DVector::from_vec(diag)) * q.transpose();
    SpdMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

/// Relative error of `a` against `b`, floored at an absolute scale.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

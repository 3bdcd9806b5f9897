use nalgebra::DMatrix;

use super::config::adaptive_beta;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The player wants small losses (weights shrink as `beta^L`).
    Min,
    /// The player wants large losses (weights grow as `beta^{-L}`).
    Max,
}

/// Running `(min, max)` of every loss seen, used to map losses into `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossRange {
    bounds: Option<(f64, f64)>,
}

impl LossRange {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, losses: &[f64]) {
        for &l in losses {
            self.bounds = Some(match self.bounds {
                None => (l, l),
                Some((lo, hi)) => (lo.min(l), hi.max(l)),
            });
        }
    }

    pub fn scale(&self, l: f64) -> f64 {
        match self.bounds {
            Some((lo, hi)) if hi > lo => (l - lo) / (hi - lo),
            _ => 0.0,
        }
    }
}

/// One multiplicative-weights update, computed in the log domain.
///
/// Losses are first folded into `range` and rescaled to `[0, 1]`.
pub fn mwu_step(weights: &[f64], losses: &[f64], beta: f64, direction: Direction, range: &mut LossRange) -> Vec<f64> {
    debug_assert_eq!(weights.len(), losses.len());
    range.observe(losses);
    let sign = match direction {
        Direction::Min => 1.0,
        Direction::Max => -1.0,
    };
    let log_beta = beta.ln();
    let logs: Vec<f64> = weights
        .iter()
        .zip(losses)
        .map(|(&w, &l)| w.ln() + sign * range.scale(l) * log_beta)
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|&v| (v - top).exp()).collect();
    let total: f64 = out.iter().sum();
    for w in out.iter_mut() {
        *w /= total;
    }
    out
}

/// Elementwise mean of the given weight vectors.
pub(crate) fn average(history: &[Vec<f64>]) -> Vec<f64> {
    let n = history.len() as f64;
    let mut out = vec![0.0; history[0].len()];
    for w in history {
        for (o, v) in out.iter_mut().zip(w) {
            *o += v / n;
        }
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// Self-play MWU on a fixed loss matrix (rows minimize, columns maximize).
/// Returns the time-averaged strategies and their value `p^T L o`.
pub fn solve_matrix_game_mwu(l: &DMatrix<f64>, iterations: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let (k, t) = l.shape();
    let mut p = vec![1.0 / k as f64; k];
    let mut o = vec![1.0 / t as f64; t];
    let mut p_sum = vec![0.0; k];
    let mut o_sum = vec![0.0; t];
    let beta_p = adaptive_beta(8.0, k, iterations);
    let beta_o = adaptive_beta(8.0, t, iterations);
    let mut range = LossRange::new();
    range.observe(l.as_slice());
    for _ in 0..iterations {
        let row_loss: Vec<f64> = (0..k).map(|j| (0..t).map(|i| l[(j, i)] * o[i]).sum()).collect();
        let col_loss: Vec<f64> = (0..t).map(|i| (0..k).map(|j| l[(j, i)] * p[j]).sum()).collect();
        let mut rp = range;
        let mut ro = range;
        p = mwu_step(&p, &row_loss, beta_p, Direction::Min, &mut rp);
        o = mwu_step(&o, &col_loss, beta_o, Direction::Max, &mut ro);
        p_sum.iter_mut().zip(&p).for_each(|(s, v)| *s += v);
        o_sum.iter_mut().zip(&o).for_each(|(s, v)| *s += v);
    }
    let p_bar: Vec<f64> = p_sum.iter().map(|s| s / iterations as f64).collect();
    let o_bar: Vec<f64> = o_sum.iter().map(|s| s / iterations as f64).collect();
    let value = (0..k).map(|j| (0..t).map(|i| p_bar[j] * l[(j, i)] * o_bar[i]).sum::<f64>()).sum();
    (p_bar, o_bar, value)
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::PredictorFit;

/// How the MWU inverse temperatures are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum BetaSchedule {
    /// Use `beta_r` and `beta_f` as given.
    Fixed,
    /// `beta = 1 / (1 + sqrt(c ln n / T))` with `n` the number of actions and
    /// `T = t_stop`.
    Adaptive { c: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self::Fixed
    }
}

/// Parameters of the incremental game solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    /// Atom budget: number of outer iterations.
    pub m: usize,
    /// Number of initial adversarial functions. [`crate::game::solve`] treats
    /// it as a lower bound and pads the harvested functions with random ones.
    #[serde(default)]
    pub m0: usize,
    /// Phase-1 iterations. `None` iterates until the regret improves by less
    /// than `tol::PHASE1_IMPROVEMENT` over `tol::PHASE1_WINDOW` iterations,
    /// capped at `tol::PHASE1_CAP`.
    #[serde(default)]
    pub t_f: Option<usize>,
    pub t_rep: usize,
    pub t_stop: usize,
    pub t_avg: usize,
    pub eta_f: f64,
    pub eta_rep: f64,
    pub beta_r: f64,
    pub beta_f: f64,
    #[serde(default)]
    pub beta_schedule: BetaSchedule,
    #[serde(default)]
    pub predictor_fit: PredictorFit,
    #[serde(default)]
    pub seed: u64,
}

impl GameConfig {
    /// Hyperparameters tuned for the squared-loss setting.
    pub fn mse(m: usize, seed: u64) -> Self {
        Self {
            m,
            m0: 0,
            t_f: None,
            t_rep: 100,
            t_stop: 80,
            t_avg: 10,
            eta_f: 0.944,
            eta_rep: 0.713,
            beta_r: 0.94,
            beta_f: 0.653,
            beta_schedule: BetaSchedule::Fixed,
            predictor_fit: PredictorFit::Full,
            seed,
        }
    }

    /// Hyperparameters for the logistic (cross-entropy) setting.
    pub fn logistic(m: usize, seed: u64) -> Self {
        Self {
            m,
            m0: 8,
            t_f: Some(1000),
            t_rep: 100,
            t_stop: 50,
            t_avg: 25,
            eta_f: 0.1,
            eta_rep: 1e-3,
            beta_r: 0.9,
            beta_f: 0.9,
            beta_schedule: BetaSchedule::Fixed,
            predictor_fit: PredictorFit::Full,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m == 0 {
            return fail("m must be at least 1".into());
        }
        if self.t_avg == 0 || self.t_avg > self.t_stop || self.t_stop > self.t_rep {
            return fail(format!(
                "need 1 <= t_avg <= t_stop <= t_rep, got {} / {} / {}",
                self.t_avg, self.t_stop, self.t_rep
            ));
        }
        if self.t_f == Some(0) {
            return fail("t_f must be positive".into());
        }
        for (name, beta) in [("beta_r", self.beta_r), ("beta_f", self.beta_f)] {
            if !(beta > 0.0 && beta < 1.0) {
                return fail(format!("{name} = {beta} is outside (0, 1)"));
            }
        }
        for (name, eta) in [("eta_f", self.eta_f), ("eta_rep", self.eta_rep)] {
            if !(eta > 0.0 && eta.is_finite()) {
                return fail(format!("{name} = {eta} must be a positive finite step"));
            }
        }
        match self.beta_schedule {
            BetaSchedule::Adaptive { c } if !(c > 0.0 && c.is_finite()) => {
                return fail(format!("adaptive beta constant {c} must be positive"));
            }
            _ => {}
        }
        if let PredictorFit::Steps { g, eta } = self.predictor_fit {
            if g == 0 || !(eta > 0.0 && eta.is_finite()) {
                return fail("predictor steps need g >= 1 and a positive step".into());
            }
        }
        Ok(())
    }

    /// Inverse temperature for a player with `n` actions.
    pub fn beta(&self, fixed: f64, n: usize) -> f64 {
        match self.beta_schedule {
            BetaSchedule::Fixed => fixed,
            BetaSchedule::Adaptive { c } => adaptive_beta(c, n, self.t_stop),
        }
    }
}

pub fn adaptive_beta(c: f64, n: usize, horizon: usize) -> f64 {
    let n = n.max(2) as f64;
    1.0 / (1.0 + (c * n.ln() / horizon.max(1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        GameConfig::mse(10, 0).validate().unwrap();
        GameConfig::logistic(8, 0).validate().unwrap();
    }

    #[test]
    fn rejects_bad_schedules() {
        let mut cfg = GameConfig::mse(10, 0);
        cfg.t_avg = 90;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = GameConfig::mse(10, 0);
        cfg.beta_r = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = GameConfig::mse(10, 0);
        cfg.eta_f = -1.0;
        assert!(cfg.validate().is_err());
    }
}

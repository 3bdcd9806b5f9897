//! The incremental game solver.
//!
//! Each outer iteration finds an adversarial function against the current
//! mixture (phase 1), then adds one representation atom while
//! multiplicative weights rebalance atoms against functions (phase 2). The
//! returned mixture is the prefix with the smallest measured regret.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::oracles::{ContinuousOracle, FiniteOracle, GameRng, PredictorFit, RegretOracle};
use crate::rng::{self, TAG_FINITE, TAG_INIT, TAG_PHASE1, TAG_PHASE2};
use crate::types::{MixedRepresentation, Representation};

mod config;
mod matrix_game;
mod mwu;
mod phases;
mod state;

pub use config::{adaptive_beta, BetaSchedule, GameConfig};
pub use matrix_game::{solve_matrix_game, MatrixGameSolution};
pub use mwu::{mwu_step, solve_matrix_game_mwu, Direction, LossRange};
pub use phases::{phase1, phase1_finite, phase2, Phase2Output};
pub use state::GameState;

/// Output of an incremental run.
#[derive(Debug, Clone)]
pub struct GameResult<F> {
    /// Atoms `1..=m_star` with the weights used to measure `reg_{m_star}`.
    pub mixture: MixedRepresentation,
    pub reg_trace: Vec<f64>,
    /// Number of atoms in the selected prefix (1-based).
    pub m_star: usize,
    pub state: GameState<F>,
}

impl<F> GameResult<F> {
    /// `min_k reg_k`, the regret recorded for the returned mixture.
    pub fn regret(&self) -> f64 {
        self.reg_trace[self.m_star - 1]
    }
}

fn engine<O, P>(
    oracle: &O,
    cfg: &GameConfig,
    init_rep: DMatrix<f64>,
    init_funcs: Vec<O::Func>,
    class_funcs: Option<Vec<O::Func>>,
    final_phase2: bool,
    mut phase1_step: P,
) -> Result<GameResult<O::Func>>
where
    O: RegretOracle,
    P: FnMut(&GameState<O::Func>, &mut GameRng) -> Result<(O::Func, f64)>,
{
    cfg.validate()?;
    if init_funcs.len() != cfg.m0 {
        return Err(Error::Config(format!(
            "m0 = {} but {} initial functions were given",
            cfg.m0,
            init_funcs.len()
        )));
    }
    if init_rep.nrows() != oracle.dim() || init_rep.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "initial representation is {}x{}, oracle dimension is {}",
            init_rep.nrows(),
            init_rep.ncols(),
            oracle.dim()
        )));
    }
    let rank = init_rep.ncols();
    let mut state = GameState::new(oracle, init_rep, init_funcs, class_funcs)?;
    for k in 1..=cfg.m {
        let mut rng1 = rng::stream(cfg.seed, TAG_PHASE1, k as u64);
        let (f, reg) = phase1_step(&state, &mut rng1)?;
        log::debug!("iteration {k}: reg = {reg:.6e}");
        state.weight_trace.push(state.p.clone());
        state.reg_trace.push(reg);
        state.push_function(oracle, f)?;
        if k < cfg.m || final_phase2 {
            let mut rng2 = rng::stream(cfg.seed, TAG_PHASE2, k as u64);
            let out = phase2(&state, oracle, cfg, rank, &mut rng2)?;
            state.push_atom(oracle, out.atom, out.p, out.o)?;
        }
    }
    let mut m_star = 1;
    for (k, &v) in state.reg_trace.iter().enumerate() {
        if v < state.reg_trace[m_star - 1] {
            m_star = k + 1;
        }
    }
    let atoms = state.reps[..m_star]
        .iter()
        .map(|r| Representation::new(r.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mixture = MixedRepresentation::new(atoms, state.weight_trace[m_star - 1].clone())?;
    Ok(GameResult {
        mixture,
        reg_trace: state.reg_trace.clone(),
        m_star,
        state,
    })
}

/// Runs the solver for a continuous class from a given starting point.
pub fn run<O: ContinuousOracle>(
    oracle: &O,
    cfg: &GameConfig,
    init_rep: &DMatrix<f64>,
    init_funcs: Vec<DVector<f64>>,
) -> Result<GameResult<DVector<f64>>> {
    engine(oracle, cfg, init_rep.clone(), init_funcs, None, false, |state, rng| {
        phase1(state, oracle, cfg, rng)
    })
}

/// The solver with exact phase 1 over a finite class.
pub fn run_finite_game<O: FiniteOracle>(
    oracle: &O,
    cfg: &GameConfig,
    init_rep: &DMatrix<f64>,
    init_funcs: Vec<usize>,
) -> Result<GameResult<usize>> {
    let all: Vec<usize> = (0..oracle.num_functions()).collect();
    engine(oracle, cfg, init_rep.clone(), init_funcs, Some(all), false, |state, _| {
        phase1_finite(state, oracle)
    })
}

/// Starting representation and functions for a rank-`r` run.
///
/// Runs the solver with a single all-zero column, harvesting
/// `oracle.init_harvest(r)` rank-one atoms; these become the first columns of
/// the starting representation (random directions fill the rest) and the
/// adversarial functions found along the way become the initial functions.
pub fn initialize<O: ContinuousOracle>(
    oracle: &O,
    cfg: &GameConfig,
    r: usize,
) -> Result<(DMatrix<f64>, Vec<DVector<f64>>)> {
    let d = oracle.dim();
    if r == 0 || r > d {
        return Err(Error::Dimension(format!("rank {r} is invalid for dimension {d}")));
    }
    let harvest = oracle.init_harvest(r).clamp(1, r);
    let mut sub = cfg.clone();
    sub.m = harvest;
    sub.m0 = 0;
    sub.seed = rng::derive_seed(cfg.seed, TAG_INIT, 0);
    let res = engine(oracle, &sub, DMatrix::zeros(d, 1), Vec::new(), None, true, |state, rng| {
        phase1(state, oracle, &sub, rng)
    })?;
    let columns: Vec<DVector<f64>> = res.state.reps[1..].iter().map(|a| a.column(0).into_owned()).collect();
    let mut fill = rng::stream(cfg.seed, TAG_INIT, 1);
    let rep = phases::complete_columns(d, r, columns, &mut fill);
    Ok((oracle.normalize_r(&rep)?, res.state.funcs))
}

/// [`initialize`] followed by [`run`]. The harvested functions are padded
/// with random feasible functions up to `cfg.m0`; `m0` is then set to the
/// actual number of starting functions.
pub fn solve<O: ContinuousOracle>(oracle: &O, cfg: &GameConfig, r: usize) -> Result<GameResult<DVector<f64>>> {
    let (rep, mut funcs) = initialize(oracle, cfg, r)?;
    let mut fill = rng::stream(cfg.seed, TAG_INIT, 2);
    while funcs.len() < cfg.m0 {
        funcs.push(oracle.random_function(&mut fill));
    }
    let mut cfg = cfg.clone();
    cfg.m0 = funcs.len();
    run(oracle, &cfg, &rep, funcs)
}

/// Output of the per-function finite-class solver.
#[derive(Debug, Clone)]
pub struct FiniteSolution {
    pub mixture: MixedRepresentation,
    /// `table[(j, i)]`: regret of atom `j` on function `i`.
    pub table: DMatrix<f64>,
    pub game: MatrixGameSolution,
}

/// One atom per function, each fit by gradient descent on that function's
/// loss, mixed by the exact equilibrium of the resulting regret table.
///
/// Atom `i` starts from the oracle's seed for function `i` and takes
/// `cfg.t_rep` normalized gradient steps of size `cfg.eta_rep`.
pub fn run_finite<O: FiniteOracle>(oracle: &O, cfg: &GameConfig, r: usize) -> Result<FiniteSolution> {
    let t = oracle.num_functions();
    let d = oracle.dim();
    if r == 0 || r > d {
        return Err(Error::Dimension(format!("rank {r} is invalid for dimension {d}")));
    }
    let mut atoms = Vec::with_capacity(t);
    for i in 0..t {
        let mut rng = rng::stream(cfg.seed, TAG_FINITE, i as u64);
        atoms.push(fit_atom(oracle, i, r, cfg, &mut rng)?);
    }
    let mut values = DMatrix::zeros(t, t);
    for (j, atom) in atoms.iter().enumerate() {
        for i in 0..t {
            values[(j, i)] = oracle.regret(atom, &i)?;
        }
    }
    let game = solve_matrix_game(&values)?;
    let reps = atoms.into_iter().map(Representation::new).collect::<Result<Vec<_>>>()?;
    Ok(FiniteSolution {
        mixture: MixedRepresentation::new(reps, game.p.clone())?,
        table: values,
        game,
    })
}

fn fit_atom<O: FiniteOracle>(oracle: &O, i: usize, r: usize, cfg: &GameConfig, rng: &mut GameRng) -> Result<DMatrix<f64>> {
    let seeds = oracle.atom_seed(&i).into_iter().collect();
    let mut rep = oracle.normalize_r(&phases::complete_columns(oracle.dim(), r, seeds, rng))?;
    let mut q = oracle.fit_predictor(&rep, &i, None, PredictorFit::Full)?;
    for _ in 0..cfg.t_rep {
        let grad = oracle.grad_r(&rep, &i, &q);
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFiniteGradient("finite-class atom gradient"));
        }
        rep = oracle.normalize_r(&(&rep - grad * cfg.eta_rep))?;
        q = oracle.fit_predictor(&rep, &i, Some(&q), PredictorFit::Full)?;
    }
    Ok(rep)
}

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::GameConfig;
use super::mwu::{average, mwu_step, Direction, LossRange};
use super::state::GameState;
use crate::error::{Error, Result};
use crate::oracles::{all_finite, ContinuousOracle, FiniteOracle, GameRng, PredictorFit, RegretOracle};
use crate::tol;

/// Phase 1 for a continuous class: projected gradient ascent on `f` against
/// the current weighted atoms, refitting each atom's predictor as `f` moves.
///
/// Returns the final function and its weighted regret under fully refit
/// predictors.
pub fn phase1<O: ContinuousOracle>(
    state: &GameState<DVector<f64>>,
    oracle: &O,
    cfg: &GameConfig,
    rng: &mut GameRng,
) -> Result<(DVector<f64>, f64)> {
    if state.reps.is_empty() {
        return Err(Error::Config("phase 1 needs at least one atom".into()));
    }
    let active: Vec<usize> = (0..state.reps.len()).filter(|&j| state.p[j] > 0.0).collect();
    let mut f = oracle.random_function(rng);
    let mut qs: Vec<Option<DVector<f64>>> = vec![None; state.reps.len()];
    let (cap, until_converged) = match cfg.t_f {
        Some(n) => (n, false),
        None => (tol::PHASE1_CAP, true),
    };
    let mut trace: Vec<f64> = Vec::new();
    for it in 0..cap {
        let mut grad = DVector::zeros(f.len());
        let mut reg = 0.0;
        for &j in &active {
            let rep = &state.reps[j];
            let q = oracle.fit_predictor(rep, &f, qs[j].as_ref(), cfg.predictor_fit)?;
            reg += state.p[j] * oracle.loss(rep, &f, &q);
            grad += oracle.grad_f(rep, &f, &q) * state.p[j];
            qs[j] = Some(q);
        }
        if !all_finite(grad.iter()) {
            return Err(Error::NonFiniteGradient("phase 1 function gradient"));
        }
        trace.push(reg);
        if until_converged && it >= tol::PHASE1_WINDOW && reg - trace[it - tol::PHASE1_WINDOW] < tol::PHASE1_IMPROVEMENT {
            break;
        }
        f = oracle.project_f(&(&f + grad * cfg.eta_f));
    }
    let value = weighted_regret(state, oracle, &f)?;
    Ok((f, value))
}

fn weighted_regret<O: RegretOracle>(state: &GameState<O::Func>, oracle: &O, f: &O::Func) -> Result<f64> {
    let mut value = 0.0;
    for (rep, &w) in state.reps.iter().zip(&state.p) {
        if w > 0.0 {
            value += w * oracle.regret(rep, f)?;
        }
    }
    Ok(value)
}

/// Phase 1 over a finite class: exact maximization of the weighted losses in
/// the state's table, first index winning ties.
pub fn phase1_finite<O: FiniteOracle>(state: &GameState<usize>, oracle: &O) -> Result<(usize, f64)> {
    let t = oracle.num_functions();
    let table = state.class_table.as_ref().ok_or_else(|| Error::Config("finite phase 1 needs the class table".into()))?;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..t {
        let v: f64 = table.iter().zip(&state.p).map(|(row, w)| w * row[i]).sum();
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best)
}

/// Output of a representation-atom search.
#[derive(Debug, Clone)]
pub struct Phase2Output {
    pub atom: DMatrix<f64>,
    /// Weights over the `k + 1` atoms, averaged at `t_stop`.
    pub p: Vec<f64>,
    /// Weights over the functions, averaged at `t_stop`.
    pub o: Vec<f64>,
}

/// Phase 2: adds one representation atom.
///
/// The new atom descends the `o`-weighted loss over the current functions
/// while MWU plays `p` (atoms, minimizing) against `o` (functions,
/// maximizing) on the frozen loss table extended by the new atom's row.
/// Weights are averaged over the last `t_avg` rounds at `t_stop` and frozen
/// while the atom keeps refining until `t_rep`.
pub fn phase2<O: RegretOracle>(
    state: &GameState<O::Func>,
    oracle: &O,
    cfg: &GameConfig,
    rank: usize,
    rng: &mut GameRng,
) -> Result<Phase2Output> {
    let k = state.reps.len();
    let n = state.funcs.len();
    if k == 0 {
        return Err(Error::Config("phase 2 needs at least one existing atom".into()));
    }
    if n == 0 {
        return Err(Error::Config("phase 2 needs at least one function".into()));
    }
    let mut rep = seed_atom(state, oracle, rank, rng)?;
    let mut qs = state
        .funcs
        .iter()
        .map(|f| oracle.fit_predictor(&rep, f, None, PredictorFit::Full))
        .collect::<Result<Vec<_>>>()?;
    let beta_r = cfg.beta(cfg.beta_r, k + 1);
    let beta_f = cfg.beta(cfg.beta_f, n);
    let mut p = vec![1.0 / (k + 1) as f64; k + 1];
    let mut o = vec![1.0 / n as f64; n];
    let (mut range_p, mut range_o) = (LossRange::new(), LossRange::new());
    let mut p_hist: Vec<Vec<f64>> = Vec::with_capacity(cfg.t_stop);
    let mut o_hist: Vec<Vec<f64>> = Vec::with_capacity(cfg.t_stop);
    for t in 1..=cfg.t_rep {
        let new_losses: Vec<f64> = state
            .funcs
            .iter()
            .zip(&qs)
            .map(|(f, q)| oracle.loss(&rep, f, q))
            .collect();
        if t <= cfg.t_stop {
            let mut atom_losses: Vec<f64> = state
                .loss
                .iter()
                .map(|row| row.iter().zip(&o).map(|(l, w)| l * w).sum())
                .collect();
            atom_losses.push(new_losses.iter().zip(&o).map(|(l, w)| l * w).sum());
            let func_losses: Vec<f64> = (0..n)
                .map(|i| {
                    let old: f64 = (0..k).map(|j| p[j] * state.loss[j][i]).sum();
                    old + p[k] * new_losses[i]
                })
                .collect();
            p = mwu_step(&p, &atom_losses, beta_r, Direction::Min, &mut range_p);
            o = mwu_step(&o, &func_losses, beta_f, Direction::Max, &mut range_o);
            p_hist.push(p.clone());
            o_hist.push(o.clone());
            if t == cfg.t_stop {
                p = average(&p_hist[cfg.t_stop - cfg.t_avg..]);
                o = average(&o_hist[cfg.t_stop - cfg.t_avg..]);
            }
        }
        let mut grad = DMatrix::zeros(rep.nrows(), rep.ncols());
        for ((f, q), &w) in state.funcs.iter().zip(&qs).zip(&o) {
            if w > 0.0 {
                grad += oracle.grad_r(&rep, f, q) * w;
            }
        }
        if !all_finite(grad.iter()) {
            return Err(Error::NonFiniteGradient("phase 2 representation gradient"));
        }
        rep = condition_atom(oracle.normalize_r(&(&rep - grad * cfg.eta_rep))?);
        qs = state
            .funcs
            .iter()
            .zip(&qs)
            .map(|(f, q)| oracle.fit_predictor(&rep, f, Some(q), cfg.predictor_fit))
            .collect::<Result<Vec<_>>>()?;
    }
    Ok(Phase2Output { atom: rep, p, o })
}

/// Replaces an atom whose columns are close to collinear by an orthonormal
/// basis of the same span (scaled to unit Frobenius norm). Regret depends on
/// the span only, so this changes nothing but the conditioning.
fn condition_atom(rep: DMatrix<f64>) -> DMatrix<f64> {
    let sv = rep.clone().svd(false, false).singular_values;
    if sv.min() >= tol::ATOM_COLUMN_RATIO * sv.max() {
        return rep;
    }
    let q = rep.qr().q();
    let r = q.ncols() as f64;
    q / r.sqrt()
}

/// Starting point for a new atom: seeds of the functions the current mixture
/// serves worst (largest `sum_j p_j L[j][i]`, later functions first on ties)
/// as columns, orthonormalized, padded with random directions, then scaled
/// to unit Frobenius norm.
pub(crate) fn seed_atom<O: RegretOracle>(
    state: &GameState<O::Func>,
    oracle: &O,
    rank: usize,
    rng: &mut GameRng,
) -> Result<DMatrix<f64>> {
    let n = state.funcs.len();
    let exposure: Vec<f64> = (0..n)
        .map(|i| state.loss.iter().zip(&state.p).map(|(row, w)| w * row[i]).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).rev().collect();
    order.sort_by(|&a, &b| exposure[b].total_cmp(&exposure[a]));
    let seeds: Vec<DVector<f64>> = order
        .into_iter()
        .filter_map(|i| oracle.atom_seed(&state.funcs[i]))
        .take(rank)
        .collect();
    let atom = complete_columns(oracle.dim(), rank, seeds, rng);
    oracle.normalize_r(&atom)
}

/// Gram-Schmidt over the given columns, dropping near-dependent ones and
/// filling up to `rank` with random Gaussian directions.
pub(crate) fn complete_columns(d: usize, rank: usize, seeds: Vec<DVector<f64>>, rng: &mut GameRng) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(rank);
    let push = |v: DVector<f64>, basis: &mut Vec<DVector<f64>>| {
        let scale = v.norm();
        let mut v = v;
        for b in basis.iter() {
            let c = b.dot(&v);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > 1e-8 * scale.max(tol::ZERO_NORM) && norm > tol::ZERO_NORM {
            basis.push(v / norm);
        }
    };
    for s in seeds {
        if basis.len() == rank {
            break;
        }
        push(s, &mut basis);
    }
    while basis.len() < rank {
        let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        push(g, &mut basis);
    }
    DMatrix::from_columns(&basis)
}

mod common;

use common::{gaussian_matrix, random_spd, rng};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use repgame::game::{
    mwu_step, phase1, phase1_finite, phase2, run_finite, run_finite_game, solve, solve_matrix_game,
    solve_matrix_game_mwu, Direction, GameConfig, GameState, LossRange,
};
use repgame::oracles::{finite_class_oracle, mse_oracle, EmpiricalDistribution, FiniteOracle, RegretOracle};
use repgame::SpdMatrix;

fn unit(d: usize, i: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, 1);
    m[(i, 0)] = 1.0;
    m
}

/// Row player's equilibrium value through an independent LP solver.
fn minilp_value(l: &DMatrix<f64>) -> f64 {
    let (k, t) = l.shape();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let p: Vec<_> = (0..k).map(|_| pb.add_var(0.0, (0.0, 1.0))).collect();
    let v = pb.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    pb.add_constraint(p.iter().map(|&x| (x, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for i in 0..t {
        let mut row: Vec<_> = (0..k).map(|j| (p[j], l[(j, i)])).collect();
        row.push((v, -1.0));
        pb.add_constraint(row, ComparisonOp::Le, 0.0);
    }
    pb.solve().unwrap().objective()
}

fn random_table(k: usize, t: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng(seed);
    DMatrix::from_fn(k, t, |_, _| g.random_range(0.0..1.0))
}

#[test]
fn phase1_finds_top_generalized_eigenvalue() {
    for seed in 0..5 {
        let mut g = rng(seed);
        let d = 6;
        let sigma = random_spd(d, &mut g);
        let s = SpdMatrix::identity(d);
        let o = mse_oracle(sigma.clone(), s).unwrap();
        // an all-zero atom leaves the full regret f^T Sx f
        let state = GameState::new(&o, DMatrix::zeros(d, 1), Vec::new(), None).unwrap();
        let cfg = GameConfig::mse(1, seed);
        let mut stream = repgame::rng::stream(seed, 99, 0);
        let (f, value) = phase1(&state, &o, &cfg, &mut stream).unwrap();
        let top = sigma.lambda_max();
        assert!(common::rel_err(value, top, 1e-12) < 0.02, "{value} vs {top}");
        assert!((f.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn phase2_adds_the_missing_direction() {
    let d = 3;
    let o = mse_oracle(SpdMatrix::identity(d), SpdMatrix::identity(d)).unwrap();
    let e2 = unit(d, 1).column(0).into_owned();
    let state = GameState::new(&o, unit(d, 0), vec![e2.clone()], None).unwrap();
    assert!((state.loss[0][0] - 1.0).abs() < 1e-12);
    let cfg = GameConfig::mse(1, 3);
    let mut stream = repgame::rng::stream(3, 98, 0);
    let out = phase2(&state, &o, &cfg, 1, &mut stream).unwrap();
    let l = o.regret(&out.atom, &e2).unwrap();
    assert!(l < 1e-3, "new atom regret on e2: {l}");
    assert_eq!(out.p.len(), 2);
    assert!(out.p[1] > out.p[0]);
    assert!((out.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((out.o.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let mut next = state.clone();
    next.push_atom(&o, out.atom.clone(), out.p.clone(), out.o.clone()).unwrap();
    let table = next.loss_matrix();
    let game = solve_matrix_game(&table).unwrap();
    let played = (0..table.nrows())
        .map(|j| out.p[j] * (0..table.ncols()).map(|i| table[(j, i)] * out.o[i]).sum::<f64>())
        .sum::<f64>();
    assert!(played <= game.value + 0.05, "{played} vs {}", game.value);
}

#[test]
fn phase2_needs_an_existing_atom() {
    let d = 3;
    let o = mse_oracle(SpdMatrix::identity(d), SpdMatrix::identity(d)).unwrap();
    let f = unit(d, 1).column(0).into_owned();
    let mut state = GameState::new(&o, unit(d, 0), vec![f], None).unwrap();
    state.reps.clear();
    state.p.clear();
    state.loss.clear();
    let mut stream = repgame::rng::stream(0, 0, 0);
    assert!(phase2(&state, &o, &GameConfig::mse(1, 0), 1, &mut stream).is_err());
}

#[test]
fn mwu_converges_on_two_by_two() {
    // equilibrium p = o = (1/4, 3/4), value 3/4
    let l = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
    let (p, o, value) = solve_matrix_game_mwu(&l, 1000);
    assert!((p[0] - 0.25).abs() < 0.05, "p = {p:?} o = {o:?}");
    assert!((o[0] - 0.25).abs() < 0.05, "o = {o:?}");
    assert!((value - 0.75).abs() < 0.05 * 3.0, "value {value}");
}

#[test]
fn matching_pennies_and_dominance() {
    let l = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let sol = solve_matrix_game(&l).unwrap();
    assert!((sol.value - 0.5).abs() < 1e-12);
    for w in sol.p.iter().chain(&sol.o) {
        assert!((w - 0.5).abs() < 1e-9);
    }
    // the second row is no worse against every column
    let l = DMatrix::from_row_slice(3, 2, &[0.9, 0.8, 0.1, 0.2, 0.5, 0.6]);
    let sol = solve_matrix_game(&l).unwrap();
    assert!((sol.p[1] - 1.0).abs() < 1e-9);
    assert!((sol.value - 0.2).abs() < 1e-12);
}

#[test]
fn mwu_approaches_lp_value() {
    for seed in 0..3 {
        let l = random_table(6, 6, seed);
        let exact = solve_matrix_game(&l).unwrap();
        let (_, _, value) = solve_matrix_game_mwu(&l, 20_000);
        assert!((value - exact.value).abs() < 1e-2, "{value} vs {}", exact.value);
    }
}

#[test]
fn matrix_game_agrees_with_independent_lp() {
    for seed in 0..20 {
        let mut g = rng(seed);
        let k = g.random_range(1..=7);
        let t = g.random_range(1..=7);
        let l = random_table(k, t, 1000 + seed) * 5.0 - DMatrix::from_element(k, t, 2.0);
        let sol = solve_matrix_game(&l).unwrap();
        let reference = minilp_value(&l);
        assert!((sol.value - reference).abs() < 1e-8, "{} vs {reference}", sol.value);
        // both strategies certify the value
        let worst_col = (0..t)
            .map(|i| (0..k).map(|j| sol.p[j] * l[(j, i)]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let best_row = (0..k)
            .map(|j| (0..t).map(|i| l[(j, i)] * sol.o[i]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!((worst_col - sol.value).abs() < 1e-8);
        assert!((best_row - sol.value).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mwu_step_stays_on_simplex(
        raw in prop::collection::vec(1e-6f64..1.0, 1..10),
        losses_seed in any::<u64>(),
        beta in 0.01f64..0.99,
        max in any::<bool>(),
    ) {
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut g = rng(losses_seed);
        let losses: Vec<f64> = w.iter().map(|_| g.random_range(-10.0..10.0)).collect();
        let dir = if max { Direction::Max } else { Direction::Min };
        let mut range = LossRange::new();
        let out = mwu_step(&w, &losses, beta, dir, &mut range);
        prop_assert_eq!(out.len(), w.len());
        prop_assert!(out.iter().all(|&v| v >= 0.0 && v.is_finite()));
        prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn solve_is_deterministic_in_the_seed() {
    let mut g = rng(11);
    let d = 6;
    let o = mse_oracle(random_spd(d, &mut g), SpdMatrix::identity(d)).unwrap();
    let cfg = GameConfig::mse(4, 5);
    let a = solve(&o, &cfg, 2).unwrap();
    let b = solve(&o, &cfg, 2).unwrap();
    assert_eq!(a.reg_trace, b.reg_trace);
    assert_eq!(a.mixture.weights(), b.mixture.weights());
    let c = solve(&o, &GameConfig::mse(4, 6), 2).unwrap();
    assert_ne!(a.reg_trace, c.reg_trace);
}

#[test]
fn returned_prefix_has_the_smallest_regret() {
    let mut g = rng(12);
    let d = 8;
    let o = mse_oracle(random_spd(d, &mut g), SpdMatrix::identity(d)).unwrap();
    let res = solve(&o, &GameConfig::mse(6, 1), 3).unwrap();
    let min = res.reg_trace.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(res.regret(), min);
    let first = res.reg_trace.iter().position(|&v| v == min).unwrap();
    assert_eq!(res.m_star, first + 1);
    assert_eq!(res.mixture.len(), res.m_star);
    assert_eq!(res.reg_trace.len(), 6);
    assert!((res.mixture.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn sign_labels(x: &DMatrix<f64>, w: &DVector<f64>) -> Vec<f64> {
    (0..x.nrows())
        .map(|b| if (x.row(b) * w)[0] >= 0.0 { 1.0 } else { -1.0 })
        .collect()
}

#[test]
fn finite_solver_with_one_function() {
    let mut g = rng(21);
    let x = gaussian_matrix(200, 3, &mut g);
    let labels = vec![sign_labels(&x, &DVector::from_vec(vec![1.0, -1.0, 0.5]))];
    let o = finite_class_oracle(EmpiricalDistribution::new(x).unwrap(), labels).unwrap();
    let mut cfg = GameConfig::logistic(1, 0);
    cfg.t_rep = 20;
    let sol = run_finite(&o, &cfg, 1).unwrap();
    assert_eq!(sol.mixture.len(), 1);
    assert_eq!(sol.mixture.weights(), &[1.0]);
    assert_eq!(sol.table.shape(), (1, 1));
    assert!((sol.game.value - sol.table[(0, 0)]).abs() < 1e-12);
}

#[test]
fn symmetric_functions_split_the_weight() {
    let mut g = rng(22);
    let x = gaussian_matrix(2000, 2, &mut g);
    let labels = vec![
        sign_labels(&x, &DVector::from_vec(vec![1.0, 0.0])),
        sign_labels(&x, &DVector::from_vec(vec![0.0, 1.0])),
    ];
    let o = finite_class_oracle(EmpiricalDistribution::new(x).unwrap(), labels).unwrap();
    let sol = run_finite(&o, &GameConfig::logistic(1, 0), 1).unwrap();
    let w = sol.mixture.weights();
    assert!((w[0] - 0.5).abs() < 0.1 && (w[1] - 0.5).abs() < 0.1, "{w:?}");
    // each atom serves its own function far better than the other one
    assert!(sol.table[(0, 0)] < sol.table[(0, 1)]);
    assert!(sol.table[(1, 1)] < sol.table[(1, 0)]);
}

#[test]
fn finite_phase1_on_small_tables() {
    let mut g = rng(24);
    let x = gaussian_matrix(100, 2, &mut g);
    let one = vec![sign_labels(&x, &DVector::from_vec(vec![1.0, 1.0]))];
    let o = finite_class_oracle(EmpiricalDistribution::new(x.clone()).unwrap(), one).unwrap();
    let state = GameState::new(&o, unit(2, 0), Vec::new(), Some(vec![0])).unwrap();
    assert_eq!(phase1_finite(&state, &o).unwrap().0, 0);

    let three = [[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]]
        .iter()
        .map(|w| sign_labels(&x, &DVector::from_row_slice(w)))
        .collect();
    let o = finite_class_oracle(EmpiricalDistribution::new(x).unwrap(), three).unwrap();
    let state = GameState::new(&o, unit(2, 0), Vec::new(), Some(vec![0, 1, 2])).unwrap();
    let row = &state.class_table.as_ref().unwrap()[0];
    let argmax = (0..3).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
    assert_eq!(phase1_finite(&state, &o).unwrap().0, argmax);
    assert_eq!(argmax, 1);
}

#[test]
fn finite_phase1_is_the_brute_force_maximum() {
    let mut g = rng(23);
    let d = 4;
    let x = gaussian_matrix(300, d, &mut g);
    let labels: Vec<Vec<f64>> = (0..5)
        .map(|_| sign_labels(&x, &common::gaussian_vector(d, &mut g)))
        .collect();
    let o = finite_class_oracle(EmpiricalDistribution::new(x).unwrap(), labels).unwrap();
    let mut cfg = GameConfig::logistic(3, 0);
    cfg.m0 = 0;
    cfg.t_rep = 30;
    cfg.t_stop = 20;
    cfg.t_avg = 10;
    let init = gaussian_matrix(d, 2, &mut g);
    let res = run_finite_game(&o, &cfg, &init, Vec::new()).unwrap();
    let state = &res.state;
    let (best, value) = phase1_finite(state, &o).unwrap();
    let mut brute = (0, f64::NEG_INFINITY);
    for i in 0..o.num_functions() {
        let v: f64 = state.reps.iter().zip(&state.p).map(|(r, w)| w * o.regret(r, &i).unwrap()).sum();
        if v > brute.1 + 1e-12 {
            brute = (i, v);
        }
    }
    assert_eq!(best, brute.0);
    assert!((value - brute.1).abs() < 1e-9);
}

use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use log::info;
use repgame::experiments::{self, ShapesExperiment};
use repgame::game::GameConfig;
use repgame::linear_mse::{solve_mixed, solve_pure};
use repgame::regret::mixture_regret_linear;
use repgame::rng::{self, TAG_DATA};
use repgame::{data, MixedRepresentation, ResponseClass, SpdMatrix};
use serde::Serialize;

use crate::config::{ProblemSection, RunConfig, SweepSection};

/// Relative tolerance for the achievability check on closed-form outputs.
const ACHIEVABILITY_TOL: f64 = 1e-7;

/// Everything a command needs besides its own section.
pub struct RunContext {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunContext {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&file, value)?;
    Ok(())
}

#[derive(Serialize)]
struct AtomEntry {
    file: String,
    weight: f64,
}

/// Contents of `solution.json`. Matrices live next to it as headerless CSV.
#[derive(Serialize)]
struct Solution {
    version: u32,
    kind: &'static str,
    d: usize,
    r: usize,
    regret: f64,
    /// Worst-case regret of the written mixture, recomputed from the atoms.
    verified_regret: f64,
    atoms: Vec<AtomEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ell_star: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_bar: Option<Vec<f64>>,
    /// `columns[j][i] = 1` when atom `j` omits direction `i`.
    #[serde(skip_serializing_if = "Option::is_none")]
    columns: Option<Vec<Vec<u8>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_f_star: Option<String>,
}

struct Instance {
    sigma_x: SpdMatrix,
    s: SpdMatrix,
    r: usize,
}

fn instance(problem: &ProblemSection, seed: u64) -> Result<Instance> {
    let mut rng = rng::stream(seed, TAG_DATA, 0);
    let sigma_x = problem.sigma_x.build(&mut rng)?;
    let s = match &problem.s {
        Some(src) => src.build(&mut rng)?,
        None => SpdMatrix::identity(sigma_x.dim()),
    };
    ensure!(
        s.dim() == sigma_x.dim(),
        "S is {0}x{0} but Sigma_x is {1}x{1}",
        s.dim(),
        sigma_x.dim()
    );
    Ok(Instance { sigma_x, s, r: problem.r })
}

fn write_atoms(ctx: &RunContext, mix: &MixedRepresentation) -> Result<Vec<AtomEntry>> {
    mix.iter()
        .enumerate()
        .map(|(j, (atom, w))| {
            let file = format!("atom_{j}.csv");
            data::write_matrix_csv(&ctx.path(&file), atom.matrix())?;
            Ok(AtomEntry { file, weight: w })
        })
        .collect()
}

fn verify(mix: &MixedRepresentation, inst: &Instance, claimed: f64) -> Result<f64> {
    let class = ResponseClass::quadratic_ball(inst.s.clone())?;
    let value = mixture_regret_linear(mix, &class, &inst.sigma_x)?.value;
    if (value - claimed).abs() > ACHIEVABILITY_TOL * (1.0 + claimed.abs()) {
        bail!("achievability check failed: mixture regret {value:.12e} vs closed form {claimed:.12e}");
    }
    Ok(value)
}

pub fn solve_pure_cmd(ctx: &RunContext) -> Result<()> {
    let inst = instance(&ctx.cfg.problem.clone().unwrap_or_default(), ctx.seed)?;
    let sol = solve_pure(&inst.sigma_x, &inst.s, inst.r)?;
    let mix = MixedRepresentation::single(sol.representation.clone());
    let verified = verify(&mix, &inst, sol.regret)?;
    let atoms = write_atoms(ctx, &mix)?;
    data::write_vector_csv(&ctx.path("worst_f.csv"), &sol.worst_f)?;
    write_json(
        &ctx.path("solution.json"),
        &Solution {
            version: crate::config::FORMAT_VERSION,
            kind: "pure",
            d: inst.sigma_x.dim(),
            r: inst.r,
            regret: sol.regret,
            verified_regret: verified,
            atoms,
            worst_f: Some("worst_f.csv".into()),
            ell_star: None,
            lambdas: None,
            b_bar: None,
            columns: None,
            sigma_f_star: None,
        },
    )?;
    info!("pure regret {:.6}", sol.regret);
    Ok(())
}

pub fn solve_mixed_cmd(ctx: &RunContext) -> Result<()> {
    if ctx.cfg.problem.is_some() || ctx.cfg.sweep.is_none() {
        let inst = instance(&ctx.cfg.problem.clone().unwrap_or_default(), ctx.seed)?;
        let sol = solve_mixed(&inst.sigma_x, &inst.s, inst.r)?;
        let verified = verify(&sol.mixture, &inst, sol.regret)?;
        let atoms = write_atoms(ctx, &sol.mixture)?;
        data::write_matrix_csv(&ctx.path("sigma_f_star.csv"), sol.sigma_f_star.matrix())?;
        write_json(
            &ctx.path("solution.json"),
            &Solution {
                version: crate::config::FORMAT_VERSION,
                kind: "mixed",
                d: inst.sigma_x.dim(),
                r: inst.r,
                regret: sol.regret,
                verified_regret: verified,
                atoms,
                worst_f: None,
                ell_star: Some(sol.ell.ell_star),
                lambdas: Some(sol.ell.lambdas.clone()),
                b_bar: Some(sol.b_bar.clone()),
                columns: Some(sol.columns.clone()),
                sigma_f_star: Some("sigma_f_star.csv".into()),
            },
        )?;
        info!("mixed regret {:.6} with ell* = {}", sol.regret, sol.ell.ell_star);
    }
    if let Some(sweep) = &ctx.cfg.sweep {
        spectrum_sweep(ctx, sweep)?;
    }
    Ok(())
}

fn spectrum_sweep(ctx: &RunContext, sweep: &SweepSection) -> Result<()> {
    let rows = experiments::spectrum_sweep(sweep.d, sweep.r, &sweep.alphas, sweep.s_exponent)?;
    for row in &rows {
        ensure!(
            row.mixed_regret < row.pure_regret,
            "mixed regret {} is not below pure regret {} at alpha = {}",
            row.mixed_regret,
            row.pure_regret,
            row.alpha
        );
    }
    write_csv(&ctx.path("spectrum.csv"), &rows)
}

pub fn ratio_cmd(ctx: &RunContext) -> Result<()> {
    let sec = ctx.cfg.ratio.clone().unwrap_or_default();
    let game = ctx.cfg.game(GameConfig::mse(25, ctx.seed))?;
    let mut rows = Vec::new();
    for &d in &sec.dims {
        for trial in 0..sec.trials {
            let row = experiments::ratio_trial(d, sec.r, sec.sigma0, &game, trial)?;
            info!("d = {d}, trial {trial}: ratio {:.4}", row.ratio);
            rows.push(row);
        }
    }
    write_csv(&ctx.path("ratio.csv"), &rows)
}

#[derive(Serialize)]
struct LogisticRow {
    m: usize,
    regret: f64,
}

pub fn logistic_cmd(ctx: &RunContext) -> Result<()> {
    let sec = ctx.cfg.logistic.clone().unwrap_or_default();
    let m_max = sec.ms.iter().copied().max().context("[logistic] ms is empty")?;
    let game = ctx.cfg.game(GameConfig::logistic(m_max, ctx.seed))?;
    let rows: Vec<LogisticRow> = experiments::logistic_curve(sec.d, sec.r, sec.b, &sec.ms, &game)?
        .into_iter()
        .map(|(m, regret)| LogisticRow { m, regret })
        .collect();
    write_csv(&ctx.path("logistic.csv"), &rows)
}

pub fn shapes_cmd(ctx: &RunContext) -> Result<()> {
    let sec = ctx.cfg.shapes.clone().unwrap_or_default();
    let exp = ShapesExperiment {
        n_train: sec.n_train,
        n_test: sec.n_test,
        ranks: sec.ranks,
        pca_ranks: sec.pca_ranks,
        seed: ctx.seed,
    };
    let game = ctx.cfg.game(GameConfig::logistic(1, ctx.seed))?;
    let rows = experiments::shapes_experiment(&exp, &game)?;
    for row in &rows {
        ensure!(
            (0.0..=1.0).contains(&row.worst_case_acc) && (0.0..=1.0).contains(&row.avg_acc),
            "accuracy outside [0, 1] for r = {} ({})",
            row.r,
            row.method
        );
    }
    write_csv(&ctx.path("shapes.csv"), &rows)
}

#[derive(Serialize)]
struct CurveRow {
    k: usize,
    reg_k: f64,
}

pub fn curve_cmd(ctx: &RunContext) -> Result<()> {
    let sec = ctx.cfg.curve.clone().unwrap_or_default();
    let game = ctx.cfg.game(GameConfig::mse(sec.m, ctx.seed))?;
    let rows: Vec<CurveRow> = experiments::learning_curve(sec.d, sec.r, sec.sigma0, &game)?
        .into_iter()
        .map(|(k, reg_k)| CurveRow { k, reg_k })
        .collect();
    ensure!(rows.len() == game.m, "learning curve has {} rows for m = {}", rows.len(), game.m);
    write_csv(&ctx.path("curve.csv"), &rows)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    value: f64,
}

/// Small deterministic versions of every command, written under `--out`,
/// plus `selftest.json` with the checks that were run.
pub fn selftest_cmd(ctx: &RunContext) -> Result<()> {
    let mut checks = Vec::new();
    let sub = |name: &str, cfg: RunConfig| -> Result<RunContext> {
        let out = ctx.out.join(name);
        std::fs::create_dir_all(&out)?;
        Ok(RunContext { cfg, seed: ctx.seed, out })
    };
    let parse = |text: &str| RunConfig::parse(text);

    let identity = sub("identity", RunConfig::empty())?;
    solve_mixed_cmd(&identity)?;
    let inst = instance(&ProblemSection::default(), ctx.seed)?;
    let mixed = solve_mixed(&inst.sigma_x, &inst.s, inst.r)?;
    checks.push(Check {
        name: "identity mixed regret is (d - r) / d",
        passed: (mixed.regret - 0.5).abs() < 1e-12,
        value: mixed.regret,
    });

    let power_cfg = parse(
        "version = 1\n[problem]\nr = 2\nsigma_x = { kind = \"power_law\", dim = 6, alpha = 1.0 }\ns = { kind = \"diagonal\", values = [1.0, 0.8, 0.6, 0.5, 0.4, 0.3] }",
    )?;
    solve_pure_cmd(&sub("pure", power_cfg.clone())?)?;
    let power = sub("mixed", power_cfg)?;
    solve_mixed_cmd(&power)?;
    let inst = instance(power.cfg.problem.as_ref().context("problem section")?, ctx.seed)?;
    let pure = solve_pure(&inst.sigma_x, &inst.s, inst.r)?;
    let mixed = solve_mixed(&inst.sigma_x, &inst.s, inst.r)?;
    checks.push(Check {
        name: "mixed regret below pure regret",
        passed: mixed.regret < pure.regret,
        value: pure.regret - mixed.regret,
    });

    let curve = sub("curve", parse("version = 1\n[curve]\nd = 6\nr = 2\nsigma0 = 1.0\nm = 4")?)?;
    curve_cmd(&curve)?;
    let logistic = sub(
        "logistic",
        parse("version = 1\n[logistic]\nd = 4\nr = 2\nb = 200\nms = [1, 2, 3]\n[game]\nm0 = 3\nt_f = 200")?,
    )?;
    logistic_cmd(&logistic)?;
    let shapes = sub(
        "shapes",
        parse("version = 1\n[shapes]\nn_train = 80\nn_test = 80\nranks = [2]\npca_ranks = []\n[game]\nt_rep = 20\nt_stop = 20\nt_avg = 10")?,
    )?;
    shapes_cmd(&shapes)?;

    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    write_json(&ctx.path("selftest.json"), &checks)?;
    if !failed.is_empty() {
        bail!("selftest checks failed: {}", failed.join("; "));
    }
    Ok(())
}

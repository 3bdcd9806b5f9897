//! Closed-form minimax representations for linear prediction under squared loss.
//!
//! Throughout, `lambda_i` are the eigenvalues of `S^{1/2} Sx S^{1/2}` with
//! eigenvectors `v_i`. The pure solution keeps the top `r` whitened
//! directions; the mixed solution randomizes over `r`-subsets of the top
//! `ell*` directions with marginals fixed by the least favorable prior.
//!
//! Atoms are formed as `S^{1/2} v_i / sqrt(lambda_i)`. Writing
//! `M = Sx^{1/2} S^{1/2} = U Lambda^{1/2} V^T`, this equals
//! `Sx^{-1/2} u_i` with `u_i` the matching eigenvector of
//! `Sx^{1/2} S Sx^{1/2}`, and it keeps the two eigenbases paired even when
//! eigenvalues repeat.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;
use crate::spd::SpdMatrix;
use crate::tol;
use crate::types::{MixedRepresentation, Representation};

/// Rank of the least favorable prior covariance and the quantities that fix it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveDimension {
    pub ell_star: usize,
    pub lambdas: Vec<f64>,
    /// `a_ell = (ell - r) / sum_{i <= ell} 1/lambda_i` for `ell = r+1 ..= d`.
    pub a_values: Vec<f64>,
}

impl EffectiveDimension {
    /// `a_ell` for a given `ell` in `r+1 ..= d`.
    pub fn a(&self, ell: usize) -> f64 {
        let r = self.lambdas.len() - self.a_values.len();
        self.a_values[ell - r - 1]
    }
}

#[derive(Debug, Clone)]
pub struct PureSolution {
    pub representation: Representation,
    pub worst_f: DVector<f64>,
    pub regret: f64,
}

#[derive(Debug, Clone)]
pub struct MixedSolution {
    pub mixture: MixedRepresentation,
    pub regret: f64,
    pub sigma_f_star: SpdMatrix,
    pub ell: EffectiveDimension,
    pub b_bar: Vec<f64>,
    /// 0/1 columns of the marginal decomposition, aligned with the mixture atoms.
    /// A one marks a direction the atom leaves out.
    pub columns: Vec<Vec<u8>>,
}

/// Vertex decomposition of a point of the capped simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDecomposition {
    pub columns: Vec<Vec<u8>>,
    pub weights: Vec<f64>,
}

impl MarginalDecomposition {
    /// `sum_j w_j c_j`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let ell = self.columns.first().map_or(0, Vec::len);
        let mut out = vec![0.0; ell];
        for (col, w) in self.columns.iter().zip(&self.weights) {
            for (o, &c) in out.iter_mut().zip(col) {
                *o += w * f64::from(c);
            }
        }
        out
    }

    fn residual(&self, b_bar: &[f64]) -> f64 {
        let recon = self.reconstruct();
        let mass: f64 = self.weights.iter().sum();
        recon
            .iter()
            .zip(b_bar)
            .map(|(a, b)| (a - b).abs())
            .fold((mass - 1.0).abs(), f64::max)
    }
}

struct Spectrum {
    lambdas: DVector<f64>,
    basis: DMatrix<f64>,
    s_half: DMatrix<f64>,
}

fn check_problem(sigma_x: &SpdMatrix, s: &SpdMatrix, r: usize) -> Result<()> {
    let d = sigma_x.dim();
    if s.dim() != d {
        return Err(Error::Dimension(format!("Sigma_x is {d}x{d} but S is {0}x{0}", s.dim())));
    }
    if r == 0 || r >= d {
        return Err(Error::Dimension(format!("need 1 <= r < d, got r={r}, d={d}")));
    }
    for m in [sigma_x, s] {
        let cond = m.condition_number();
        if !(cond.is_finite() && cond <= tol::MAX_CONDITION) {
            return Err(Error::IllConditioned { cond });
        }
    }
    Ok(())
}

/// Eigenpairs of `S^{1/2} Sx S^{1/2}`.
fn spectrum(sigma_x: &SpdMatrix, s: &SpdMatrix) -> Result<Spectrum> {
    let s_half = s.sqrt();
    let core = SpdMatrix::from_product(&s_half * sigma_x.matrix() * &s_half)?;
    Ok(Spectrum {
        lambdas: core.eigenvalues().clone(),
        basis: core.eigenvectors().clone(),
        s_half,
    })
}

/// Atom `[S^{1/2} v_i / sqrt(lambda_i)]_{i in idx}`.
fn atom(spec: &Spectrum, idx: &[usize]) -> Result<Representation> {
    let cols: Vec<DVector<f64>> = idx
        .iter()
        .map(|&i| &spec.s_half * spec.basis.column(i) / spec.lambdas[i].sqrt())
        .collect();
    Representation::new(DMatrix::from_columns(&cols))
}

/// Pure minimax representation: regret `lambda_{r+1}`.
pub fn solve_pure(sigma_x: &SpdMatrix, s: &SpdMatrix, r: usize) -> Result<PureSolution> {
    check_problem(sigma_x, s, r)?;
    let spec = spectrum(sigma_x, s)?;
    let representation = atom(&spec, &(0..r).collect::<Vec<_>>())?;
    let worst_f = &spec.s_half * spec.basis.column(r);
    Ok(PureSolution {
        representation,
        worst_f,
        regret: spec.lambdas[r],
    })
}

/// Smallest `ell` in `r+1 ..= d` satisfying
/// `(ell - r)/lambda_ell <= sum_{i<=ell} 1/lambda_i <= (ell - r)/lambda_{ell+1}`
/// with `lambda_{d+1} = 0`.
pub fn effective_dimension(lambdas: &[f64], r: usize) -> Result<EffectiveDimension> {
    let d = lambdas.len();
    if r == 0 || r >= d {
        return Err(Error::Dimension(format!("need 1 <= r < d, got r={r}, d={d}")));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::InvalidInput("eigenvalues must be finite and positive".into()));
    }
    if lambdas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput("eigenvalues must be sorted non-increasing".into()));
    }
    let mut inv_sum = 0.0;
    let mut prefix = Vec::with_capacity(d);
    for l in lambdas {
        inv_sum += 1.0 / l;
        prefix.push(inv_sum);
    }
    let a_values: Vec<f64> = (r + 1..=d).map(|ell| (ell - r) as f64 / prefix[ell - 1]).collect();
    let slack = 1.0 + tol::SANDWICH;
    let satisfies = |ell: usize| {
        let k = (ell - r) as f64;
        let sum = prefix[ell - 1];
        let left = k / lambdas[ell - 1] <= sum * slack;
        let right = ell == d || sum <= slack * k / lambdas[ell];
        left && right
    };
    let ell_star = match (r + 1..=d).find(|&ell| satisfies(ell)) {
        Some(ell) => ell,
        // rounding can break the sandwich on near-ties; fall back to the maximizer
        None => {
            let mut best = 0;
            for (i, a) in a_values.iter().enumerate() {
                if *a > a_values[best] {
                    best = i;
                }
            }
            r + 1 + best
        }
    };
    Ok(EffectiveDimension {
        ell_star,
        lambdas: lambdas.to_vec(),
        a_values,
    })
}

/// Mixed minimax representation with support at most `ell* + 1`.
pub fn solve_mixed(sigma_x: &SpdMatrix, s: &SpdMatrix, r: usize) -> Result<MixedSolution> {
    check_problem(sigma_x, s, r)?;
    let spec = spectrum(sigma_x, s)?;
    let d = sigma_x.dim();
    if spec.lambdas[d - 1] <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            lambda_min: spec.lambdas[d - 1],
        });
    }
    let lambdas: Vec<f64> = spec.lambdas.iter().copied().collect();
    let ell = effective_dimension(&lambdas, r)?;
    let l = ell.ell_star;
    let inv_sum: f64 = lambdas[..l].iter().map(|x| 1.0 / x).sum();
    let regret = (l - r) as f64 / inv_sum;
    let b_bar: Vec<f64> = lambdas[..l]
        .iter()
        .map(|x| ((l - r) as f64 / (x * inv_sum)).min(1.0))
        .collect();

    let decomposition = decompose_marginals(&b_bar, r)?;
    let mut atoms = Vec::with_capacity(decomposition.columns.len());
    for col in &decomposition.columns {
        let kept: Vec<usize> = (0..l).filter(|&i| col[i] == 0).collect();
        atoms.push(atom(&spec, &kept)?);
    }
    let mixture = MixedRepresentation::new(atoms, decomposition.weights.clone())?;

    // Sigma_f* = S^{1/2} V diag(c) V^T S^{1/2}, c_i = lambda_i^{-1} / sum_{k<=ell*} lambda_k^{-1}
    let mut prior_diag = DVector::zeros(d);
    for i in 0..l {
        prior_diag[i] = 1.0 / (lambdas[i] * inv_sum);
    }
    let inner = &spec.basis * DMatrix::from_diagonal(&prior_diag) * spec.basis.transpose();
    let sigma_f_star = SpdMatrix::from_product(&spec.s_half * inner * &spec.s_half)?;

    Ok(MixedSolution {
        mixture,
        regret,
        sigma_f_star,
        ell,
        b_bar,
        columns: decomposition.columns,
    })
}

fn validate_marginals(b_bar: &[f64], r: usize) -> Result<usize> {
    let ell = b_bar.len();
    if r == 0 || r >= ell {
        return Err(Error::Dimension(format!("need 1 <= r < ell, got r={r}, ell={ell}")));
    }
    if b_bar
        .iter()
        .any(|b| !b.is_finite() || *b < -tol::MARGINAL_SUM || *b > 1.0 + tol::MARGINAL_SUM)
    {
        return Err(Error::InvalidInput(format!("marginals must lie in [0,1]: {b_bar:?}")));
    }
    let k = ell - r;
    let total: f64 = b_bar.iter().sum();
    if (total - k as f64).abs() > tol::MARGINAL_SUM * (1.0 + k as f64) {
        return Err(Error::InvalidInput(format!("marginals sum to {total}, expected {k}")));
    }
    Ok(k)
}

/// Writes `b_bar` as a convex combination of 0/1 vectors with exactly
/// `ell - r` ones.
///
/// The greedy pass repeatedly peels off the vertex on the `ell - r` largest
/// residual coordinates with the largest step that keeps the residual a scaled
/// capped-simplex point. Each step pins at least one more coordinate at zero
/// or at the cap, so at most `ell` vertices are used. If rounding leaves a
/// residual above tolerance, an exact column-generation LP takes over.
pub fn decompose_marginals(b_bar: &[f64], r: usize) -> Result<MarginalDecomposition> {
    let k = validate_marginals(b_bar, r)?;
    let greedy = greedy_decomposition(b_bar, k);
    if greedy.residual(b_bar) <= tol::MARGINAL {
        return Ok(greedy);
    }
    log::debug!(
        "greedy marginal decomposition residual {:.3e}; falling back to LP",
        greedy.residual(b_bar)
    );
    lp_decomposition(b_bar, k, greedy.columns)
}

/// Column-generation LP decomposition; exposed so the fallback path can be
/// exercised directly.
pub fn decompose_marginals_lp(b_bar: &[f64], r: usize) -> Result<MarginalDecomposition> {
    let k = validate_marginals(b_bar, r)?;
    lp_decomposition(b_bar, k, Vec::new())
}

fn greedy_decomposition(b_bar: &[f64], k: usize) -> MarginalDecomposition {
    let ell = b_bar.len();
    let mut residual: Vec<f64> = b_bar.iter().map(|b| b.clamp(0.0, 1.0)).collect();
    let mut mass = 1.0f64;
    let mut columns = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..=ell {
        if mass <= 1e-15 {
            break;
        }
        let mut order: Vec<usize> = (0..ell).collect();
        order.sort_by(|&i, &j| residual[j].total_cmp(&residual[i]).then(i.cmp(&j)));
        let kth = residual[order[k - 1]];
        let next = if k < ell { residual[order[k]] } else { 0.0 };
        let step = kth.min(mass - next).clamp(0.0, mass);
        if step <= 1e-15 {
            break;
        }
        let mut col = vec![0u8; ell];
        for &i in &order[..k] {
            col[i] = 1;
            residual[i] -= step;
        }
        mass -= step;
        for x in residual.iter_mut() {
            *x = x.clamp(0.0, mass.max(0.0));
        }
        columns.push(col);
        weights.push(step);
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 && (total - 1.0).abs() <= 1e-12 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    MarginalDecomposition { columns, weights }
}

fn lp_decomposition(b_bar: &[f64], k: usize, seed_columns: Vec<Vec<u8>>) -> Result<MarginalDecomposition> {
    let ell = b_bar.len();
    let mut columns: Vec<Vec<u8>> = Vec::new();
    for col in seed_columns {
        if !columns.contains(&col) {
            columns.push(col);
        }
    }
    if columns.is_empty() {
        let mut col = vec![0u8; ell];
        col[..k].iter_mut().for_each(|c| *c = 1);
        columns.push(col);
    }
    let mut rhs = DVector::from_column_slice(b_bar);
    rhs = rhs.push(1.0);
    let mut last_infeasibility = f64::INFINITY;
    for _ in 0..10_000 {
        let a = DMatrix::from_fn(ell + 1, columns.len(), |i, j| {
            if i < ell {
                f64::from(columns[j][i])
            } else {
                1.0
            }
        });
        let p1 = lp::phase_one(&a, &rhs)?;
        last_infeasibility = p1.infeasibility;
        if p1.infeasibility <= 1e-12 {
            let mut out = MarginalDecomposition {
                columns: Vec::new(),
                weights: Vec::new(),
            };
            for (j, col) in columns.iter().enumerate() {
                if p1.x[j] > 0.0 {
                    out.columns.push(col.clone());
                    out.weights.push(p1.x[j]);
                }
            }
            let total: f64 = out.weights.iter().sum();
            out.weights.iter_mut().for_each(|w| *w /= total);
            let residual = out.residual(b_bar);
            if residual > tol::MARGINAL {
                return Err(Error::DecompositionFailure { residual });
            }
            return Ok(out);
        }
        // pricing: the best vertex puts its ones on the k largest duals
        let y = &p1.duals;
        let mut order: Vec<usize> = (0..ell).collect();
        order.sort_by(|&i, &j| y[j].total_cmp(&y[i]).then(i.cmp(&j)));
        let gain: f64 = order[..k].iter().map(|&i| y[i]).sum::<f64>() + y[ell];
        let mut col = vec![0u8; ell];
        for &i in &order[..k] {
            col[i] = 1;
        }
        if gain <= 1e-12 || columns.contains(&col) {
            break;
        }
        columns.push(col);
    }
    Err(Error::DecompositionFailure {
        residual: last_infeasibility,
    })
}

/// Optimal representation for reconstructing `x` itself: the top `r`
/// principal directions, with regret equal to the tail eigenvalue sum.
pub fn pca_solution(sigma_x: &SpdMatrix, r: usize) -> Result<(Representation, f64)> {
    let d = sigma_x.dim();
    if r == 0 || r >= d {
        return Err(Error::Dimension(format!("need 1 <= r < d, got r={r}, d={d}")));
    }
    let rep = Representation::new(sigma_x.eigenvectors().columns(0, r).into_owned())?;
    let regret = sigma_x.eigenvalues().iter().skip(r).sum();
    Ok((rep, regret))
}

/// Sampler for a prior on the boundary of the quadratic ball with covariance
/// `Sigma_f*`: `f = S^{1/2} sum_i q_i sqrt(mu_i) w_i` with Rademacher `q_i` and
/// `(mu_i, w_i)` the eigenpairs of `S^{-1/2} Sigma_f* S^{-1/2}`.
#[derive(Debug, Clone)]
pub struct LeastFavorablePrior {
    directions: Vec<DVector<f64>>,
}

impl LeastFavorablePrior {
    pub fn new(sol: &MixedSolution, s: &SpdMatrix) -> Result<Self> {
        let s_half = s.sqrt();
        let s_inv_half = s.inv_sqrt()?;
        let inner = SpdMatrix::from_product(&s_inv_half * sol.sigma_f_star.matrix() * &s_inv_half)?;
        let vals = inner.eigenvalues();
        let cut = 1e-12 * vals[0].max(0.0);
        let kept: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cut).collect();
        let total: f64 = kept.iter().map(|&i| vals[i]).sum();
        let directions = kept
            .iter()
            .map(|&i| &s_half * inner.eigenvectors().column(i) * (vals[i] / total).sqrt())
            .collect();
        Ok(Self { directions })
    }

    /// Number of independent sign flips per sample.
    pub fn rank(&self) -> usize {
        self.directions.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let d = self.directions[0].len();
        let mut f = DVector::zeros(d);
        for dir in &self.directions {
            if rng.random::<bool>() {
                f += dir;
            } else {
                f -= dir;
            }
        }
        f
    }
}

/// One draw from the least favorable prior of `sol`.
pub fn least_favorable_prior_sampler<R: Rng + ?Sized>(
    sol: &MixedSolution,
    s: &SpdMatrix,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(LeastFavorablePrior::new(sol, s)?.sample(rng))
}

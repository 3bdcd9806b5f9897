//! Dense two-phase simplex for small standard-form linear programs
//!
//! minimize `c^T x` subject to `A x = b`, `x >= 0`.
//!
//! Pivoting uses Dantzig's rule and switches to Bland's rule after a run of
//! degenerate pivots. Dual values are recovered from the columns of the
//! initial artificial basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tol;

const DEGENERATE_SWITCH: usize = 50;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Dual values `y` with `c - A^T y >= 0` at optimality.
    pub duals: DVector<f64>,
}

/// Outcome of the feasibility phase alone.
#[derive(Debug, Clone)]
pub struct PhaseOne {
    /// Sum of artificial variables at the phase-one optimum.
    pub infeasibility: f64,
    pub x: DVector<f64>,
    /// Phase-one duals; a new column `a` can reduce infeasibility iff `y^T a > 0`.
    pub duals: DVector<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    flip: Vec<f64>,
    n: usize,
    m: usize,
}

enum Pivoting {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn new(a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let (m, n) = a.shape();
        let mut rows = Vec::with_capacity(m);
        let mut flip = Vec::with_capacity(m);
        for i in 0..m {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; n + m + 1];
            for j in 0..n {
                row[j] = sign * a[(i, j)];
            }
            row[n + i] = 1.0;
            row[n + m] = sign * b[i];
            rows.push(row);
            flip.push(sign);
        }
        Self {
            rows,
            basis: (n..n + m).collect(),
            flip,
            n,
            m,
        }
    }

    fn rhs(&self) -> usize {
        self.n + self.m
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let width = self.rhs() + 1;
        let mut red = vec![0.0; width];
        red[..cost.len()].copy_from_slice(cost);
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (r, t) in red.iter_mut().zip(row) {
                    *r -= cb * t;
                }
            }
        }
        red
    }

    fn pivot(&mut self, red: &mut [f64], row: usize, col: usize) {
        let p = self.rows[row][col];
        for t in self.rows[row].iter_mut() {
            *t /= p;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (t, pr) in r.iter_mut().zip(&pivot_row) {
                    *t -= factor * pr;
                }
            }
        }
        let factor = red[col];
        if factor != 0.0 {
            for (t, pr) in red.iter_mut().zip(&pivot_row) {
                *t -= factor * pr;
            }
        }
        self.basis[row] = col;
    }

    fn iterate(&mut self, red: &mut [f64], allowed: usize) -> Result<Pivoting> {
        let rhs = self.rhs();
        let mut degenerate_run = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let mut entering = None;
            let mut most_negative = -tol::LP_PIVOT;
            for (j, &r) in red.iter().enumerate().take(allowed) {
                if r < most_negative {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    most_negative = r;
                }
            }
            let Some(col) = entering else {
                return Ok(Pivoting::Optimal);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let coef = row[col];
                if coef > tol::LP_PIVOT {
                    let ratio = row[rhs] / coef;
                    let better = match leaving {
                        None => true,
                        Some((k, best)) => {
                            ratio < best - 1e-15
                                || (ratio <= best + 1e-15 && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, ratio)) = leaving else {
                return Ok(Pivoting::Unbounded);
            };
            if ratio.abs() <= 1e-15 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(red, row, col);
        }
        Err(Error::LpFailure("pivot limit reached".into()))
    }

    fn primal(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rows[i][self.rhs()].max(0.0);
            }
        }
        x
    }

    fn duals(&self, cost: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.m, |i, _| {
            let y: f64 = self
                .rows
                .iter()
                .zip(&self.basis)
                .map(|(row, &b)| cost[b] * row[self.n + i])
                .sum();
            y * self.flip[i]
        })
    }

    fn run_phase_one(&mut self) -> Result<(f64, Vec<f64>)> {
        let mut cost = vec![0.0; self.n + self.m];
        for c in cost.iter_mut().skip(self.n) {
            *c = 1.0;
        }
        let mut red = self.reduced_costs(&cost);
        match self.iterate(&mut red, self.n)? {
            Pivoting::Optimal => {}
            Pivoting::Unbounded => return Err(Error::LpFailure("phase one unbounded".into())),
        }
        let infeasibility: f64 = self
            .rows
            .iter()
            .zip(&self.basis)
            .filter(|(_, &b)| b >= self.n)
            .map(|(row, _)| row[self.rhs()])
            .sum();
        Ok((infeasibility, cost))
    }
}

fn check_shapes(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<()> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!("A has {} rows, b has {}", a.nrows(), b.len())));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::LpFailure("non-finite LP data".into()));
    }
    Ok(())
}

/// Minimizes the total artificial mass needed to satisfy `A x = b, x >= 0`.
pub fn phase_one(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<PhaseOne> {
    check_shapes(a, b)?;
    let mut tab = Tableau::new(a, b);
    let (infeasibility, cost) = tab.run_phase_one()?;
    Ok(PhaseOne {
        infeasibility,
        x: tab.primal(),
        duals: tab.duals(&cost),
    })
}

/// Solves `min c^T x, A x = b, x >= 0`.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<LpSolution> {
    check_shapes(a, b)?;
    if c.len() != a.ncols() {
        return Err(Error::Dimension("cost vector length does not match A".into()));
    }
    let mut tab = Tableau::new(a, b);
    let (infeasibility, _) = tab.run_phase_one()?;
    let scale = 1.0 + b.amax();
    if infeasibility > 1e-9 * scale {
        return Err(Error::LpFailure(format!("infeasible (residual {infeasibility:.3e})")));
    }
    // drive zero-level artificials out of the basis where possible
    let n = tab.n;
    let mut cost = vec![0.0; n + tab.m];
    cost[..n].copy_from_slice(c.as_slice());
    for i in 0..tab.m {
        if tab.basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| tab.rows[i][j].abs() > 1e-9) {
                let mut scratch = vec![0.0; tab.rhs() + 1];
                tab.pivot(&mut scratch, i, col);
            }
        }
    }
    let mut red = tab.reduced_costs(&cost);
    match tab.iterate(&mut red, n)? {
        Pivoting::Optimal => {}
        Pivoting::Unbounded => return Err(Error::LpFailure("objective unbounded".into())),
    }
    let x = tab.primal();
    Ok(LpSolution {
        objective: c.dot(&x),
        duals: tab.duals(&cost),
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp_with_known_optimum() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6  ->  (8/5, 6/5), value 14/5
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 1.0, 0.0, 3.0, 1.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![4.0, 6.0]);
        let c = DVector::from_vec(vec![-1.0, -1.0, 0.0, 0.0]);
        let sol = solve(&a, &b, &c).unwrap();
        assert!((sol.objective + 14.0 / 5.0).abs() < 1e-12);
        assert!((sol.x[0] - 1.6).abs() < 1e-12 && (sol.x[1] - 1.2).abs() < 1e-12);
        // strong duality: b^T y = c^T x
        assert!((b.dot(&sol.duals) - sol.objective).abs() < 1e-12);
        let slack = &c - a.transpose() * &sol.duals;
        assert!(slack.iter().all(|s| *s > -1e-12));
    }

    #[test]
    fn detects_infeasibility() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let c = DVector::from_vec(vec![0.0, 0.0]);
        assert!(matches!(solve(&a, &b, &c), Err(Error::LpFailure(_))));
        let p1 = phase_one(&a, &b).unwrap();
        assert!((p1.infeasibility - 1.0).abs() < 1e-12);
    }

    #[test]
    fn handles_negative_rhs_and_redundant_rows() {
        // -x - y = -2 (twice), min x  -> x = 0, y = 2
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, -1.0, -1.0]);
        let b = DVector::from_vec(vec![-2.0, -2.0]);
        let c = DVector::from_vec(vec![1.0, 0.0]);
        let sol = solve(&a, &b, &c).unwrap();
        assert!(sol.objective.abs() < 1e-12);
        assert!((sol.x[1] - 2.0).abs() < 1e-12);
    }
}

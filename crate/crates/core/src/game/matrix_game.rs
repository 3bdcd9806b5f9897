use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp;
use crate::tol;

/// Mixed equilibrium of a zero-sum game with loss matrix `L` (`k x t`).
#[derive(Debug, Clone)]
pub struct MatrixGameSolution {
    /// Row (minimizing) strategy.
    pub p: Vec<f64>,
    /// Column (maximizing) strategy.
    pub o: Vec<f64>,
    pub value: f64,
}

/// Solves both players' linear programs on the shifted matrix
/// `L' = L - min(L) + 1 > 0` and checks the duality gap.
pub fn solve_matrix_game(l: &DMatrix<f64>) -> Result<MatrixGameSolution> {
    let (k, t) = l.shape();
    if k == 0 || t == 0 {
        return Err(Error::Dimension("empty loss matrix".into()));
    }
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("loss matrix has non-finite entries".into()));
    }
    let shift = 1.0 - l.min();
    let lp_mat = l.add_scalar(shift);

    // rows: max 1^T u  s.t.  L'^T u + s = 1
    let mut a = DMatrix::zeros(t, k + t);
    a.view_mut((0, 0), (t, k)).copy_from(&lp_mat.transpose());
    a.view_mut((0, k), (t, t)).fill_with_identity();
    let mut c = DVector::zeros(k + t);
    c.rows_mut(0, k).fill(-1.0);
    let row = lp::solve(&a, &DVector::from_element(t, 1.0), &c)?;
    let u_sum = -row.objective;

    // columns: min 1^T w  s.t.  L' w - s = 1
    let mut a = DMatrix::zeros(k, t + k);
    a.view_mut((0, 0), (k, t)).copy_from(&lp_mat);
    for i in 0..k {
        a[(i, t + i)] = -1.0;
    }
    let mut c = DVector::zeros(t + k);
    c.rows_mut(0, t).fill(1.0);
    let col = lp::solve(&a, &DVector::from_element(k, 1.0), &c)?;
    let w_sum = col.objective;

    if !(u_sum > 0.0 && w_sum > 0.0) {
        return Err(Error::LpFailure("degenerate game LP".into()));
    }
    let v_row = 1.0 / u_sum - shift;
    let v_col = 1.0 / w_sum - shift;
    if (v_row - v_col).abs() > tol::GAME_GAP * (1.0 + v_row.abs()) {
        return Err(Error::LpFailure(format!("duality gap {:.3e}", (v_row - v_col).abs())));
    }
    let p: Vec<f64> = row.x.rows(0, k).iter().map(|u| u / u_sum).collect();
    let o: Vec<f64> = col.x.rows(0, t).iter().map(|w| w / w_sum).collect();
    Ok(MatrixGameSolution {
        p: renormalize(p),
        o: renormalize(o),
        value: 0.5 * (v_row + v_col),
    })
}

fn renormalize(mut v: Vec<f64>) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies() {
        let l = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sol = solve_matrix_game(&l).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-12);
        assert!(sol.p.iter().chain(&sol.o).all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn dominant_row_is_pure() {
        let l = DMatrix::from_row_slice(2, 3, &[0.1, 0.2, 0.3, 1.0, 2.0, 3.0]);
        let sol = solve_matrix_game(&l).unwrap();
        assert!((sol.p[0] - 1.0).abs() < 1e-12);
        assert!((sol.value - 0.3).abs() < 1e-12);
    }
}

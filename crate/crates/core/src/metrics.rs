//! Permutation-matched recovery metrics (MSE, SAD), SNR computation and the
//! relative-change statistic used by every stopping rule.

use crate::error::{Result, ScaError};
use nalgebra::DMatrix;

/// Result of an optimal column matching.
#[derive(Debug, Clone)]
pub struct MatchResult {
    pub score: f64,
    /// permutation[j] = index of the estimated column assigned to true column j.
    pub permutation: Vec<usize>,
    pub per_column: Vec<f64>,
}

/// Minimum-cost assignment on a square cost matrix (Hungarian method with
/// potentials, O(n^3)). Returns the assignment as row -> column.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "assignment needs a square cost matrix");
    // potentials and matching arrays are 1-indexed with a virtual 0 slot
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row matched to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn check_shapes(a0: &DMatrix<f64>, a_hat: &DMatrix<f64>) -> Result<()> {
    if a0.shape() != a_hat.shape() {
        return Err(ScaError::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a0.nrows(),
            a0.ncols(),
            a_hat.nrows(),
            a_hat.ncols()
        )));
    }
    Ok(())
}

/// Permutation-matched mean square error min_P (1/MN) ||A0 - A_hat P||_F^2.
///
/// The Frobenius objective separates columnwise, so the optimal linear
/// assignment on squared column distances attains the exact minimum.
pub fn mse(a0: &DMatrix<f64>, a_hat: &DMatrix<f64>) -> Result<MatchResult> {
    check_shapes(a0, a_hat)?;
    let n = a0.ncols();
    let m = a0.nrows();
    let cost = DMatrix::from_fn(n, n, |i, j| (a0.column(i) - a_hat.column(j)).norm_squared());
    let permutation = min_cost_assignment(&cost);
    let per_column: Vec<f64> = (0..n).map(|i| cost[(i, permutation[i])]).collect();
    let score = per_column.iter().sum::<f64>() / (m * n) as f64;
    Ok(MatchResult {
        score,
        permutation,
        per_column,
    })
}

/// Spectral angle between two columns, in radians; inputs must be nonzero.
fn angle(a: nalgebra::DVectorView<f64>, b: nalgebra::DVectorView<f64>) -> f64 {
    let c = a.dot(&b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

/// Permutation-matched spectral angle distance; per-column values in radians.
pub fn sad(a0: &DMatrix<f64>, a_hat: &DMatrix<f64>) -> Result<MatchResult> {
    check_shapes(a0, a_hat)?;
    let n = a0.ncols();
    for j in 0..n {
        if a0.column(j).norm() == 0.0 || a_hat.column(j).norm() == 0.0 {
            return Err(ScaError::ZeroColumn(j));
        }
    }
    let cost = DMatrix::from_fn(n, n, |i, j| {
        angle(a0.column(i).as_view(), a_hat.column(j).as_view())
    });
    let permutation = min_cost_assignment(&cost);
    let per_column: Vec<f64> = (0..n).map(|i| cost[(i, permutation[i])]).collect();
    let score = per_column.iter().sum::<f64>() / n as f64;
    Ok(MatchResult {
        score,
        permutation,
        per_column,
    })
}

/// SNR in decibels: 10 log10 of ((1/T) sum ||A0 s_t||^2) / (M sigma2).
///
/// sigma2 = 0 reports +infinity (sentinel for noiseless runs).
pub fn snr_db(clean: &DMatrix<f64>, sigma2: f64) -> f64 {
    if sigma2 <= 0.0 {
        return f64::INFINITY;
    }
    let t = clean.ncols() as f64;
    let m = clean.nrows() as f64;
    let power = clean.column_iter().map(|c| c.norm_squared()).sum::<f64>() / t;
    10.0 * (power / (m * sigma2)).log10()
}

/// Relative change ||X_new - X_old||_F / ||X_old||_F.
pub fn rel_change(x_new: &DMatrix<f64>, x_old: &DMatrix<f64>) -> Result<f64> {
    let denom = x_old.norm();
    if denom == 0.0 {
        return Err(ScaError::InvalidArgument(
            "rel_change undefined for zero reference".into(),
        ));
    }
    Ok((x_new - x_old).norm() / denom)
}

//! Invertible starting points for the solvers: a successive-projection
//! vertex selector (deterministic pure-pixel search on the affine lift of
//! the data) followed by a centroid-based simplex expansion.

use crate::error::{Result, ScaError};
use crate::kernels::log_abs_det;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Estimated vertices in reduced space together with their inverse.
#[derive(Debug, Clone)]
pub struct InitResult {
    pub a_init: DMatrix<f64>,
    pub b_init: DMatrix<f64>,
    pub expansion: f64,
    pub selected_indices: Vec<usize>,
}

fn invert_checked(a: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    if log_abs_det(a).is_singular() {
        return Err(ScaError::Singular(context.into()));
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| ScaError::Singular(context.into()))
}

/// Select N columns of Y by greedy maximal residual norm under successive
/// orthogonal projection, on the affine lift (a constant unit row appended
/// so affine geometry is respected). The rng breaks exact norm ties.
pub fn successive_projection_init(
    y: &DMatrix<f64>,
    n: usize,
    rng: &mut impl Rng,
) -> Result<InitResult> {
    let t = y.ncols();
    if t < n {
        return Err(ScaError::InvalidArgument(format!(
            "need T >= N, got T={t}, N={n}"
        )));
    }
    // affine lift: append a row of ones
    let mut residuals: Vec<DVector<f64>> = (0..t)
        .map(|j| {
            let mut v = DVector::zeros(y.nrows() + 1);
            for i in 0..y.nrows() {
                v[i] = y[(i, j)];
            }
            v[y.nrows()] = 1.0;
            v
        })
        .collect();

    let mut selected = Vec::with_capacity(n);
    for _pick in 0..n {
        let norms: Vec<f64> = residuals.iter().map(|r| r.norm()).collect();
        let max_norm = norms.iter().cloned().fold(0.0, f64::max);
        if max_norm <= 1e-12 {
            return Err(ScaError::Degenerate(
                "residual vanished before selecting N vertices".into(),
            ));
        }
        let ties: Vec<usize> = (0..t)
            .filter(|&j| !selected.contains(&j) && norms[j] >= max_norm * (1.0 - 1e-12))
            .collect();
        if ties.is_empty() {
            return Err(ScaError::Degenerate(
                "all maximal-residual columns already selected".into(),
            ));
        }
        let choice = ties[rng.gen_range(0..ties.len())];
        selected.push(choice);

        let q = residuals[choice].clone() / residuals[choice].norm();
        for r in residuals.iter_mut() {
            let proj = q.dot(r);
            *r -= &q * proj;
        }
    }

    let a_init = DMatrix::from_fn(y.nrows(), n, |i, k| y[(i, selected[k])]);
    let b_init = invert_checked(&a_init, "selected vertices are not affinely independent")?;
    Ok(InitResult {
        a_init,
        b_init,
        expansion: 1.0,
        selected_indices: selected,
    })
}

/// Push the vertices away from their centroid m = (1/N) A 1 by `kappa`:
/// a_i <- m + kappa (a_i - m), then invert the expanded matrix.
pub fn expand_vertices(a: &DMatrix<f64>, kappa: f64) -> Result<InitResult> {
    if kappa <= 0.0 {
        return Err(ScaError::InvalidArgument(format!(
            "expansion factor must be positive, got {kappa}"
        )));
    }
    let n = a.ncols();
    let m = a * DVector::from_element(n, 1.0 / n as f64);
    let mut expanded = a.clone();
    for j in 0..n {
        for i in 0..a.nrows() {
            expanded[(i, j)] = m[i] + kappa * (a[(i, j)] - m[i]);
        }
    }
    let b_init = invert_checked(&expanded, "expansion produced a singular matrix")?;
    Ok(InitResult {
        a_init: expanded,
        b_init,
        expansion: kappa,
        selected_indices: Vec::new(),
    })
}

/// Default expansion factor applied after vertex selection.
pub const DEFAULT_EXPANSION: f64 = 1.2;

/// SPA selection followed by expansion; the standard solver entry point.
pub fn expanded_vertex_init(
    y: &DMatrix<f64>,
    n: usize,
    kappa: f64,
    rng: &mut impl Rng,
) -> Result<InitResult> {
    let spa = successive_projection_init(y, n, rng)?;
    let mut out = expand_vertices(&spa.a_init, kappa)?;
    out.selected_indices = spa.selected_indices;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::LogDet;
    use crate::rng::stream;
    use crate::synth::sample_unit_simplex;
    use approx::assert_relative_eq;

    #[test]
    fn spa_finds_pure_pixels() {
        // N = 3, T = 50 with the three simplex vertices planted
        let mut rng = stream(61, &[0]);
        let n = 3;
        let vertices = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else {
                (i as f64) * 0.3 - (j as f64) * 0.1
            }
        });
        let mut s = sample_unit_simplex(n, 50, &mut rng);
        // plant the pure pixels at known columns
        for (k, col) in [7usize, 21, 40].iter().enumerate() {
            for i in 0..n {
                s[(i, *col)] = if i == k { 1.0 } else { 0.0 };
            }
        }
        let y = &vertices * &s;
        let init = successive_projection_init(&y, n, &mut rng).unwrap();
        let mut found = init.selected_indices.clone();
        found.sort_unstable();
        assert_eq!(found, vec![7, 21, 40]);
        assert!((&init.b_init * &init.a_init - DMatrix::identity(n, n)).norm() < 1e-8);
    }

    #[test]
    fn spa_identity_columns() {
        let y = DMatrix::<f64>::identity(4, 4);
        let mut rng = stream(62, &[0]);
        let init = successive_projection_init(&y, 4, &mut rng).unwrap();
        let mut sel = init.selected_indices.clone();
        sel.sort_unstable();
        assert_eq!(sel, vec![0, 1, 2, 3]);
    }

    #[test]
    fn spa_never_reselects_duplicates() {
        let mut rng = stream(63, &[0]);
        let base = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.1 });
        // duplicate every column
        let y = DMatrix::from_fn(3, 6, |i, j| base[(i, j / 2)]);
        let init = successive_projection_init(&y, 3, &mut rng).unwrap();
        let mut sel = init.selected_indices.clone();
        sel.dedup();
        assert_eq!(sel.len(), 3);
        let cols: Vec<usize> = init.selected_indices.iter().map(|&j| j / 2).collect();
        let mut unique = cols.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), 3, "selected a duplicated column twice");
    }

    #[test]
    fn spa_degenerate_data_errors() {
        // rank-1 data cannot supply 3 affinely independent vertices
        let y = DMatrix::from_fn(3, 10, |i, j| (i as f64 + 1.0) * (j as f64 + 1.0));
        let mut rng = stream(64, &[0]);
        assert!(successive_projection_init(&y, 3, &mut rng).is_err());
    }

    #[test]
    fn expand_identity_factor_is_noop() {
        let mut rng = stream(65, &[0]);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(0.0..1.0));
        let out = expand_vertices(&a, 1.0).unwrap();
        assert!((out.a_init - &a).norm() < 1e-14);
    }

    #[test]
    fn expand_affine_formula_n2() {
        let a = DMatrix::<f64>::identity(2, 2);
        let out = expand_vertices(&a, 2.0).unwrap();
        assert_relative_eq!(out.a_init[(0, 0)], 1.5, epsilon = 1e-14);
        assert_relative_eq!(out.a_init[(1, 0)], -0.5, epsilon = 1e-14);
        assert_relative_eq!(out.a_init[(0, 1)], -0.5, epsilon = 1e-14);
        assert_relative_eq!(out.a_init[(1, 1)], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn expand_determinant_scaling() {
        // det(expanded) = kappa^{N-1} det(A)
        let mut rng = stream(66, &[0]);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        for &kappa in &[0.5, 1.2, 3.0] {
            let out = expand_vertices(&a, kappa).unwrap();
            let base = match log_abs_det(&a) {
                LogDet::Finite { value, .. } => value,
                _ => panic!("singular test matrix"),
            };
            let expanded = match log_abs_det(&out.a_init) {
                LogDet::Finite { value, .. } => value,
                _ => panic!("singular expansion"),
            };
            assert_relative_eq!(expanded, base + 3.0 * kappa.ln(), epsilon = 1e-10);
        }
    }

    #[test]
    fn expanded_simplex_contains_original() {
        let mut rng = stream(67, &[0]);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(0.0..1.0));
        let out = expand_vertices(&a, 1.5).unwrap();
        // barycentric coordinates of the original vertices w.r.t. the
        // expanded ones: solve [A_exp; 1^T] theta = [a_i; 1]
        let mut sys = DMatrix::zeros(4, 3);
        for j in 0..3 {
            for i in 0..3 {
                sys[(i, j)] = out.a_init[(i, j)];
            }
            sys[(3, j)] = 1.0;
        }
        let pinv = (sys.transpose() * &sys).try_inverse().unwrap() * sys.transpose();
        for v in 0..3 {
            let mut rhs = DVector::zeros(4);
            for i in 0..3 {
                rhs[i] = a[(i, v)];
            }
            rhs[3] = 1.0;
            let theta = &pinv * &rhs;
            let res = (&sys * &theta - &rhs).norm();
            assert!(res <= 1e-8);
            assert!(theta.min() >= -1e-10, "negative barycentric coordinate");
        }
    }

    #[test]
    fn init_is_deterministic_for_fixed_stream() {
        let mut rng1 = stream(68, &[0]);
        let y = DMatrix::from_fn(3, 25, |i, j| ((i * 7 + j * 13) % 11) as f64 / 11.0 + 0.05);
        let a = expanded_vertex_init(&y, 3, 1.2, &mut rng1).unwrap();
        let mut rng2 = stream(68, &[0]);
        let b = expanded_vertex_init(&y, 3, 1.2, &mut rng2).unwrap();
        assert_eq!(a.selected_indices, b.selected_indices);
        assert_eq!(a.b_init, b.b_init);
    }
}

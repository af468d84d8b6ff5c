//! Dense linear algebra on small-to-moderate matrices: top-k symmetric
//! eigendecomposition, pseudo-inverse application, condition number and
//! reusable SPD solves.

use crate::error::{Result, ScaError};
use nalgebra::{DMatrix, DVector};

/// Top-k eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct EigPair {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

fn check_symmetric(r: &DMatrix<f64>) -> Result<()> {
    let mut max_asym = 0.0_f64;
    for i in 0..r.nrows() {
        for j in (i + 1)..r.ncols() {
            max_asym = max_asym.max((r[(i, j)] - r[(j, i)]).abs());
        }
    }
    let scale = r.amax().max(1.0);
    if max_asym > 1e-10 * scale {
        return Err(ScaError::NotSymmetric(max_asym));
    }
    Ok(())
}

/// Top-k eigenpairs of a symmetric matrix with a deterministic sign
/// convention: the largest-magnitude entry of each eigenvector is positive.
pub fn sym_eig_top(r: &DMatrix<f64>, k: usize) -> Result<EigPair> {
    let m = r.nrows();
    if r.ncols() != m {
        return Err(ScaError::ShapeMismatch(format!(
            "expected square matrix, got {}x{}",
            m,
            r.ncols()
        )));
    }
    if k == 0 || k > m {
        return Err(ScaError::InvalidArgument(format!(
            "k must be in 1..={m}, got {k}"
        )));
    }
    check_symmetric(r)?;
    // symmetrize round-off before factorizing
    let sym = (r + r.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut values = DVector::zeros(k);
    let mut vectors = DMatrix::zeros(m, k);
    for (out_col, &idx) in order.iter().take(k).enumerate() {
        values[out_col] = eig.eigenvalues[idx];
        let v = eig.eigenvectors.column(idx);
        let mut max_abs = 0.0;
        let mut sign = 1.0;
        for i in 0..m {
            if v[i].abs() > max_abs {
                max_abs = v[i].abs();
                sign = v[i].signum();
            }
        }
        for i in 0..m {
            vectors[(i, out_col)] = sign * v[i];
        }
    }
    Ok(EigPair { values, vectors })
}

/// (Y^T)^dagger 1 = (Y Y^T)^{-1} Y 1 for full-row-rank Y (N x T, T >= N).
pub fn pinv_apply_ones(y: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = y.nrows();
    let t = y.ncols();
    if t < n {
        return Err(ScaError::RankDeficient(format!(
            "need T >= N for full row rank, got N={n}, T={t}"
        )));
    }
    let gram = y * y.transpose();
    let eig = sym_eig_top(&gram, n)?;
    let lam_max = eig.values[0].max(0.0);
    let lam_min = eig.values[n - 1];
    if lam_max <= 0.0 || lam_min <= 1e-20 * lam_max {
        return Err(ScaError::RankDeficient(format!(
            "smallest singular value ratio {:.3e} below threshold",
            (lam_min.max(0.0) / lam_max.max(f64::MIN_POSITIVE)).sqrt()
        )));
    }
    let rhs = y * DVector::from_element(t, 1.0);
    // solve gram x = rhs through the eigendecomposition
    let proj = eig.vectors.transpose() * rhs;
    let scaled = DVector::from_fn(n, |i, _| proj[i] / eig.values[i]);
    Ok(&eig.vectors * scaled)
}

/// 2-norm condition number: ratio of extreme singular values.
pub fn cond_2(a: &DMatrix<f64>) -> f64 {
    let svd = a.clone().svd(false, false);
    let s_max = svd.singular_values.max();
    let s_min = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if s_min <= 0.0 || !s_min.is_normal() {
        f64::INFINITY
    } else {
        s_max / s_min
    }
}

/// Cholesky-backed SPD solver; the factorization is computed once and
/// reused across repeated solves against the same matrix.
pub struct SpdSolver {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    dim: usize,
}

impl SpdSolver {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(h)?;
        let dim = h.nrows();
        let chol = h
            .clone()
            .cholesky()
            .ok_or_else(|| ScaError::Factorization("matrix is not positive definite".into()))?;
        Ok(SpdSolver { chol, dim })
    }

    pub fn solve(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(g.nrows(), self.dim, "right-hand side row mismatch");
        self.chol.solve(g)
    }

    pub fn solve_vec(&self, g: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(g)
    }
}

/// Convenience one-shot SPD solve.
pub fn solve_spd(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(SpdSolver::new(h)?.solve(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Full-spectrum cyclic Jacobi oracle, independent of nalgebra.
    fn jacobi_eig(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        let n = a.nrows();
        let mut m = a.clone();
        let mut v = DMatrix::<f64>::identity(n, n);
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[(p, q)] * m[(p, q)];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if m[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let vals: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        (vals, v)
    }

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn sym_eig_top_diag() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let eig = sym_eig_top(&d, 2).unwrap();
        assert_relative_eq!(eig.values[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(eig.values[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(eig.vectors[(0, 0)].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(eig.vectors[(1, 1)].abs(), 1.0, epsilon = 1e-12);
        // sign convention: largest-magnitude entry positive
        assert!(eig.vectors[(0, 0)] > 0.0 && eig.vectors[(1, 1)] > 0.0);
    }

    #[test]
    fn sym_eig_top_rank_one() {
        let v = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let r = &v * v.transpose();
        let eig = sym_eig_top(&r, 1).unwrap();
        assert_relative_eq!(eig.values[0], 1.0, epsilon = 1e-12);
        let dot = (eig.vectors.column(0).transpose() * &v)[(0, 0)].abs();
        assert_relative_eq!(dot, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sym_eig_top_matches_jacobi_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let r = random_symmetric(10, &mut rng);
            let eig = sym_eig_top(&r, 10).unwrap();
            let (mut oracle_vals, _) = jacobi_eig(&r);
            oracle_vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for i in 0..10 {
                assert!((eig.values[i] - oracle_vals[i]).abs() < 1e-8);
            }
            // orthonormality and residuals
            let gram = eig.vectors.transpose() * &eig.vectors;
            assert_relative_eq!((gram - DMatrix::identity(10, 10)).norm(), 0.0, epsilon = 1e-10);
            for i in 0..10 {
                let v = eig.vectors.column(i);
                let res = (&r * v) - eig.values[i] * v;
                assert!(res.norm() <= 1e-8 * r.norm());
            }
            // full-spectrum reconstruction
            let rec = &eig.vectors * DMatrix::from_diagonal(&eig.values) * eig.vectors.transpose();
            assert!((rec - &r).norm() < 1e-8);
        }
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig_top(&a, 1), Err(ScaError::NotSymmetric(_))));
    }

    #[test]
    fn pinv_apply_ones_identity() {
        let y = DMatrix::<f64>::identity(4, 4);
        let out = pinv_apply_ones(&y).unwrap();
        for i in 0..4 {
            assert_relative_eq!(out[i], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pinv_apply_ones_matches_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let y = DMatrix::from_fn(4, 50, |_, _| rng.gen_range(-1.0..1.0));
        let out = pinv_apply_ones(&y).unwrap();
        // explicit SVD pseudo-inverse oracle: (Y^T)^dagger = V S^{-1} U^T for Y^T = U S V^T
        let yt = y.transpose();
        let svd = yt.svd(true, true);
        let u = svd.u.as_ref().unwrap();
        let vt = svd.v_t.as_ref().unwrap();
        let ones = DVector::from_element(50, 1.0);
        let mut proj = u.transpose() * &ones;
        for i in 0..proj.len() {
            proj[i] /= svd.singular_values[i];
        }
        let oracle = vt.transpose() * proj;
        assert!((out - oracle).norm() < 1e-10);
    }

    #[test]
    fn pinv_apply_ones_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let y = DMatrix::from_fn(3, 20, |_, _| rng.gen_range(-1.0..1.0));
        let base = pinv_apply_ones(&y).unwrap();
        let mut perm: Vec<usize> = (0..20).collect();
        perm.shuffle(&mut rng);
        let shuffled = DMatrix::from_fn(3, 20, |i, j| y[(i, perm[j])]);
        let out = pinv_apply_ones(&shuffled).unwrap();
        assert!((base - out).norm() < 1e-10);
    }

    #[test]
    fn pinv_apply_ones_rejects_rank_deficient() {
        let mut y = DMatrix::<f64>::zeros(3, 10);
        for j in 0..10 {
            y[(0, j)] = j as f64;
            y[(1, j)] = 2.0 * j as f64; // linearly dependent rows
            y[(2, j)] = 1.0;
        }
        assert!(matches!(
            pinv_apply_ones(&y),
            Err(ScaError::RankDeficient(_))
        ));
    }

    #[test]
    fn cond_2_examples() {
        assert_relative_eq!(cond_2(&DMatrix::identity(3, 3)), 1.0, epsilon = 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 0.1]));
        assert_relative_eq!(cond_2(&d), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn cond_2_matches_eig_oracle_and_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let a = DMatrix::from_fn(10, 5, |_, _| rng.gen_range(-1.0..1.0));
        // singular values from the eigendecomposition of A^T A
        let gram = a.transpose() * &a;
        let eig = sym_eig_top(&gram, 5).unwrap();
        let oracle = (eig.values[0] / eig.values[4]).sqrt();
        assert_relative_eq!(cond_2(&a), oracle, max_relative = 1e-8);
        assert_relative_eq!(cond_2(&(&a * 7.0)), cond_2(&a), max_relative = 1e-10);
    }

    #[test]
    fn solve_spd_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let g = DMatrix::from_fn(4, 2, |_, _| rng.gen_range(-1.0..1.0));
        let x = solve_spd(&DMatrix::identity(4, 4), &g).unwrap();
        assert!((&x - &g).norm() < 1e-14);

        let h2 = DMatrix::<f64>::identity(3, 3) * 2.0;
        let ones = DMatrix::from_element(3, 1, 1.0);
        let x = solve_spd(&h2, &ones).unwrap();
        for i in 0..3 {
            assert_relative_eq!(x[(i, 0)], 0.5, epsilon = 1e-14);
        }

        // random SPD residual check with a reused factorization
        let a = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
        let h = &a * a.transpose() + DMatrix::identity(6, 6);
        let solver = SpdSolver::new(&h).unwrap();
        for _ in 0..3 {
            let g = DMatrix::from_fn(6, 3, |_, _| rng.gen_range(-1.0..1.0));
            let x = solver.solve(&g);
            assert!((&h * &x - &g).norm() <= 1e-9 * g.norm());
        }

        // non-SPD rejected
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(SpdSolver::new(&neg).is_err());
    }
}

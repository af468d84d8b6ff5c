//! Squared-hinge variant of the minimum-volume fit. The penalty is smooth,
//! so the whole problem is solved by one extrapolated proximal-gradient loop
//! whose prox step is the cheap affine projection onto the column-sum
//! constraint set.

use crate::epg::{epg_minimize_cached, CachedObjective, CachedProjection, CandidateView, EpgControl};
use crate::error::{Result, ScaError};
use crate::kernels::{hinge, log_abs_det, project_affine_colsum};
use crate::report::{RunReport, Termination};
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct H2Config {
    pub lambda: f64,
    /// Sufficient-decrease constant.
    pub beta: f64,
    /// Initial curvature guess for backtracking.
    pub nu: f64,
    /// Backtracking growth factor.
    pub c: f64,
    pub rc_tol: f64,
    pub max_iter: usize,
    pub extrapolate: bool,
    /// Test decrease against f at the previous iterate instead of f at the
    /// extrapolated point.
    pub anchor_at_prev: bool,
}

impl H2Config {
    pub fn new(lambda: f64) -> Self {
        H2Config {
            lambda,
            beta: 0.5,
            nu: 1.0,
            c: 2.0,
            rc_tol: 1e-6,
            max_iter: 10_000,
            extrapolate: true,
            anchor_at_prev: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.lambda >= 0.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.nu > 0.0
            && self.c > 1.0
            && self.rc_tol > 0.0;
        if !ok {
            return Err(ScaError::InvalidArgument(
                "h2 config parameters out of range".into(),
            ));
        }
        Ok(())
    }
}

/// Objective -log|det B| + lambda sum hinge(b_i^T y_t)^2 and its gradient
/// -B^{-T} - 2 lambda H Y^T with H_it = hinge(b_i^T y_t). Singular B yields
/// (+inf, None).
pub fn h2_objective_and_grad(
    b: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
) -> (f64, Option<DMatrix<f64>>) {
    let ld = log_abs_det(b);
    if ld.is_singular() {
        return (f64::INFINITY, None);
    }
    let Some(inv) = b.clone().try_inverse() else {
        return (f64::INFINITY, None);
    };
    let by = b * y;
    let hm = by.map(hinge);
    let value = -ld.value_or_inf() + lambda * hm.iter().map(|&h| h * h).sum::<f64>();
    let grad = -inv.transpose() - &hm * y.transpose() * (2.0 * lambda);
    (value, Some(grad))
}

/// Objective value only; avoids the inverse needed by the gradient.
pub fn h2_objective(b: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> f64 {
    let ld = log_abs_det(b);
    if ld.is_singular() {
        return f64::INFINITY;
    }
    let by = b * y;
    -ld.value_or_inf() + lambda * by.iter().map(|&v| hinge(v).powi(2)).sum::<f64>()
}

/// Objective closures over the cached product B·Y, with Y^T precomputed for
/// the gradient pullback.
struct H2Cached {
    yt: DMatrix<f64>,
    lambda: f64,
}

impl CachedObjective for H2Cached {
    fn value(&self, b: &DMatrix<f64>, by: &DMatrix<f64>) -> f64 {
        let ld = log_abs_det(b);
        if ld.is_singular() {
            return f64::INFINITY;
        }
        -ld.value_or_inf() + self.lambda * by.iter().map(|&v| hinge(v).powi(2)).sum::<f64>()
    }

    fn value_grad(&self, b: &DMatrix<f64>, by: &DMatrix<f64>) -> (f64, Option<DMatrix<f64>>) {
        let ld = log_abs_det(b);
        if ld.is_singular() {
            return (f64::INFINITY, None);
        }
        let Some(inv) = b.clone().try_inverse() else {
            return (f64::INFINITY, None);
        };
        let n = by.nrows();
        let mut hm = DMatrix::<f64>::zeros(n, by.ncols());
        let mut acc = vec![0.0; n];
        {
            let src = by.as_slice();
            let dst = hm.as_mut_slice();
            for t in 0..by.ncols() {
                let base = t * n;
                for i in 0..n {
                    let h = hinge(src[base + i]);
                    dst[base + i] = h;
                    acc[i] += h * h;
                }
            }
        }
        let value = -ld.value_or_inf() + self.lambda * acc.iter().sum::<f64>();
        let mut grad = -inv.transpose();
        grad.gemm(-2.0 * self.lambda, &hm, &self.yt, 1.0);
        (value, Some(grad))
    }

    fn value_candidate(
        &self,
        cand: &DMatrix<f64>,
        view: &CandidateView,
        candy_out: &mut DMatrix<f64>,
    ) -> f64 {
        let ld = log_abs_det(cand);
        if ld.is_singular() {
            return f64::INFINITY;
        }
        let mut acc = vec![0.0; cand.nrows()];
        view.scan(candy_out, |i, v| {
            let h = hinge(v);
            acc[i] += h * h;
        });
        -ld.value_or_inf() + self.lambda * acc.iter().sum::<f64>()
    }
}

pub fn h2_solve(
    y: &DMatrix<f64>,
    p: &DVector<f64>,
    b0: &DMatrix<f64>,
    cfg: &H2Config,
) -> Result<(DMatrix<f64>, RunReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = y.nrows();
    if b0.nrows() != n || b0.ncols() != n || p.len() != n {
        return Err(ScaError::ShapeMismatch(format!(
            "B0 {}x{}, p len {}, data dim {}",
            b0.nrows(),
            b0.ncols(),
            p.len(),
            n
        )));
    }
    let b_start = project_affine_colsum(b0, p);
    if log_abs_det(&b_start).is_singular() {
        return Err(ScaError::Singular(
            "initial point not invertible after projection".into(),
        ));
    }
    let ctl = EpgControl {
        beta: cfg.beta,
        nu: cfg.nu,
        c: cfg.c,
        rc_tol: cfg.rc_tol,
        max_iter: cfg.max_iter,
        extrapolate: cfg.extrapolate,
        anchor_at_prev: cfg.anchor_at_prev,
    };
    let obj = H2Cached {
        yt: y.transpose(),
        lambda: cfg.lambda,
    };
    let run = epg_minimize_cached(&obj, &CachedProjection::AffineColsum(p), y, &b_start, &ctl);
    let mut report = RunReport::new("h2-sisal", cfg.lambda);
    report.iterations = run.iterations;
    report.termination = run.termination;
    report.objective_final = run.best_value;
    report.objective_trace = run.objective_trace;
    report.rel_change_trace = run.rel_change_trace;
    report.mu_trace = run.mu_trace;
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    if report.termination == Termination::StepSizeStall && run.iterations == 0 {
        // unusable start (infinite objective) is an input error, not a stall
        return Err(ScaError::Singular("objective infinite at start".into()));
    }
    Ok((run.b, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::expanded_vertex_init;
    use crate::linalg::pinv_apply_ones;
    use crate::metrics::mse;
    use crate::rng::stream;
    use crate::synth::{generate, SnrSpec, SynthSpec};
    use rand::Rng;

    fn random_invertible(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        loop {
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            if let Some(inv) = b.clone().try_inverse() {
                if inv.norm() < 1e6 {
                    return b;
                }
            }
        }
    }

    #[test]
    fn cached_objective_matches_plain_evaluation() {
        let mut rng = stream(77, &[0]);
        for _ in 0..20 {
            let b = random_invertible(4, &mut rng);
            let y = DMatrix::from_fn(4, 30, |_, _| rng.gen_range(-1.0..1.0));
            let obj = H2Cached {
                yt: y.transpose(),
                lambda: 3.0,
            };
            let by = &b * &y;
            let (v_ref, g_ref) = h2_objective_and_grad(&b, &y, 3.0);
            let (v, g) = obj.value_grad(&b, &by);
            assert!((v - v_ref).abs() <= 1e-12 * v_ref.abs().max(1.0));
            assert!((obj.value(&b, &by) - v_ref).abs() <= 1e-12 * v_ref.abs().max(1.0));
            let diff = (g.unwrap() - g_ref.unwrap()).norm();
            assert!(diff <= 1e-12, "gradient mismatch {diff:.3e}");
        }
    }

    #[test]
    fn objective_identity_on_nonnegative_data() {
        let y = DMatrix::from_row_slice(2, 3, &[0.1, 0.5, 0.0, 0.3, 0.2, 1.0]);
        let b = DMatrix::<f64>::identity(2, 2);
        let (v, g) = h2_objective_and_grad(&b, &y, 4.0);
        assert_eq!(v, 0.0);
        assert!((g.unwrap() + DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn zero_lambda_reduces_to_logdet_gradient() {
        let mut rng = stream(101, &[0]);
        let b = random_invertible(3, &mut rng);
        let y = DMatrix::from_fn(3, 5, |_, _| rng.gen_range(-1.0..1.0));
        let (_, g) = h2_objective_and_grad(&b, &y, 0.0);
        let expected = -b.clone().try_inverse().unwrap().transpose();
        assert!((g.unwrap() - expected).norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = stream(103, &[0]);
        for _ in 0..10 {
            let b = random_invertible(3, &mut rng);
            let y = DMatrix::from_fn(3, 6, |_, _| rng.gen_range(-1.0..1.0));
            let lambda = rng.gen_range(0.5..3.0);
            let (_, g) = h2_objective_and_grad(&b, &y, lambda);
            let g = g.unwrap();
            let eps = 1e-6;
            for i in 0..3 {
                for j in 0..3 {
                    let mut bp = b.clone();
                    let mut bm = b.clone();
                    bp[(i, j)] += eps;
                    bm[(i, j)] -= eps;
                    let (fp, _) = h2_objective_and_grad(&bp, &y, lambda);
                    let (fm, _) = h2_objective_and_grad(&bm, &y, lambda);
                    let fd = (fp - fm) / (2.0 * eps);
                    let scale = g[(i, j)].abs().max(1.0);
                    assert!(
                        (g[(i, j)] - fd).abs() / scale < 1e-5,
                        "entry ({i},{j}): analytic {} vs fd {fd}",
                        g[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn singular_input_signals_infinity() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let y = DMatrix::from_element(2, 3, 0.2);
        let (v, g) = h2_objective_and_grad(&b, &y, 1.0);
        assert_eq!(v, f64::INFINITY);
        assert!(g.is_none());
    }

    fn noiseless_instance(seed: u64) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let spec = SynthSpec::new(5, 5, 1000, SnrSpec::Noiseless, seed);
        let mut rng = stream(seed, &[5, 5, 1000, 2]);
        let ds = generate(&spec, &mut rng).unwrap();
        let a0 = ds.ground_truth.as_ref().unwrap().a0_matrix();
        let y = ds.y.clone();
        let p = pinv_apply_ones(&y).unwrap();
        let init = expanded_vertex_init(&y, 5, 1.2, &mut rng).unwrap();
        (y, a0, p, init.b_init)
    }

    #[test]
    fn solve_recovers_noiseless_vertices() {
        let (y, a0, p, b0) = noiseless_instance(2024);
        let mut cfg = H2Config::new(10.0);
        cfg.rc_tol = 1e-9;
        let (b, report) = h2_solve(&y, &p, &b0, &cfg).unwrap();
        let a_hat = b.clone().try_inverse().unwrap();
        let err = mse(&a0, &a_hat).unwrap().score;
        assert!(err <= 1e-4, "MSE {err}, termination {:?}", report.termination);
        // feasibility of the returned iterate
        for j in 0..5 {
            assert!((b.column(j).sum() - p[j]).abs() < 1e-10);
        }
        // backtracked curvature stays bounded on a converged run
        assert!(report.mu_trace.iter().all(|m| m.is_finite()));
    }

    #[test]
    fn monotone_without_extrapolation() {
        let (y, _a0, p, b0) = noiseless_instance(41);
        let mut cfg = H2Config::new(5.0);
        cfg.extrapolate = false;
        cfg.max_iter = 200;
        let (_b, report) = h2_solve(&y, &p, &b0, &cfg).unwrap();
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "increase: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn acceptance_inequality_audited_per_iteration() {
        let (y, _a0, p, b0) = noiseless_instance(43);
        let cfg = H2Config::new(5.0);
        let ctl = crate::epg::EpgControl {
            beta: cfg.beta,
            nu: cfg.nu,
            c: cfg.c,
            rc_tol: cfg.rc_tol,
            max_iter: 300,
            extrapolate: true,
            anchor_at_prev: false,
        };
        let b_start = project_affine_colsum(&b0, &p);
        let obj = H2Cached {
            yt: y.transpose(),
            lambda: cfg.lambda,
        };
        let run = crate::epg::epg_minimize_cached(
            &obj,
            &CachedProjection::AffineColsum(&p),
            &y,
            &b_start,
            &ctl,
        );
        assert!(!run.acceptance_trace.is_empty());
        for &(anchor, h, f_acc) in &run.acceptance_trace {
            assert!(
                f_acc <= anchor + cfg.beta * h + 1e-12,
                "acceptance violated: f {f_acc}, anchor {anchor}, h {h}"
            );
        }
    }

    #[test]
    fn plain_projected_descent_decreases_strictly() {
        // smooth sanity case: no extrapolation, no penalty, nonnegative data
        let mut rng = stream(47, &[0]);
        let y = DMatrix::from_fn(3, 40, |_, _| rng.gen_range(0.0..1.0));
        let p = DVector::from_fn(3, |i, _| 1.0 + 0.1 * i as f64);
        let b0 = project_affine_colsum(&random_invertible(3, &mut rng), &p);
        let mut cfg = H2Config::new(0.0);
        cfg.extrapolate = false;
        cfg.max_iter = 30;
        cfg.rc_tol = 1e-14;
        let (_b, report) = h2_solve(&y, &p, &b0, &cfg).unwrap();
        for w in report.objective_trace.windows(2) {
            assert!(w[1] < w[0], "no strict decrease: {} -> {}", w[0], w[1]);
        }
    }
}

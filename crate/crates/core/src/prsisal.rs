//! Probabilistic variant: negativity is penalized by -log Phi terms from a
//! Gaussian noise model instead of hinges. The row-normalized reformulation
//! B = Diag(d) C (unit-norm rows c_i, positive scales d_i) turns the row
//! normalizations into explicit variables; the anchor constraint is moved
//! into a quadratic penalty with weight eta that grows over continuation
//! stages. Each stage runs block coordinate descent: an exact-step
//! extrapolated proximal-gradient solve in d, and a
//! majorization-minimization solve in C where the probit terms are majorized
//! by quadratics and the surrogate is minimized over the product of unit
//! spheres.

use crate::epg::{epg_minimize_cached, CachedObjective, CachedProjection, CandidateView, EpgControl};
use crate::error::{Result, ScaError};
use crate::kernels::{
    fista_alpha, log_abs_det, log_norm_cdf, mm_weight, norm_logpdf, project_affine_colsum,
    prox_neg_log, FistaSchedule,
};
use crate::metrics::rel_change;
use crate::report::{RunReport, Termination};
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct PrConfig {
    pub eta0: f64,
    pub eta_growth: f64,
    pub outer_max: usize,
    /// Stop a fixed-eta stage when rc of B between sweeps falls below this.
    pub inner_rc_tol: f64,
    /// Total budget of BCD sweeps across the whole run.
    pub inner_max: usize,
    pub d_rc_tol: f64,
    pub c_mm_rc_tol: f64,
    pub c_pg_rc_tol: f64,
    /// Weight on the probit log-likelihood sum.
    pub tau: f64,
}

impl Default for PrConfig {
    fn default() -> Self {
        PrConfig {
            eta0: 1.0,
            eta_growth: 5.0,
            outer_max: 10,
            inner_rc_tol: 1e-7,
            inner_max: 400_000,
            d_rc_tol: 1e-5,
            c_mm_rc_tol: 1e-5,
            c_pg_rc_tol: 1e-3,
            tau: 1.0,
        }
    }
}

impl PrConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.eta0 > 0.0
            && self.eta_growth > 1.0
            && self.tau > 0.0
            && self.inner_rc_tol > 0.0
            && self.d_rc_tol > 0.0
            && self.c_mm_rc_tol > 0.0
            && self.c_pg_rc_tol > 0.0;
        if !ok {
            return Err(ScaError::InvalidArgument(
                "pr config parameters out of range".into(),
            ));
        }
        Ok(())
    }
}

/// Current (C, d) factorization plus problem constants.
#[derive(Debug, Clone)]
pub struct PrState {
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
    pub eta: f64,
    pub tau: f64,
    pub sigma: f64,
    pub p: DVector<f64>,
}

impl PrState {
    pub fn b(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.c.nrows(), self.c.ncols(), |i, j| {
            self.d[i] * self.c[(i, j)]
        })
    }
}

fn phi_ratio(x: f64) -> f64 {
    (norm_logpdf(x) - log_norm_cdf(x)).exp()
}

/// Diagnostic objective on the raw (unreduced-by-rows) variable:
/// -log|det B| + log||B^T 1|| + ||Y^T B^T 1 - 1||^2 / (2 sigma^2 T ||B^T 1||^2)
/// - (1/T) sum log Phi(b_i^T y_t / (sigma ||b_i||)).
pub fn form2_objective(b: &DMatrix<f64>, y: &DMatrix<f64>, sigma: f64) -> f64 {
    let ld = log_abs_det(b);
    if ld.is_singular() {
        return f64::INFINITY;
    }
    let n = b.nrows();
    let t = y.ncols() as f64;
    let row_norms: Vec<f64> = (0..n).map(|i| b.row(i).norm()).collect();
    if row_norms.iter().any(|&r| r == 0.0) {
        return f64::INFINITY;
    }
    let bt1 = DVector::from_fn(n, |j, _| b.column(j).sum());
    let bt1_norm = bt1.norm();
    if bt1_norm == 0.0 {
        return f64::INFINITY;
    }
    let resid = y.transpose() * &bt1 - DVector::from_element(y.ncols(), 1.0);
    let g = bt1_norm.ln() + resid.norm_squared() / (2.0 * sigma * sigma * t * bt1_norm * bt1_norm);
    let by = b * y;
    let mut log_phi_sum = 0.0;
    for i in 0..n {
        for tt in 0..y.ncols() {
            log_phi_sum += log_norm_cdf(by[(i, tt)] / (sigma * row_norms[i]));
        }
    }
    -ld.value_or_inf() + g - log_phi_sum / t
}

/// Penalized stage objective on the factored variable:
/// -log|det C| - sum log d_i - (tau/T) sum log Phi(c_i^T ybar_t)
/// + eta ||C^T d - p||^2.
pub fn f_eta(
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    ybar: &DMatrix<f64>,
    p: &DVector<f64>,
    eta: f64,
    tau: f64,
) -> f64 {
    let ld = log_abs_det(c);
    if ld.is_singular() {
        return f64::INFINITY;
    }
    if d.iter().any(|&di| di <= 0.0) {
        return f64::INFINITY;
    }
    let t = ybar.ncols() as f64;
    let cy = c * ybar;
    let log_phi_sum: f64 = cy.iter().map(|&x| log_norm_cdf(x)).sum();
    let log_d_sum: f64 = d.iter().map(|&di| di.ln()).sum();
    let resid = c.transpose() * d - p;
    -ld.value_or_inf() - log_d_sum - tau / t * log_phi_sum + eta * resid.norm_squared()
}

/// Direct objective of the constrained formulation (penalty dropped):
/// -log|det B| - (tau/T) sum log Phi(b_i^T ybar_t / ||b_i||), with ybar the
/// data already divided by sigma.
pub fn pr_objective_direct(b: &DMatrix<f64>, ybar: &DMatrix<f64>, tau: f64) -> f64 {
    let ld = log_abs_det(b);
    if ld.is_singular() {
        return f64::INFINITY;
    }
    let n = b.nrows();
    let t = ybar.ncols() as f64;
    let mut log_phi_sum = 0.0;
    for i in 0..n {
        let norm = b.row(i).norm();
        if norm == 0.0 {
            return f64::INFINITY;
        }
        for tt in 0..ybar.ncols() {
            log_phi_sum += log_norm_cdf(b.row(i).transpose().dot(&ybar.column(tt)) / norm);
        }
    }
    -ld.value_or_inf() - tau / t * log_phi_sum
}

/// Smooth part of the d-block objective, eta ||C^T d - p||^2, with its
/// gradient 2 eta C (C^T d - p).
pub fn d_smooth_value_grad(
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    p: &DVector<f64>,
    eta: f64,
) -> (f64, DVector<f64>) {
    let r = c.transpose() * d - p;
    (eta * r.norm_squared(), c * r * (2.0 * eta))
}

/// d-block solve: min over d > 0 of eta ||C^T d - p||^2 - sum log d_i, by
/// extrapolated proximal gradient with the exact Lipschitz step
/// mu = 2 eta sigma_max(C)^2; the smooth gradient is 2 eta C (C^T d - p).
pub fn solve_d(
    c: &DMatrix<f64>,
    d0: &DVector<f64>,
    p: &DVector<f64>,
    eta: f64,
    rc_tol: f64,
) -> Result<DVector<f64>> {
    if eta <= 0.0 {
        return Err(ScaError::InvalidArgument(
            "d-step requires eta > 0 (the objective is unbounded otherwise)".into(),
        ));
    }
    if d0.iter().any(|&v| v <= 0.0) {
        return Err(ScaError::InvalidArgument("d0 must be positive".into()));
    }
    let smax = c.clone().singular_values()[0];
    let mu = 2.0 * eta * smax * smax;
    let objective = |d: &DVector<f64>| {
        d_smooth_value_grad(c, d, p, eta).0 - d.iter().map(|&v| v.ln()).sum::<f64>()
    };
    let grad = |d: &DVector<f64>| d_smooth_value_grad(c, d, p, eta).1;

    let mut d_prev = d0.clone();
    let mut d = d0.clone();
    let mut best = d0.clone();
    let mut best_val = objective(d0);
    let mut schedule = FistaSchedule::new();
    for _ in 0..50_000 {
        let (alpha, next) = fista_alpha(schedule);
        schedule = next;
        let d_ex = &d + (&d - &d_prev) * alpha;
        let step = &d_ex - grad(&d_ex) / mu;
        let d_next = prox_neg_log(&step, mu)?;
        let rc = (&d_next - &d).norm() / d.norm();
        d_prev = d;
        d = d_next;
        let val = objective(&d);
        if val < best_val {
            best_val = val;
            best = d.clone();
        }
        if rc <= rc_tol {
            break;
        }
    }
    Ok(best)
}

/// Counters from a C-block solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveCStats {
    pub mm_iterations: usize,
    pub w_recomputes: usize,
    pub pg_iterations: usize,
}

/// Surrogate value and gradient at C, with the majorization weight table W
/// frozen from the previous anchor point:
/// g0(C) = -log|det C| + (tau/2T) ||C Ybar + W||_F^2 + eta ||C^T d - p||^2.
/// Surrogate value only; avoids the inverse needed by the gradient.
pub fn surrogate_value(
    c: &DMatrix<f64>,
    w: &DMatrix<f64>,
    ybar: &DMatrix<f64>,
    d: &DVector<f64>,
    p: &DVector<f64>,
    eta: f64,
    tau: f64,
) -> f64 {
    let ld = log_abs_det(c);
    if ld.is_singular() {
        return f64::INFINITY;
    }
    let t = ybar.ncols() as f64;
    let shifted = c * ybar + w;
    let resid = c.transpose() * d - p;
    -ld.value_or_inf() + tau / (2.0 * t) * shifted.norm_squared() + eta * resid.norm_squared()
}

pub fn surrogate_value_grad(
    c: &DMatrix<f64>,
    w: &DMatrix<f64>,
    ybar: &DMatrix<f64>,
    d: &DVector<f64>,
    p: &DVector<f64>,
    eta: f64,
    tau: f64,
) -> (f64, Option<DMatrix<f64>>) {
    let ld = log_abs_det(c);
    if ld.is_singular() {
        return (f64::INFINITY, None);
    }
    let Some(inv) = c.clone().try_inverse() else {
        return (f64::INFINITY, None);
    };
    let t = ybar.ncols() as f64;
    let shifted = c * ybar + w;
    let resid = c.transpose() * d - p;
    let value = -ld.value_or_inf() + tau / (2.0 * t) * shifted.norm_squared()
        + eta * resid.norm_squared();
    let grad =
        -inv.transpose() + &shifted * ybar.transpose() * (tau / t) + d * resid.transpose() * (2.0 * eta);
    (value, Some(grad))
}

/// Surrogate closures over the cached product C·Ybar, with Ybar^T
/// precomputed for the gradient pullback.
struct SurrogateCached<'a> {
    w: &'a DMatrix<f64>,
    ybt: &'a DMatrix<f64>,
    d: &'a DVector<f64>,
    p: &'a DVector<f64>,
    eta: f64,
    tau: f64,
    t: f64,
}

impl CachedObjective for SurrogateCached<'_> {
    fn value(&self, c: &DMatrix<f64>, cy: &DMatrix<f64>) -> f64 {
        let ld = log_abs_det(c);
        if ld.is_singular() {
            return f64::INFINITY;
        }
        let shifted_sq: f64 = cy
            .iter()
            .zip(self.w.iter())
            .map(|(&a, &b)| (a + b) * (a + b))
            .sum();
        let resid = c.transpose() * self.d - self.p;
        -ld.value_or_inf() + self.tau / (2.0 * self.t) * shifted_sq + self.eta * resid.norm_squared()
    }

    fn value_grad(&self, c: &DMatrix<f64>, cy: &DMatrix<f64>) -> (f64, Option<DMatrix<f64>>) {
        let ld = log_abs_det(c);
        if ld.is_singular() {
            return (f64::INFINITY, None);
        }
        let Some(inv) = c.clone().try_inverse() else {
            return (f64::INFINITY, None);
        };
        let n = cy.nrows();
        let mut shifted = DMatrix::<f64>::zeros(n, cy.ncols());
        let mut acc = vec![0.0; n];
        {
            let src = cy.as_slice();
            let ws = self.w.as_slice();
            let dst = shifted.as_mut_slice();
            for t in 0..cy.ncols() {
                let base = t * n;
                for i in 0..n {
                    let s = src[base + i] + ws[base + i];
                    dst[base + i] = s;
                    acc[i] += s * s;
                }
            }
        }
        let resid = c.transpose() * self.d - self.p;
        let value = -ld.value_or_inf()
            + self.tau / (2.0 * self.t) * acc.iter().sum::<f64>()
            + self.eta * resid.norm_squared();
        let mut grad = -inv.transpose() + self.d * resid.transpose() * (2.0 * self.eta);
        grad.gemm(self.tau / self.t, &shifted, self.ybt, 1.0);
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
        let ws = self.w.as_slice();
        let mut acc = vec![0.0; cand.nrows()];
        let mut idx = 0usize;
        view.scan(candy_out, |i, v| {
            let s = v + ws[idx];
            idx += 1;
            acc[i] += s * s;
        });
        let resid = cand.transpose() * self.d - self.p;
        -ld.value_or_inf()
            + self.tau / (2.0 * self.t) * acc.iter().sum::<f64>()
            + self.eta * resid.norm_squared()
    }
}

/// C-block solve by majorization-minimization: rebuild the probit majorant
/// at the current point (the only place Phi is evaluated), then minimize the
/// quadratic surrogate over unit-norm rows by extrapolated projected
/// gradient.
pub fn solve_c(
    c0: &DMatrix<f64>,
    d: &DVector<f64>,
    ybar: &DMatrix<f64>,
    p: &DVector<f64>,
    eta: f64,
    tau: f64,
    mm_rc_tol: f64,
    pg_rc_tol: f64,
) -> Result<(DMatrix<f64>, SolveCStats)> {
    if log_abs_det(c0).is_singular() {
        return Err(ScaError::Singular("C0 not invertible".into()));
    }
    let n = c0.nrows();
    let tie_break = DVector::from_fn(n, |j, _| if j == 0 { 1.0 } else { 0.0 });
    let ybt = ybar.transpose();
    let t = ybar.ncols() as f64;
    let mut c = c0.clone();
    let mut stats = SolveCStats::default();
    let ctl = EpgControl {
        beta: 0.5,
        nu: 1.0,
        c: 2.0,
        rc_tol: pg_rc_tol,
        max_iter: 1000,
        extrapolate: true,
        anchor_at_prev: false,
    };
    for _ in 0..500 {
        stats.mm_iterations += 1;
        let cy = &c * ybar;
        let w = cy.map(mm_weight);
        stats.w_recomputes += 1;
        let obj = SurrogateCached {
            w: &w,
            ybt: &ybt,
            d,
            p,
            eta,
            tau,
            t,
        };
        let run = epg_minimize_cached(&obj, &CachedProjection::RowsUnitSphere(&tie_break), ybar, &c, &ctl);
        stats.pg_iterations += run.iterations;
        let c_next = run.b;
        let rc = rel_change(&c_next, &c)?;
        c = c_next;
        if rc <= mm_rc_tol {
            break;
        }
    }
    Ok((c, stats))
}

pub fn pr_solve(
    y: &DMatrix<f64>,
    sigma: f64,
    p: &DVector<f64>,
    b0: &DMatrix<f64>,
    cfg: &PrConfig,
) -> Result<(DMatrix<f64>, RunReport)> {
    cfg.validate()?;
    if sigma <= 0.0 {
        return Err(ScaError::InvalidArgument("sigma must be positive".into()));
    }
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
    let ybar = y / sigma;
    let mut d = DVector::from_fn(n, |i, _| b0.row(i).norm());
    if d.iter().any(|&v| v == 0.0) {
        return Err(ScaError::Degenerate("B0 has a zero row".into()));
    }
    let mut c = DMatrix::from_fn(n, n, |i, j| b0[(i, j)] / d[i]);
    if log_abs_det(&c).is_singular() {
        return Err(ScaError::Singular("B0 not invertible".into()));
    }

    let mut report = RunReport::new("pr-sisal", cfg.tau);
    let mut eta = cfg.eta0;
    let mut sweeps_total = 0usize;
    let mut termination = Termination::MaxIterations;
    let mut b = DMatrix::from_fn(n, n, |i, j| d[i] * c[(i, j)]);

    'stages: for _stage in 0..cfg.outer_max {
        report.eta_stages.push(eta);
        report
            .objective_trace
            .push(f_eta(&c, &d, &ybar, p, eta, cfg.tau));
        let mut stage_sweeps = 0usize;
        loop {
            if sweeps_total >= cfg.inner_max {
                report.inner_iterations.push(stage_sweeps);
                termination = Termination::MaxIterations;
                break 'stages;
            }
            sweeps_total += 1;
            stage_sweeps += 1;
            d = solve_d(&c, &d, p, eta, cfg.d_rc_tol)?;
            let (c_next, _stats) = solve_c(
                &c,
                &d,
                &ybar,
                p,
                eta,
                cfg.tau,
                cfg.c_mm_rc_tol,
                cfg.c_pg_rc_tol,
            )?;
            c = c_next;
            report
                .objective_trace
                .push(f_eta(&c, &d, &ybar, p, eta, cfg.tau));
            let b_next = DMatrix::from_fn(n, n, |i, j| d[i] * c[(i, j)]);
            let rc = rel_change(&b_next, &b)?;
            report.rel_change_trace.push(rc);
            b = b_next;
            if rc <= cfg.inner_rc_tol {
                break;
            }
        }
        report.inner_iterations.push(stage_sweeps);
        termination = Termination::Converged;
        eta *= cfg.eta_growth;
    }

    report.iterations = sweeps_total;
    report.termination = termination;
    report.objective_final = pr_objective_direct(&b, &ybar, cfg.tau);
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((b, report))
}

/// Direct (extrapolated) proximal-gradient mode on the constrained
/// formulation, kept for runtime comparisons; the block-coordinate path
/// above is the recommended solver.
pub fn pr_direct_objective_and_grad(
    b: &DMatrix<f64>,
    ybar: &DMatrix<f64>,
    tau: f64,
) -> (f64, Option<DMatrix<f64>>) {
    let ld = log_abs_det(b);
    if ld.is_singular() {
        return (f64::INFINITY, None);
    }
    let Some(inv) = b.clone().try_inverse() else {
        return (f64::INFINITY, None);
    };
    let n = b.nrows();
    let t = ybar.ncols() as f64;
    let mut value = -ld.value_or_inf();
    let mut grad = -inv.transpose();
    for i in 0..n {
        let bi = b.row(i).transpose();
        let norm = bi.norm();
        if norm == 0.0 {
            return (f64::INFINITY, None);
        }
        let mut grow = DVector::<f64>::zeros(n);
        for tt in 0..ybar.ncols() {
            let yt = ybar.column(tt);
            let s = bi.dot(&yt);
            let u = s / norm;
            value -= tau / t * log_norm_cdf(u);
            // d u / d b_i = (y_t - (s / ||b_i||^2) b_i) / ||b_i||
            let ratio = phi_ratio(u);
            grow += (yt - &bi * (s / (norm * norm))) * (ratio / norm);
        }
        grow *= -tau / t;
        for j in 0..n {
            grad[(i, j)] += grow[j];
        }
    }
    (value, Some(grad))
}

/// Direct-mode closures over the cached product B·Ybar. Same objective as
/// `pr_direct_objective_and_grad`, with the per-sample dot products read off
/// the cached product and the gradient assembled as one matrix product plus
/// row scalings.
struct DirectCached<'a> {
    ybt: &'a DMatrix<f64>,
    tau: f64,
    t: f64,
}

impl CachedObjective for DirectCached<'_> {
    fn value(&self, b: &DMatrix<f64>, by: &DMatrix<f64>) -> f64 {
        let ld = log_abs_det(b);
        if ld.is_singular() {
            return f64::INFINITY;
        }
        let n = b.nrows();
        let mut inv_norm = vec![0.0; n];
        for i in 0..n {
            let norm = b.row(i).norm();
            if norm == 0.0 {
                return f64::INFINITY;
            }
            inv_norm[i] = 1.0 / norm;
        }
        let mut log_phi_sum = 0.0;
        for tt in 0..by.ncols() {
            for i in 0..n {
                log_phi_sum += log_norm_cdf(by[(i, tt)] * inv_norm[i]);
            }
        }
        -ld.value_or_inf() - self.tau / self.t * log_phi_sum
    }

    fn value_grad(&self, b: &DMatrix<f64>, by: &DMatrix<f64>) -> (f64, Option<DMatrix<f64>>) {
        let ld = log_abs_det(b);
        if ld.is_singular() {
            return (f64::INFINITY, None);
        }
        let Some(inv) = b.clone().try_inverse() else {
            return (f64::INFINITY, None);
        };
        let n = b.nrows();
        let mut inv_norm = vec![0.0; n];
        for i in 0..n {
            let norm = b.row(i).norm();
            if norm == 0.0 {
                return (f64::INFINITY, None);
            }
            inv_norm[i] = 1.0 / norm;
        }
        // u_it = (b_i^T ybar_t)/||b_i||; d u/d b_i = (ybar_t - u b_i/||b_i||)/||b_i||.
        // Accumulate the ratio matrix pre-scaled by 1/||b_i|| for the product
        // with Ybar^T, and the coefficient of the b_i correction per row.
        let mut scaled_ratio = DMatrix::<f64>::zeros(n, by.ncols());
        let mut coef = vec![0.0; n];
        let mut log_phi_sum = 0.0;
        for tt in 0..by.ncols() {
            for i in 0..n {
                let u = by[(i, tt)] * inv_norm[i];
                log_phi_sum += log_norm_cdf(u);
                let ratio = phi_ratio(u);
                scaled_ratio[(i, tt)] = ratio * inv_norm[i];
                coef[i] += ratio * u;
            }
        }
        let value = -ld.value_or_inf() - self.tau / self.t * log_phi_sum;
        let mut grad = -inv.transpose();
        grad.gemm(-self.tau / self.t, &scaled_ratio, self.ybt, 1.0);
        for i in 0..n {
            let scale = self.tau / self.t * coef[i] * inv_norm[i] * inv_norm[i];
            for j in 0..n {
                grad[(i, j)] += scale * b[(i, j)];
            }
        }
        (value, Some(grad))
    }
}

pub fn pr_direct_solve(
    y: &DMatrix<f64>,
    sigma: f64,
    p: &DVector<f64>,
    b0: &DMatrix<f64>,
    tau: f64,
    extrapolate: bool,
    rc_tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, RunReport)> {
    if sigma <= 0.0 {
        return Err(ScaError::InvalidArgument("sigma must be positive".into()));
    }
    let start = Instant::now();
    let ybar = y / sigma;
    let b_start = project_affine_colsum(b0, p);
    if log_abs_det(&b_start).is_singular() {
        return Err(ScaError::Singular(
            "initial point not invertible after projection".into(),
        ));
    }
    let ctl = EpgControl {
        beta: 0.5,
        nu: 1.0,
        c: 2.0,
        rc_tol,
        max_iter,
        extrapolate,
        anchor_at_prev: false,
    };
    let ybt = ybar.transpose();
    let obj = DirectCached {
        ybt: &ybt,
        tau,
        t: ybar.ncols() as f64,
    };
    let run = epg_minimize_cached(&obj, &CachedProjection::AffineColsum(p), &ybar, &b_start, &ctl);
    let name = if extrapolate {
        "pr-sisal-epg"
    } else {
        "pr-sisal-pg"
    };
    let mut report = RunReport::new(name, tau);
    report.iterations = run.iterations;
    report.termination = run.termination;
    report.objective_final = run.best_value;
    report.objective_trace = run.objective_trace;
    report.rel_change_trace = run.rel_change_trace;
    report.mu_trace = run.mu_trace;
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((run.b, report))
}

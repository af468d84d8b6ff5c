//! Extrapolated proximal-gradient driver shared by the smooth solvers: FISTA
//! extrapolation, projection as the prox step, curvature backtracking with a
//! sufficient-decrease test, and restart when extrapolation leaves the
//! objective's domain.

use crate::kernels::{fista_alpha, project_affine_colsum, project_rows_unit_sphere, FistaSchedule};
use crate::report::Termination;
use nalgebra::{DMatrix, DVector};

pub(crate) const MAX_DOUBLINGS: usize = 60;

/// How often the backtracking start probes one growth factor below the
/// previous accepted curvature instead of starting at it.
const MU_PROBE_PERIOD: usize = 16;

#[derive(Debug, Clone, Copy)]
pub(crate) struct EpgControl {
    pub beta: f64,
    /// Initial curvature guess; backtracking multiplies by `c` until the
    /// decrease test passes.
    pub nu: f64,
    pub c: f64,
    pub rc_tol: f64,
    pub max_iter: usize,
    pub extrapolate: bool,
    /// Evaluate the decrease test against f at the previous accepted iterate
    /// instead of f at the extrapolated point.
    pub anchor_at_prev: bool,
}

#[derive(Debug)]
pub(crate) struct EpgRun {
    /// Best-objective iterate seen (including the start), so callers get a
    /// guaranteed non-increase even under extrapolation overshoot.
    pub b: DMatrix<f64>,
    pub best_value: f64,
    pub last: DMatrix<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub objective_trace: Vec<f64>,
    pub mu_trace: Vec<f64>,
    pub rel_change_trace: Vec<f64>,
    /// (anchor value, model decrease, accepted value) per iteration, for
    /// auditing the acceptance inequality after the fact.
    pub acceptance_trace: Vec<(f64, f64, f64)>,
    pub restarts: usize,
}

/// A candidate's product with Y expressed through cached pieces:
/// entry (i,t) = (by_ex - gy/mu)(i,t) - col_shift[t], then scaled by
/// row_scale[i] if present. Lets objectives evaluate a trial point in one
/// fused pass without materializing the product.
pub(crate) struct CandidateView<'a> {
    pub by_ex: &'a DMatrix<f64>,
    pub gy: &'a DMatrix<f64>,
    pub inv_mu: f64,
    /// Per-column shift from an affine column-sum projection.
    pub col_shift: Option<&'a [f64]>,
    /// Per-row scale from a row-normalizing projection.
    pub row_scale: Option<&'a [f64]>,
}

impl CandidateView<'_> {
    /// Streams the entries column by column into `f(row, entry)` while
    /// writing them to `out`, which must have the product's shape.
    #[inline]
    pub fn scan(&self, out: &mut DMatrix<f64>, mut f: impl FnMut(usize, f64)) {
        let n = self.by_ex.nrows();
        let bye = self.by_ex.as_slice();
        let gy = self.gy.as_slice();
        let dst = out.as_mut_slice();
        let inv_mu = self.inv_mu;
        for t in 0..self.by_ex.ncols() {
            let shift = self.col_shift.map_or(0.0, |cs| cs[t]);
            let base = t * n;
            for i in 0..n {
                let mut v = bye[base + i] - gy[base + i] * inv_mu - shift;
                if let Some(rs) = self.row_scale {
                    v *= rs[i];
                }
                dst[base + i] = v;
                f(i, v);
            }
        }
    }
}

/// Objective whose data-dependent part is a function of the product B·Y, so
/// the driver can maintain that product incrementally instead of forming it
/// from scratch at every trial point.
pub(crate) trait CachedObjective {
    /// f at `b`, with `by` equal to b·Y up to accumulated rounding.
    fn value(&self, b: &DMatrix<f64>, by: &DMatrix<f64>) -> f64;
    /// f and its gradient; the gradient is `None` iff the value is infinite.
    fn value_grad(&self, b: &DMatrix<f64>, by: &DMatrix<f64>) -> (f64, Option<DMatrix<f64>>);
    /// f at a trial point, reading the product through `view` and leaving it
    /// in `candy_out` for reuse if the candidate is accepted.
    fn value_candidate(
        &self,
        cand: &DMatrix<f64>,
        view: &CandidateView,
        candy_out: &mut DMatrix<f64>,
    ) -> f64 {
        view.scan(candy_out, |_, _| {});
        self.value(cand, candy_out)
    }
}

/// Constraint sets whose projections act on B·Y in closed form: a column-sum
/// correction is rank-one in the product, a row normalization is a left
/// diagonal scaling.
pub(crate) enum CachedProjection<'a> {
    /// Columns of B sum to the given vector.
    AffineColsum(&'a DVector<f64>),
    /// Rows of B on the unit sphere; a zero row becomes the tie-break vector.
    RowsUnitSphere(&'a DVector<f64>),
}

/// dst = a + (a - b) * alpha, elementwise into an existing buffer.
fn combine_into(dst: &mut DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, alpha: f64) {
    let d = dst.as_mut_slice();
    let aa = a.as_slice();
    let bb = b.as_slice();
    for i in 0..d.len() {
        d[i] = aa[i] + (aa[i] - bb[i]) * alpha;
    }
}

/// Refresh the cached products from scratch this often, so rounding from the
/// incremental updates cannot accumulate over long runs.
const CACHE_REFRESH_PERIOD: usize = 512;

/// `epg_minimize` specialized to objectives over B·Y: identical iteration,
/// but extrapolation, gradient steps, and projections update the cached
/// product by affine algebra. Each iteration pays one N×N·N×T product (the
/// gradient pullback g·Y); trial points are evaluated through a fused scan
/// and materialized only on acceptance.
pub(crate) fn epg_minimize_cached(
    obj: &dyn CachedObjective,
    proj: &CachedProjection,
    y: &DMatrix<f64>,
    b0: &DMatrix<f64>,
    ctl: &EpgControl,
) -> EpgRun {
    let by0 = b0 * y;
    let f0 = obj.value(b0, &by0);
    let mut run = EpgRun {
        b: b0.clone(),
        best_value: f0,
        last: b0.clone(),
        iterations: 0,
        termination: Termination::MaxIterations,
        objective_trace: vec![f0],
        mu_trace: Vec::new(),
        rel_change_trace: Vec::new(),
        acceptance_trace: Vec::new(),
        restarts: 0,
    };
    if !f0.is_finite() {
        run.termination = Termination::StepSizeStall;
        return run;
    }

    let n = b0.nrows();
    let nf = n as f64;
    let t_cols = y.ncols();
    let mut b_prev = b0.clone();
    let mut by_prev = by0.clone();
    let mut b = b0.clone();
    let mut by = by0;
    let mut f_b = f0;
    let mut schedule = FistaSchedule::new();
    let mut mu_prev = ctl.nu;
    let mut accepts_since_refresh = 0usize;
    let mut candy_buf = DMatrix::<f64>::zeros(n, t_cols);
    let mut by_ex = DMatrix::<f64>::zeros(n, t_cols);
    let mut col_shift = vec![0.0; t_cols];
    let mut row_scale = vec![0.0; n];
    let mut shift_base = vec![0.0; t_cols];
    let mut shift_slope = vec![0.0; t_cols];
    // p^T Y, fixed across iterations; part of the column-shift pullback
    let py: Option<Vec<f64>> = match proj {
        CachedProjection::AffineColsum(p) => {
            Some((p.transpose() * y).iter().copied().collect())
        }
        CachedProjection::RowsUnitSphere(_) => None,
    };

    for k in 0..ctl.max_iter {
        let alpha = if ctl.extrapolate {
            let (a, next) = fista_alpha(schedule);
            schedule = next;
            a
        } else {
            0.0
        };
        let mut b_ex = &b + (&b - &b_prev) * alpha;
        combine_into(&mut by_ex, &by, &by_prev, alpha);
        let (mut f_ex, mut g_ex) = obj.value_grad(&b_ex, &by_ex);
        if !f_ex.is_finite() || g_ex.is_none() {
            // extrapolation left the domain: restart from the current point
            run.restarts += 1;
            schedule = FistaSchedule::new();
            b_ex = b.clone();
            by_ex.copy_from(&by);
            let (fv, gv) = obj.value_grad(&b_ex, &by_ex);
            f_ex = fv;
            g_ex = gv;
        }
        let Some(g_ex) = g_ex else {
            run.termination = Termination::StepSizeStall;
            break;
        };
        let anchor = if ctl.anchor_at_prev { f_b } else { f_ex };
        let gy = &g_ex * y;
        // Probe for a curvature decrease only periodically; most iterations
        // the probe fails and would cost a full extra candidate evaluation.
        let mu_start = if k % MU_PROBE_PERIOD == 0 {
            ctl.nu.max(mu_prev / ctl.c)
        } else {
            ctl.nu.max(mu_prev)
        };

        // The column-sum correction of a trial point is linear in 1/mu, and
        // its pullback through Y is read off the cached products:
        // corr^T Y = (colsum(by_ex) - p^T Y)/n - colsum(gy)/(n mu).
        if let Some(py) = &py {
            let bye = by_ex.as_slice();
            let gys = gy.as_slice();
            for t in 0..t_cols {
                let base = t * n;
                let mut sb = 0.0;
                let mut ss = 0.0;
                for i in 0..n {
                    sb += bye[base + i];
                    ss += gys[base + i];
                }
                shift_base[t] = (sb - py[t]) / nf;
                shift_slope[t] = -ss / nf;
            }
        }

        let mut mu = mu_start;
        let mut accepted = None;
        for _ in 0..=MAX_DOUBLINGS {
            let inv_mu = 1.0 / mu;
            let raw = &b_ex - &g_ex / mu;
            let (cand, f_cand) = match proj {
                CachedProjection::AffineColsum(p) => {
                    let cand = project_affine_colsum(&raw, p);
                    for t in 0..t_cols {
                        col_shift[t] = shift_base[t] + shift_slope[t] * inv_mu;
                    }
                    let view = CandidateView {
                        by_ex: &by_ex,
                        gy: &gy,
                        inv_mu,
                        col_shift: Some(&col_shift),
                        row_scale: None,
                    };
                    let f = obj.value_candidate(&cand, &view, &mut candy_buf);
                    (cand, f)
                }
                CachedProjection::RowsUnitSphere(tie_break) => {
                    let cand = project_rows_unit_sphere(&raw, tie_break);
                    let mut degenerate = false;
                    for i in 0..n {
                        let norm = raw.row(i).norm();
                        if norm > 0.0 {
                            row_scale[i] = 1.0 / norm;
                        } else {
                            degenerate = true;
                        }
                    }
                    let f = if degenerate {
                        candy_buf.gemm(1.0, &cand, y, 0.0);
                        obj.value(&cand, &candy_buf)
                    } else {
                        let view = CandidateView {
                            by_ex: &by_ex,
                            gy: &gy,
                            inv_mu,
                            col_shift: None,
                            row_scale: Some(&row_scale),
                        };
                        obj.value_candidate(&cand, &view, &mut candy_buf)
                    };
                    (cand, f)
                }
            };
            let step = &cand - &b_ex;
            let h = g_ex.dot(&step) + 0.5 * mu * step.norm_squared();
            if f_cand.is_finite() && f_cand <= anchor + ctl.beta * h {
                accepted = Some((cand, f_cand, h));
                break;
            }
            mu *= ctl.c;
        }
        let Some((cand, f_cand, h)) = accepted else {
            run.termination = Termination::StepSizeStall;
            break;
        };
        mu_prev = mu;
        run.mu_trace.push(mu);
        run.acceptance_trace.push((anchor, h, f_cand));
        let rc = (&cand - &b).norm() / b.norm();
        run.rel_change_trace.push(rc);
        b_prev = b;
        b = cand;
        std::mem::swap(&mut by_prev, &mut by);
        std::mem::swap(&mut by, &mut candy_buf);
        f_b = f_cand;
        accepts_since_refresh += 1;
        if accepts_since_refresh >= CACHE_REFRESH_PERIOD {
            by = &b * y;
            by_prev = &b_prev * y;
            accepts_since_refresh = 0;
        }
        run.objective_trace.push(f_cand);
        run.iterations = k + 1;
        if f_cand < run.best_value {
            run.best_value = f_cand;
            run.b = b.clone();
        }
        if rc <= ctl.rc_tol {
            run.termination = Termination::Converged;
            break;
        }
    }
    run.last = b;
    run
}

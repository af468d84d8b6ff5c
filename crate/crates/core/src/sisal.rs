//! Minimum-volume simplex fitting with a hinge penalty on negativity,
//! minimized by successive convex approximation: each outer step builds a
//! proximal quadratic model of the log-det term, solves the resulting
//! quadratic-plus-hinge subproblem by ADMM, and line-searches along the
//! feasible direction.

use crate::error::{Result, ScaError};
use crate::kernels::{hinge, log_abs_det, project_affine_colsum, prox_hinge};
use crate::linalg::SpdSolver;
use crate::metrics::rel_change;
use crate::report::{RunReport, Termination};
use nalgebra::{DMatrix, DVector};
use std::time::Instant;

pub const MAX_HALVINGS: usize = 60;
const RC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearch {
    /// Accept the first step that strictly decreases the objective.
    Legacy,
    /// Accept the first step satisfying the sufficient-decrease inequality
    /// f(B + theta D) <= f(B) + beta * theta * h(B_bar, B), h <= 0.
    Armijo,
}

#[derive(Debug, Clone, Copy)]
pub struct AdmmConfig {
    pub rho: f64,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho: 1.0,
            max_iter: 200,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SisalConfig {
    pub lambda: f64,
    /// Proximal curvature of the quadratic model around the current iterate.
    pub mu: f64,
    pub max_outer: usize,
    pub line_search: LineSearch,
    pub beta: f64,
    pub delta: f64,
    pub admm: AdmmConfig,
}

impl SisalConfig {
    pub fn new(lambda: f64) -> Self {
        SisalConfig {
            lambda,
            mu: 1.0,
            max_outer: 250,
            line_search: LineSearch::Armijo,
            beta: 1e-4,
            delta: 0.5,
            admm: AdmmConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.lambda > 0.0
            && self.mu > 0.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.delta > 0.0
            && self.delta < 1.0
            && self.admm.rho > 0.0;
        if !ok {
            return Err(ScaError::InvalidArgument(
                "sisal config parameters out of range".into(),
            ));
        }
        Ok(())
    }
}

/// Final iterate plus the per-iteration traces used by the descent audits.
#[derive(Debug, Clone)]
pub struct SisalState {
    pub b: DMatrix<f64>,
    pub p: DVector<f64>,
    pub objective_trace: Vec<f64>,
    pub theta_trace: Vec<f64>,
}

/// -log|det B| + lambda * sum_{i,t} hinge(b_i^T y_t); +infinity if B singular.
pub fn sisal_objective(b: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> f64 {
    let ld = log_abs_det(b);
    if ld.is_singular() {
        return f64::INFINITY;
    }
    let by = b * y;
    let penalty: f64 = by.iter().map(|&v| hinge(v)).sum();
    -ld.value_or_inf() + lambda * penalty
}

fn hinge_sum(by: &DMatrix<f64>) -> f64 {
    by.iter().map(|&v| hinge(v)).sum()
}

/// Gradient of the smooth part -log|det B|, i.e. -B^{-T}; None if singular.
fn neg_logdet_grad(b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    b.clone().try_inverse().map(|inv| -inv.transpose())
}

/// Solves min_B <grad, B - B_k> + (mu/2)||B - B_k||^2 + lambda sum hinge(BY)
/// s.t. B^T 1 = p, by ADMM on the split Z = BY with scaled dual U.
/// Returns the last B-update (feasible by construction) and the iteration
/// count. `h_solver` must factor mu*I + rho*Y*Y^T.
fn admm_subproblem_with(
    b_k: &DMatrix<f64>,
    grad: &DMatrix<f64>,
    y: &DMatrix<f64>,
    p: &DVector<f64>,
    lambda: f64,
    mu: f64,
    cfg: &AdmmConfig,
    h_solver: &SpdSolver,
    h: &DMatrix<f64>,
    z: &mut DMatrix<f64>,
    u: &mut DMatrix<f64>,
) -> Result<(DMatrix<f64>, usize)> {
    let n = b_k.nrows();
    let rho = cfg.rho;
    let q = b_k - grad / mu;
    let ones = DVector::<f64>::repeat(n, 1.0);

    let mut b = b_k.clone();
    let mut iters = 0;
    for it in 0..cfg.max_iter {
        iters = it + 1;
        // B-update: B(mu I + rho Y Y^T) = mu Q + rho (Z - U) Y^T - 1 nu^T,
        // with nu chosen so the column sums equal p exactly.
        let w = &q * mu + (&*z - &*u) * y.transpose() * rho;
        let col_sums = DVector::<f64>::from_fn(n, |j, _| w.column(j).sum());
        let nu = (col_sums - h.transpose() * p) / n as f64;
        let rhs = w - &ones * nu.transpose();
        // solve B H = rhs, i.e. H B^T = rhs^T (H symmetric)
        b = h_solver.solve(&rhs.transpose()).transpose();

        let by = &b * y;
        let z_prev = z.clone();
        let v = &by + &*u;
        *z = if lambda == 0.0 {
            v
        } else {
            v.map(|x| prox_hinge(x, lambda / rho).expect("positive prox weight"))
        };
        *u += &by - &*z;

        let primal = (&by - &*z).norm();
        let dual = rho * ((&*z - &z_prev) * y.transpose()).norm();
        let primal_scale = by.norm().max(z.norm()).max(1.0);
        let dual_scale = (rho * (&*u * y.transpose()).norm()).max(1.0);
        if primal <= cfg.tol_primal * primal_scale && dual <= cfg.tol_dual * dual_scale {
            break;
        }
    }
    Ok((b, iters))
}

/// One-shot subproblem solve; factors the SPD system itself. The outer solver
/// uses the cached-factorization path instead.
pub fn admm_subproblem(
    b_k: &DMatrix<f64>,
    y: &DMatrix<f64>,
    p: &DVector<f64>,
    lambda: f64,
    mu: f64,
    cfg: &AdmmConfig,
) -> Result<DMatrix<f64>> {
    let grad = neg_logdet_grad(b_k).ok_or(ScaError::Singular("iterate not invertible".into()))?;
    let n = b_k.nrows();
    let h = DMatrix::<f64>::identity(n, n) * mu + y * y.transpose() * cfg.rho;
    let solver = SpdSolver::new(&h)?;
    let mut z = b_k * y;
    let mut u = DMatrix::<f64>::zeros(n, y.ncols());
    let (b, _) = admm_subproblem_with(b_k, &grad, y, p, lambda, mu, cfg, &solver, &h, &mut z, &mut u)?;
    Ok(b)
}

/// Model decrease h(B_bar, B) = <grad f0(B), B_bar - B> + (mu/2)||B_bar - B||^2
/// + f1(B_bar) - f1(B); nonpositive when B_bar solves the subproblem.
fn model_decrease(
    grad: &DMatrix<f64>,
    b: &DMatrix<f64>,
    b_bar: &DMatrix<f64>,
    by: &DMatrix<f64>,
    bbar_y: &DMatrix<f64>,
    lambda: f64,
    mu: f64,
) -> f64 {
    let d = b_bar - b;
    grad.dot(&d) + 0.5 * mu * d.norm_squared() + lambda * (hinge_sum(bbar_y) - hinge_sum(by))
}

pub fn sisal_solve(
    y: &DMatrix<f64>,
    p: &DVector<f64>,
    b0: &DMatrix<f64>,
    cfg: &SisalConfig,
) -> Result<(SisalState, RunReport)> {
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
    let mut b = project_affine_colsum(b0, p);
    if log_abs_det(&b).is_singular() {
        return Err(ScaError::Singular("initial point not invertible after projection".into()));
    }

    let h = DMatrix::<f64>::identity(n, n) * cfg.mu + y * y.transpose() * cfg.admm.rho;
    let h_solver = SpdSolver::new(&h)?;

    let mut report = RunReport::new("sisal", cfg.lambda);
    let mut state = SisalState {
        b: b.clone(),
        p: p.clone(),
        objective_trace: vec![sisal_objective(&b, y, cfg.lambda)],
        theta_trace: Vec::new(),
    };

    let mut termination = Termination::MaxIterations;
    // ADMM split variables persist across outer iterations (warm start)
    let mut z = &b * y;
    let mut u = DMatrix::<f64>::zeros(n, y.ncols());
    for k in 0..cfg.max_outer {
        let grad = neg_logdet_grad(&b).ok_or(ScaError::Singular("iterate not invertible".into()))?;
        let (b_bar, admm_iters) = admm_subproblem_with(
            &b, &grad, y, p, cfg.lambda, cfg.mu, &cfg.admm, &h_solver, &h, &mut z, &mut u,
        )?;
        report.inner_iterations.push(admm_iters);

        if rel_change(&b_bar, &b)? <= RC_TOL {
            termination = if k == 0 {
                Termination::StationaryInit
            } else {
                Termination::Converged
            };
            report.rel_change_trace.push(rel_change(&b_bar, &b)?);
            break;
        }

        let f_b = *state.objective_trace.last().unwrap();
        let by = &b * y;
        let bbar_y = &b_bar * y;
        // clamp at zero: an inexact inner solve can report a slightly
        // positive model decrease, which must never license an objective
        // increase
        let model_h =
            model_decrease(&grad, &b, &b_bar, &by, &bbar_y, cfg.lambda, cfg.mu).min(0.0);
        let d = &b_bar - &b;

        let mut theta = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = &b + &d * theta;
            let f_cand = sisal_objective(&cand, y, cfg.lambda);
            let ok = match cfg.line_search {
                LineSearch::Legacy => f_cand.is_finite() && f_cand < f_b,
                LineSearch::Armijo => {
                    f_cand.is_finite() && f_cand <= f_b + cfg.beta * theta * model_h
                }
            };
            if ok {
                accepted = Some((cand, f_cand, theta));
                break;
            }
            theta *= cfg.delta;
        }

        let Some((b_next, f_next, theta)) = accepted else {
            termination = Termination::StepSizeStall;
            break;
        };
        let rc = rel_change(&b_next, &b)?;
        report.rel_change_trace.push(rc);
        state.theta_trace.push(theta);
        state.objective_trace.push(f_next);
        b = b_next;
        report.iterations = k + 1;
        if rc <= RC_TOL {
            termination = Termination::Converged;
            break;
        }
    }

    state.b = b;
    report.termination = termination;
    report.objective_trace = state.objective_trace.clone();
    report.objective_final = *state.objective_trace.last().unwrap();
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((state, report))
}

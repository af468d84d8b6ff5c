//! Scalar and small-matrix primitives shared by all solvers: Gaussian CDF
//! machinery, proximal operators, feasible-set projections, log-determinant
//! and the FISTA extrapolation sequence.

use crate::error::{Result, ScaError};
use nalgebra::{DMatrix, DVector};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74; // ln(sqrt(2*pi))

/// Standard Gaussian CDF evaluated together with its logarithm.
#[derive(Debug, Clone, Copy)]
pub struct ProbitValue {
    pub x: f64,
    pub phi: f64,
    pub log_phi: f64,
}

impl ProbitValue {
    pub fn new(x: f64) -> Self {
        ProbitValue {
            x,
            phi: norm_cdf(x),
            log_phi: log_norm_cdf(x),
        }
    }
}

/// Standard Gaussian CDF, Phi(x).
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

/// log of the standard Gaussian density at `x`.
pub fn norm_logpdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// log Phi(x), stable over the whole double range.
///
/// For x >= 0 the complementary tail is used through log1p so that values
/// near log(1) keep full relative precision. For moderately negative x the
/// complementary error function is still representable and is logged
/// directly. Below -20 the tail underflows eventually, so the asymptotic
/// expansion log Phi(x) = -x^2/2 - log(-x sqrt(2 pi)) + log(S(x)) with
/// S(x) = 1 - 1/x^2 + 3/x^4 - ... takes over.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        let tail = 0.5 * statrs::function::erf::erfc(x / SQRT_2);
        (-tail).ln_1p()
    } else if x > -20.0 {
        norm_cdf(x).ln()
    } else {
        // asymptotic series; terms decay rapidly for |x| >= 20
        let inv_x2 = 1.0 / (x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            term *= -(2.0 * k as f64 - 1.0) * inv_x2;
            let new = sum + term;
            if new == sum {
                break;
            }
            sum = new;
        }
        -0.5 * x * x - (-x).ln() - LN_SQRT_2PI + sum.ln()
    }
}

/// hinge(x) = max(-x, 0).
pub fn hinge(x: f64) -> f64 {
    (-x).max(0.0)
}

/// hinge(x)^2; continuously differentiable with derivative -2*hinge(x).
pub fn hinge_sq(x: f64) -> f64 {
    let h = hinge(x);
    h * h
}

/// argmin_z 0.5 (z - x)^2 + c * hinge(z) for c > 0.
pub fn prox_hinge(x: f64, c: f64) -> Result<f64> {
    if c <= 0.0 {
        return Err(ScaError::InvalidArgument(format!(
            "prox_hinge requires c > 0, got {c}"
        )));
    }
    if x >= 0.0 {
        Ok(x)
    } else if x >= -c {
        Ok(0.0)
    } else {
        Ok(x + c)
    }
}

/// Elementwise argmin_z (mu/2)(z - d_i)^2 - log z, i.e. (d_i + sqrt(d_i^2 + 4/mu))/2.
pub fn prox_neg_log(d: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
    if mu <= 0.0 {
        return Err(ScaError::InvalidArgument(format!(
            "prox_neg_log requires mu > 0, got {mu}"
        )));
    }
    Ok(d.map(|di| 0.5 * (di + (di * di + 4.0 / mu).sqrt())))
}

/// The majorization weight w(x~) = -x~ - phi(x~)/Phi(x~), computed through
/// log Phi so the ratio stays finite at deeply negative arguments.
pub fn mm_weight(x_tilde: f64) -> f64 {
    let ratio = (norm_logpdf(x_tilde) - log_norm_cdf(x_tilde)).exp();
    -x_tilde - ratio
}

/// Outcome of a pivoted log-determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDet {
    /// sign in {-1, +1}, value = log |det B|.
    Finite { sign: f64, value: f64 },
    /// A pivot underflowed; callers treat the objective as +infinity.
    Singular,
}

impl LogDet {
    pub fn value_or_inf(self) -> f64 {
        match self {
            LogDet::Finite { value, .. } => value,
            LogDet::Singular => f64::INFINITY,
        }
    }

    pub fn is_singular(self) -> bool {
        matches!(self, LogDet::Singular)
    }
}

/// log |det B| with sign via a partially pivoted LU factorization.
pub fn log_abs_det(b: &DMatrix<f64>) -> LogDet {
    assert_eq!(b.nrows(), b.ncols(), "log_abs_det requires a square matrix");
    let n = b.nrows();
    let lu = b.clone().lu();
    let mut sign = lu.p().determinant::<f64>();
    let mut value = 0.0;
    let u = lu.u();
    for i in 0..n {
        let pivot = u[(i, i)];
        if !pivot.is_normal() {
            return LogDet::Singular;
        }
        if pivot < 0.0 {
            sign = -sign;
        }
        value += pivot.abs().ln();
    }
    LogDet::Finite { sign, value }
}

/// Projection of B onto {X : X^T 1 = p}: B - (1/N) 1 (1^T B - p^T).
pub fn project_affine_colsum(b: &DMatrix<f64>, p: &DVector<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let mut out = b.clone();
    for j in 0..b.ncols() {
        let correction = (b.column(j).sum() - p[j]) / n as f64;
        for i in 0..n {
            out[(i, j)] -= correction;
        }
    }
    out
}

/// Row-wise projection onto the unit sphere; a zero row becomes `tie_break`.
pub fn project_rows_unit_sphere(c: &DMatrix<f64>, tie_break: &DVector<f64>) -> DMatrix<f64> {
    let mut out = c.clone();
    for i in 0..c.nrows() {
        let norm = c.row(i).norm();
        if norm > 0.0 {
            for j in 0..c.ncols() {
                out[(i, j)] /= norm;
            }
        } else {
            for j in 0..c.ncols() {
                out[(i, j)] = tie_break[j];
            }
        }
    }
    out
}

/// FISTA extrapolation state: t_0 = 1, t_k = (1 + sqrt(1 + 4 t_{k-1}^2))/2,
/// alpha_k = (t_{k-1} - 1)/t_k.
#[derive(Debug, Clone, Copy)]
pub struct FistaSchedule {
    pub t_prev: f64,
    pub t_cur: f64,
    pub k: usize,
}

impl FistaSchedule {
    pub fn new() -> Self {
        FistaSchedule {
            t_prev: 1.0,
            t_cur: 0.5 * (1.0 + 5.0_f64.sqrt()),
            k: 1,
        }
    }
}

impl Default for FistaSchedule {
    fn default() -> Self {
        Self::new()
    }
}

/// Returns alpha_k for the current index and the advanced schedule.
pub fn fista_alpha(schedule: FistaSchedule) -> (f64, FistaSchedule) {
    let alpha = (schedule.t_prev - 1.0) / schedule.t_cur;
    let t_next = 0.5 * (1.0 + (1.0 + 4.0 * schedule.t_cur * schedule.t_cur).sqrt());
    (
        alpha,
        FistaSchedule {
            t_prev: schedule.t_cur,
            t_cur: t_next,
            k: schedule.k + 1,
        },
    )
}

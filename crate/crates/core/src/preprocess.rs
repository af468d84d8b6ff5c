//! Pipeline around the solvers: uncentered PCA dimensionality reduction,
//! noise-variance estimation from the correlation spectrum, anchor-vector
//! estimation, and back-projection of reduced estimates.

use crate::error::{Result, ScaError};
use crate::linalg::{pinv_apply_ones, sym_eig_top};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Orthonormal basis of the N-principal subspace of R_yy = (1/T) Y Y^T.
///
/// The correlation matrix is uncentered; `mean_used` records that choice in
/// run reports.
#[derive(Debug, Clone)]
pub struct DrModel {
    pub u: DMatrix<f64>,
    pub mean_used: bool,
    pub original_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorMethod {
    Pinv,
    SecondOrder,
}

/// Estimated anchor vector p with the method that produced it.
#[derive(Debug, Clone)]
pub struct AnchorEstimate {
    pub p: DVector<f64>,
    pub method: AnchorMethod,
    pub sigma2_used: f64,
}

fn correlation_matrix(y: &DMatrix<f64>) -> DMatrix<f64> {
    (y * y.transpose()) / y.ncols() as f64
}

/// Top-N eigenvectors of the uncentered correlation matrix.
pub fn fit_pca(y: &DMatrix<f64>, n: usize) -> Result<DrModel> {
    if y.ncols() < n {
        return Err(ScaError::InvalidArgument(format!(
            "need T >= N for PCA, got T={}, N={n}",
            y.ncols()
        )));
    }
    let r = correlation_matrix(y);
    let eig = sym_eig_top(&r, n)?;
    Ok(DrModel {
        u: eig.vectors,
        mean_used: false,
        original_dim: y.nrows(),
    })
}

impl DrModel {
    /// U^T y_t for all samples.
    pub fn reduce(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.u.transpose() * y
    }

    /// A0 = U A_reduced.
    pub fn lift(&self, a_reduced: &DMatrix<f64>) -> DMatrix<f64> {
        &self.u * a_reduced
    }
}

/// Noise power estimate: the (n+1)-th largest eigenvalue of R_yy, clamped
/// at zero. Requires M >= n+1; at M = n the noise floor is unobservable.
pub fn estimate_sigma2(y: &DMatrix<f64>, n: usize) -> Result<f64> {
    let m = y.nrows();
    if m <= n {
        return Err(ScaError::NoiseFloorUnavailable);
    }
    let r = correlation_matrix(y);
    let eig = sym_eig_top(&r, n + 1)?;
    Ok(eig.values[n].max(0.0))
}

const EIG_FLOOR_REL: f64 = 1e-10;

/// Estimate the anchor vector p = A0^{-T} 1 from reduced data.
///
/// `pinv` uses (Y^T)^dagger 1 (exact on noiseless data); `second-order`
/// uses (R_yy - sigma2 I)^{-1} mu_y. Eigenvalues of the shifted correlation
/// below 1e-10 of the largest are floored at that threshold before the
/// inversion, guarding against sigma2 overshoot.
pub fn estimate_anchor(
    y: &DMatrix<f64>,
    sigma2: f64,
    method: AnchorMethod,
) -> Result<AnchorEstimate> {
    let n = y.nrows();
    let t = y.ncols();
    match method {
        AnchorMethod::Pinv => {
            let p = pinv_apply_ones(y)?;
            Ok(AnchorEstimate {
                p,
                method,
                sigma2_used: 0.0,
            })
        }
        AnchorMethod::SecondOrder => {
            let r = correlation_matrix(y) - DMatrix::identity(n, n) * sigma2;
            let mu = y * DVector::from_element(t, 1.0 / t as f64);
            let eig = sym_eig_top(&r, n)?;
            let lam_max = eig.values[0];
            if lam_max <= 0.0 {
                return Err(ScaError::Conditioning(
                    "R_yy - sigma2 I has no positive eigenvalue; sigma2 likely overshoots".into(),
                ));
            }
            let floor = EIG_FLOOR_REL * lam_max;
            let proj = eig.vectors.transpose() * mu;
            let scaled = DVector::from_fn(n, |i, _| proj[i] / eig.values[i].max(floor));
            Ok(AnchorEstimate {
                p: &eig.vectors * scaled,
                method,
                sigma2_used: sigma2,
            })
        }
    }
}

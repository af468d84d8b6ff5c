//! Shared solve pipeline: normalize (optional), reduce dimension, estimate
//! the noise floor and anchor vector, initialize from expanded data vertices,
//! run the requested solver, and lift the estimate back to the ambient space.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use sca_core::h2::{h2_solve, H2Config};
use sca_core::init::expanded_vertex_init;
use sca_core::linalg::pinv_apply_ones;
use sca_core::preprocess::{estimate_sigma2, fit_pca};
use sca_core::prsisal::{pr_direct_solve, pr_solve, PrConfig};
use sca_core::report::RunReport;
use sca_core::sisal::{sisal_solve, SisalConfig};
use sca_core::synth::nmf_normalize;

#[derive(Debug, Clone)]
pub struct AlgoSpec {
    pub name: String,
    pub lambda: f64,
    pub tau: f64,
}

impl AlgoSpec {
    pub fn lambda_or_tau(&self) -> f64 {
        match self.name.as_str() {
            "sisal" | "h2-sisal" => self.lambda,
            _ => self.tau,
        }
    }
}

pub const KNOWN_ALGORITHMS: &[&str] =
    &["sisal", "h2-sisal", "pr-sisal", "pr-sisal-pg", "pr-sisal-epg"];

#[derive(Debug)]
pub enum PipelineError {
    /// Caller passed something unusable (unknown algorithm, missing sigma2).
    Usage(String),
    /// The run itself failed.
    Runtime(String),
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineError::Usage(m) => write!(f, "usage error: {m}"),
            PipelineError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

pub struct RunOutcome {
    pub a_hat: DMatrix<f64>,
    pub report: RunReport,
}

fn needs_sigma(name: &str) -> bool {
    matches!(name, "pr-sisal" | "pr-sisal-pg" | "pr-sisal-epg")
}

pub fn run_on_data(
    y: &DMatrix<f64>,
    n: usize,
    algo: &AlgoSpec,
    sigma2_override: Option<f64>,
    normalize: bool,
    rng: &mut ChaCha8Rng,
) -> Result<RunOutcome, PipelineError> {
    if !KNOWN_ALGORITHMS.contains(&algo.name.as_str()) {
        return Err(PipelineError::Usage(format!(
            "unknown algorithm '{}' (expected one of {})",
            algo.name,
            KNOWN_ALGORITHMS.join(", ")
        )));
    }
    let m = y.nrows();
    if n == 0 || n > m {
        return Err(PipelineError::Usage(format!(
            "component count {n} out of range for {m}-dimensional data"
        )));
    }
    let y_work = if normalize {
        nmf_normalize(y).map_err(|e| PipelineError::Runtime(e.to_string()))?
    } else {
        y.clone()
    };
    let model = fit_pca(&y_work, n).map_err(|e| PipelineError::Runtime(e.to_string()))?;
    let yr = model.reduce(&y_work);

    let sigma2 = match sigma2_override {
        Some(v) => Some(v),
        None if m > n => {
            Some(estimate_sigma2(&y_work, n).map_err(|e| PipelineError::Runtime(e.to_string()))?)
        }
        None => None,
    };
    if needs_sigma(&algo.name) {
        match sigma2 {
            None => {
                return Err(PipelineError::Usage(
                    "M = N leaves no noise-floor eigenvalue; pass --sigma2 explicitly".into(),
                ))
            }
            Some(v) if v <= 0.0 => {
                return Err(PipelineError::Usage(format!(
                    "estimated noise variance {v:.3e} is not positive; pass --sigma2 explicitly"
                )))
            }
            _ => {}
        }
    }

    let p = pinv_apply_ones(&yr).map_err(|e| PipelineError::Runtime(e.to_string()))?;
    let init =
        expanded_vertex_init(&yr, n, 1.2, rng).map_err(|e| PipelineError::Runtime(e.to_string()))?;
    let b0 = init.b_init;

    let (b, report) = match algo.name.as_str() {
        "sisal" => {
            let cfg = SisalConfig::new(algo.lambda);
            let (state, report) =
                sisal_solve(&yr, &p, &b0, &cfg).map_err(|e| PipelineError::Runtime(e.to_string()))?;
            (state.b, report)
        }
        "h2-sisal" => {
            let cfg = H2Config::new(algo.lambda);
            h2_solve(&yr, &p, &b0, &cfg).map_err(|e| PipelineError::Runtime(e.to_string()))?
        }
        "pr-sisal" => {
            let cfg = PrConfig {
                tau: algo.tau,
                ..PrConfig::default()
            };
            let sigma = sigma2.unwrap().sqrt();
            pr_solve(&yr, sigma, &p, &b0, &cfg)
                .map_err(|e| PipelineError::Runtime(e.to_string()))?
        }
        "pr-sisal-pg" | "pr-sisal-epg" => {
            let sigma = sigma2.unwrap().sqrt();
            let extrapolate = algo.name == "pr-sisal-epg";
            pr_direct_solve(&yr, sigma, &p, &b0, algo.tau, extrapolate, 1e-6, 200_000)
                .map_err(|e| PipelineError::Runtime(e.to_string()))?
        }
        _ => unreachable!(),
    };

    let a_reduced = b
        .try_inverse()
        .ok_or_else(|| PipelineError::Runtime("solver returned a singular estimate".into()))?;
    let a_hat = model.lift(&a_reduced);
    Ok(RunOutcome { a_hat, report })
}

//! Serializable run summaries shared by the solvers and the CLI.

use serde::{Deserialize, Serialize};

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Relative change fell below tolerance.
    Converged,
    /// Iteration budget exhausted.
    MaxIterations,
    /// Line search (or backtracking) could not find acceptable decrease.
    StepSizeStall,
    /// The initial point was already stationary for the surrogate.
    StationaryInit,
}

/// One solver run, with enough trace data to audit its behavior offline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    /// Subproblem regularization / penalty weight as configured.
    pub lambda_or_tau: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub objective_final: f64,
    /// Objective after each accepted outer iterate (index 0 = initial point).
    pub objective_trace: Vec<f64>,
    /// Relative-change statistic per outer iteration.
    pub rel_change_trace: Vec<f64>,
    /// Inner-loop effort per outer iteration (ADMM iterations, prox-gradient
    /// steps, or coordinate sweeps, depending on the algorithm).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inner_iterations: Vec<usize>,
    /// Accepted smoothness constant per iteration, when backtracking is used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mu_trace: Vec<f64>,
    /// Penalty weight per continuation stage, when continuation is used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta_stages: Vec<f64>,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn new(algorithm: &str, lambda_or_tau: f64) -> Self {
        RunReport {
            algorithm: algorithm.to_string(),
            lambda_or_tau,
            iterations: 0,
            termination: Termination::MaxIterations,
            objective_final: f64::NAN,
            objective_trace: Vec::new(),
            rel_change_trace: Vec::new(),
            inner_iterations: Vec::new(),
            mu_trace: Vec::new(),
            eta_stages: Vec::new(),
            wall_ms: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips_through_json() {
        let mut r = RunReport::new("sisal", 0.5);
        r.iterations = 3;
        r.termination = Termination::Converged;
        r.objective_final = -1.25;
        r.objective_trace = vec![0.0, -1.0, -1.2, -1.25];
        r.rel_change_trace = vec![0.5, 0.1, 1e-10];
        r.inner_iterations = vec![40, 12, 3];
        r.wall_ms = 12.5;
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"termination\":\"converged\""));
        // empty optional traces are omitted entirely
        assert!(!text.contains("mu_trace"));
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.objective_trace, r.objective_trace);
        assert_eq!(back.termination, Termination::Converged);
        assert!(back.mu_trace.is_empty());
    }
}

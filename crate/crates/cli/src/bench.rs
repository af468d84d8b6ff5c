//! Benchmark sweeps: a JSON grid of problem sizes, noise levels, trial
//! counts and algorithm configs, fanned out over a bounded worker pool and
//! collapsed into deterministic CSV artifacts (plus optional SVG charts).

use crate::pipeline::{run_on_data, AlgoSpec, PipelineError};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub name: String,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_lambda() -> f64 {
    10.0
}
fn default_tau() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchGrid {
    /// (M, N) pairs.
    pub dims: Vec<(usize, usize)>,
    pub t_list: Vec<usize>,
    /// `null` entries mean noiseless.
    pub snr_db_list: Vec<Option<f64>>,
    pub trials: usize,
    pub algorithms: Vec<AlgoConfig>,
    pub seed_base: u64,
}

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub snr_db: Option<f64>,
    pub trial: usize,
    pub algorithm: String,
    pub lambda_or_tau: f64,
    pub mse: f64,
    pub sad_mean_deg: f64,
    pub wall_ms: f64,
    pub termination: String,
    pub objective_final: f64,
}

/// %.17g-style float formatting: up to 17 significant digits, shortest form
/// kept when it already round-trips.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let short = format!("{v}");
    if short.parse::<f64>() == Ok(v) && short.len() <= 24 {
        short
    } else {
        format!("{v:.17e}")
    }
}

fn snr_field(snr: Option<f64>) -> String {
    match snr {
        Some(v) => fmt_g17(v),
        None => "inf".into(),
    }
}

pub const RESULT_HEADER: &str =
    "M,N,T,snr_db,trial,algorithm,lambda_or_tau,mse,sad_mean_deg,wall_ms,termination,objective_final";

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.m,
            self.n,
            self.t,
            snr_field(self.snr_db),
            self.trial,
            self.algorithm,
            fmt_g17(self.lambda_or_tau),
            fmt_g17(self.mse),
            fmt_g17(self.sad_mean_deg),
            fmt_g17(self.wall_ms),
            self.termination,
            fmt_g17(self.objective_final),
        )
    }

    fn sort_key(&self) -> (usize, usize, usize, u64, usize, String) {
        (
            self.m,
            self.n,
            self.t,
            self.snr_db.unwrap_or(f64::INFINITY).to_bits(),
            self.trial,
            self.algorithm.clone(),
        )
    }
}

fn termination_label(t: sca_core::report::Termination) -> &'static str {
    use sca_core::report::Termination::*;
    match t {
        Converged => "converged",
        MaxIterations => "max-iterations",
        StepSizeStall => "step-size-stall",
        StationaryInit => "stationary-init",
    }
}

struct Cell {
    g: u64,
    m: usize,
    n: usize,
    t: usize,
    snr: Option<f64>,
}

pub fn run_grid(grid: &BenchGrid, threads: usize) -> Result<Vec<ResultRow>, PipelineError> {
    use rayon::prelude::*;
    for a in &grid.algorithms {
        if !crate::pipeline::KNOWN_ALGORITHMS.contains(&a.name.as_str()) {
            return Err(PipelineError::Usage(format!(
                "unknown algorithm '{}' in grid",
                a.name
            )));
        }
    }
    let mut cells = Vec::new();
    let mut g = 0u64;
    for &(m, n) in &grid.dims {
        for &t in &grid.t_list {
            for &snr in &grid.snr_db_list {
                cells.push(Cell { g, m, n, t, snr });
                g += 1;
            }
        }
    }
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..grid.trials).map(move |tr| (c, tr)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Runtime(e.to_string()))?;
    let rows: Vec<Vec<ResultRow>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(ci, trial)| run_trial(grid, &cells[ci], trial))
            .collect()
    });
    let mut rows: Vec<ResultRow> = rows.into_iter().flatten().collect();
    rows.sort_by_key(|r| r.sort_key());
    Ok(rows)
}

fn run_trial(grid: &BenchGrid, cell: &Cell, trial: usize) -> Vec<ResultRow> {
    use sca_core::metrics::{mse, sad};
    use sca_core::synth::{generate, SnrSpec, SynthSpec};

    let snr_spec = match cell.snr {
        Some(db) => SnrSpec::Db(db),
        None => SnrSpec::Noiseless,
    };
    let spec = SynthSpec::new(cell.m, cell.n, cell.t, snr_spec, grid.seed_base);
    let mut data_rng = sca_core::rng::stream(grid.seed_base, &[cell.g, trial as u64]);
    let mut out = Vec::new();
    let dataset = match generate(&spec, &mut data_rng) {
        Ok(d) => d,
        Err(e) => {
            for (k, a) in grid.algorithms.iter().enumerate() {
                let _ = k;
                out.push(failed_row(cell, trial, a, format!("error({e})")));
            }
            return out;
        }
    };
    let a0 = dataset.ground_truth.as_ref().unwrap().a0_matrix();

    for (k, a) in grid.algorithms.iter().enumerate() {
        let algo = AlgoSpec {
            name: a.name.clone(),
            lambda: a.lambda,
            tau: a.tau,
        };
        let mut rng = sca_core::rng::stream(grid.seed_base, &[cell.g, trial as u64, 1 + k as u64]);
        match run_on_data(&dataset.y, cell.n, &algo, None, false, &mut rng) {
            Ok(outcome) => {
                let mse_v = mse(&a0, &outcome.a_hat).map(|r| r.score).unwrap_or(f64::NAN);
                let sad_v = sad(&a0, &outcome.a_hat)
                    .map(|r| r.score.to_degrees())
                    .unwrap_or(f64::NAN);
                out.push(ResultRow {
                    m: cell.m,
                    n: cell.n,
                    t: cell.t,
                    snr_db: cell.snr,
                    trial,
                    algorithm: a.name.clone(),
                    lambda_or_tau: algo.lambda_or_tau(),
                    mse: mse_v,
                    sad_mean_deg: sad_v,
                    wall_ms: outcome.report.wall_ms,
                    termination: termination_label(outcome.report.termination).to_string(),
                    objective_final: outcome.report.objective_final,
                });
            }
            Err(e) => out.push(failed_row(cell, trial, a, format!("error({e})"))),
        }
    }
    out
}

fn failed_row(cell: &Cell, trial: usize, a: &AlgoConfig, label: String) -> ResultRow {
    ResultRow {
        m: cell.m,
        n: cell.n,
        t: cell.t,
        snr_db: cell.snr,
        trial,
        algorithm: a.name.clone(),
        lambda_or_tau: if a.name.starts_with("pr") { a.tau } else { a.lambda },
        mse: f64::NAN,
        sad_mean_deg: f64::NAN,
        wall_ms: 0.0,
        termination: label.replace(',', ";"),
        objective_final: f64::NAN,
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(RESULT_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

/// Per-(cell, algorithm) aggregates: mean and sample standard deviation of
/// the MSE over trials (failed trials excluded from the moments).
pub fn aggregates_csv(rows: &[ResultRow]) -> String {
    let mut s =
        String::from("M,N,T,snr_db,algorithm,lambda_or_tau,trials,failures,mse_mean,mse_std\n");
    // rows are sorted with trial before algorithm, so same-algorithm rows are
    // not adjacent; group through a map keyed on everything but the trial
    let mut groups: std::collections::BTreeMap<_, Vec<&ResultRow>> = Default::default();
    for r in rows {
        groups
            .entry((
                r.m,
                r.n,
                r.t,
                r.snr_db.unwrap_or(f64::INFINITY).to_bits(),
                r.algorithm.clone(),
                r.lambda_or_tau.to_bits(),
            ))
            .or_default()
            .push(r);
    }
    for group in groups.values() {
        let ok: Vec<f64> = group.iter().map(|r| r.mse).filter(|v| v.is_finite()).collect();
        let failures = group.len() - ok.len();
        let (mean, std) = if ok.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let mean = ok.iter().sum::<f64>() / ok.len() as f64;
            let var = if ok.len() > 1 {
                ok.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (ok.len() - 1) as f64
            } else {
                0.0
            };
            (mean, var.sqrt())
        };
        let r = group[0];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.m,
            r.n,
            r.t,
            snr_field(r.snr_db),
            r.algorithm,
            fmt_g17(r.lambda_or_tau),
            group.len(),
            failures,
            fmt_g17(mean),
            fmt_g17(std)
        );
    }
    s
}

/// Minimal line chart: mean MSE (log10 scale) against SNR, one polyline per
/// algorithm, one file per (M, N, T) slice. Returns (file stem, svg body).
pub fn svg_charts(rows: &[ResultRow]) -> Vec<(String, String)> {
    use std::collections::BTreeMap;
    // slice -> algorithm -> snr -> (sum, count); only finite-SNR cells plot
    let mut slices: BTreeMap<(usize, usize, usize), BTreeMap<String, BTreeMap<i64, (f64, usize)>>> =
        BTreeMap::new();
    for r in rows {
        let Some(snr) = r.snr_db else { continue };
        if !r.mse.is_finite() {
            continue;
        }
        let cell = slices
            .entry((r.m, r.n, r.t))
            .or_default()
            .entry(r.algorithm.clone())
            .or_default()
            .entry((snr * 1000.0).round() as i64)
            .or_insert((0.0, 0));
        cell.0 += r.mse;
        cell.1 += 1;
    }
    const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let (width, height, pad) = (640.0, 420.0, 54.0);
    let mut out = Vec::new();
    for ((m, n, t), algos) in &slices {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for series in algos.values() {
            for (&snr_milli, &(sum, count)) in series {
                pts.push((snr_milli as f64 / 1000.0, (sum / count as f64).log10()));
            }
        }
        if pts.is_empty() {
            continue;
        }
        let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor();
        let ymax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil();
        let xspan = (xmax - xmin).max(1e-9);
        let yspan = (ymax - ymin).max(1e-9);
        let to_x = |v: f64| pad + (v - xmin) / xspan * (width - 2.0 * pad);
        let to_y = |v: f64| height - pad - (v - ymin) / yspan * (height - 2.0 * pad);

        let mut svg = String::new();
        let _ = write!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">MSE vs SNR, M={m} N={n} T={t}</text>\n",
            pad
        );
        // axes
        let _ = write!(
            svg,
            "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
             <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{0}\" stroke=\"black\"/>\n",
            height - pad,
            width - pad
        );
        // y grid at integer log10 levels
        let mut level = ymin;
        while level <= ymax + 1e-9 {
            let yy = to_y(level);
            let _ = write!(
                svg,
                "<line x1=\"{pad}\" y1=\"{yy:.1}\" x2=\"{0}\" y2=\"{yy:.1}\" stroke=\"#ddd\"/>\n\
                 <text x=\"4\" y=\"{1:.1}\" font-family=\"sans-serif\" font-size=\"11\">1e{level:.0}</text>\n",
                width - pad,
                yy + 4.0
            );
            level += 1.0;
        }
        // x ticks at the observed SNR values
        let mut ticks: Vec<i64> = algos
            .values()
            .flat_map(|s| s.keys().copied())
            .collect();
        ticks.sort_unstable();
        ticks.dedup();
        for snr_milli in ticks {
            let x = to_x(snr_milli as f64 / 1000.0);
            let ty = height - pad + 16.0;
            let label = fmt_g17(snr_milli as f64 / 1000.0);
            let _ = write!(
                svg,
                "<text x=\"{x:.1}\" y=\"{ty:.1}\" font-family=\"sans-serif\" font-size=\"10\" \
                 text-anchor=\"middle\">{label}</text>\n"
            );
        }
        for (ai, (alg, series)) in algos.iter().enumerate() {
            let color = COLORS[ai % COLORS.len()];
            let mut path = String::new();
            for (&snr_milli, &(sum, count)) in series {
                let x = to_x(snr_milli as f64 / 1000.0);
                let yv = to_y((sum / count as f64).log10());
                let _ = write!(path, "{x:.1},{yv:.1} ");
            }
            let _ = write!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.trim_end()
            );
            let _ = write!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{alg}</text>\n",
                width - pad + 4.0 - 110.0,
                pad + 16.0 * ai as f64
            );
        }
        svg.push_str("</svg>\n");
        out.push((format!("mse_m{m}_n{n}_t{t}"), svg));
    }
    out
}

pub fn write_outputs(
    rows: &[ResultRow],
    out_dir: &Path,
    svg: bool,
) -> Result<(), PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::Runtime(e.to_string()))?;
    std::fs::write(out_dir.join("results.csv"), rows_to_csv(rows))
        .map_err(|e| PipelineError::Runtime(e.to_string()))?;
    std::fs::write(out_dir.join("aggregates.csv"), aggregates_csv(rows))
        .map_err(|e| PipelineError::Runtime(e.to_string()))?;
    if svg {
        for (stem, body) in svg_charts(rows) {
            std::fs::write(out_dir.join(format!("{stem}.svg")), body)
                .map_err(|e| PipelineError::Runtime(e.to_string()))?;
        }
    }
    Ok(())
}

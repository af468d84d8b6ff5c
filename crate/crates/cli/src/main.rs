//! Command-line harness: dataset generation (`synth`), single solves
//! (`unmix`) and Monte Carlo sweeps (`bench`).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod bench;
mod pipeline;

use bench::{fmt_g17, run_grid, write_outputs, BenchGrid};
use clap::{Args, Parser, Subcommand};
use pipeline::{run_on_data, AlgoSpec, PipelineError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sca-bench", version, about = "Simplex component analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset (data CSV + ground-truth JSON sidecar).
    Synth(SynthArgs),
    /// Run one algorithm on a dataset and write the estimated vertices.
    Unmix(UnmixArgs),
    /// Run a Monte Carlo sweep described by a JSON grid file.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Ambient dimension (rows of the data).
    #[arg(long)]
    m: usize,
    /// Number of simplex vertices.
    #[arg(long)]
    n: usize,
    /// Number of data columns.
    #[arg(long)]
    t: usize,
    /// Signal-to-noise ratio in dB (mutually exclusive with --noiseless).
    #[arg(long, conflicts_with = "noiseless")]
    snr_db: Option<f64>,
    /// Generate without noise (sigma2 = 0 in the sidecar).
    #[arg(long)]
    noiseless: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on the condition number of the vertex matrix.
    #[arg(long, default_value_t = 100.0)]
    cond_max: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UnmixArgs {
    /// Data CSV path (ground-truth sidecar picked up automatically).
    #[arg(long)]
    data: PathBuf,
    /// Algorithm: sisal, h2-sisal, pr-sisal, pr-sisal-pg, pr-sisal-epg.
    #[arg(long)]
    alg: String,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Noise variance; required for pr-* algorithms when M = N.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Number of vertices; inferred from the sidecar when omitted.
    #[arg(long)]
    n: Option<usize>,
    /// Divide each column by its entry sum first.
    #[arg(long)]
    normalize: bool,
    /// Seed for the initialization tie-breaks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the estimate and run report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid JSON file.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Also emit SVG line charts.
    #[arg(long)]
    svg: bool,
    /// Worker threads; falls back to SIMPLEX_UNMIX_THREADS, then all cores.
    #[arg(long)]
    parallel: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Unmix(a) => cmd_unmix(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(PipelineError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(PipelineError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> PipelineError {
    PipelineError::Runtime(e.to_string())
}

fn cmd_synth(a: SynthArgs) -> Result<(), PipelineError> {
    use sca_core::synth::{empirical_snr_db, generate, write_dataset, SnrSpec, SynthSpec};
    let snr = match (a.snr_db, a.noiseless) {
        (Some(db), false) => SnrSpec::Db(db),
        (None, true) => SnrSpec::Noiseless,
        (None, false) => {
            return Err(PipelineError::Usage(
                "one of --snr-db or --noiseless is required".into(),
            ))
        }
        (Some(_), true) => unreachable!("clap rejects the combination"),
    };
    let mut spec = SynthSpec::new(a.m, a.n, a.t, snr, a.seed);
    spec.cond_max = a.cond_max;
    let mut rng = sca_core::rng::stream(a.seed, &[a.m as u64, a.n as u64, a.t as u64]);
    let ds = generate(&spec, &mut rng).map_err(usage_if_invalid)?;
    std::fs::create_dir_all(&a.out).map_err(runtime)?;
    let data_path = a.out.join("data.csv");
    write_dataset(&ds, &data_path).map_err(runtime)?;
    let truth = ds.ground_truth.as_ref().unwrap();
    let clean = truth.a0_matrix() * truth.s_matrix();
    let noise = &ds.y - &clean;
    println!(
        "wrote {} and sidecar; empirical SNR {} dB",
        data_path.display(),
        fmt_g17(empirical_snr_db(&clean, &noise))
    );
    Ok(())
}

fn usage_if_invalid(e: sca_core::ScaError) -> PipelineError {
    match e {
        sca_core::ScaError::InvalidArgument(m) => PipelineError::Usage(m),
        other => PipelineError::Runtime(other.to_string()),
    }
}

fn cmd_unmix(a: UnmixArgs) -> Result<(), PipelineError> {
    use sca_core::metrics::{mse, sad};
    use sca_core::synth::read_dataset;

    let ds = read_dataset(&a.data).map_err(runtime)?;
    let n = match (a.n, &ds.ground_truth) {
        (Some(n), _) => n,
        (None, Some(t)) => t.a0[0].len(),
        (None, None) => {
            return Err(PipelineError::Usage(
                "--n is required when no ground-truth sidecar is present".into(),
            ))
        }
    };
    let algo = AlgoSpec {
        name: a.alg.clone(),
        lambda: a.lambda,
        tau: a.tau,
    };
    let mut rng = sca_core::rng::stream(a.seed, &[0x756e6d6978]);
    let outcome = run_on_data(&ds.y, n, &algo, a.sigma2, a.normalize, &mut rng)?;

    if let Some(truth) = &ds.ground_truth {
        let a0 = truth.a0_matrix();
        let m = mse(&a0, &outcome.a_hat).map_err(runtime)?;
        let s = sad(&a0, &outcome.a_hat).map_err(runtime)?;
        println!("mse {}", fmt_g17(m.score));
        println!("sad_mean_deg {}", fmt_g17(s.score.to_degrees()));
    }
    println!(
        "termination {:?}, objective {}, wall_ms {}",
        outcome.report.termination,
        fmt_g17(outcome.report.objective_final),
        fmt_g17(outcome.report.wall_ms)
    );

    if let Some(out) = &a.out {
        std::fs::create_dir_all(out).map_err(runtime)?;
        let mut csv = String::new();
        for i in 0..outcome.a_hat.nrows() {
            let row: Vec<String> = (0..outcome.a_hat.ncols())
                .map(|j| format!("{}", outcome.a_hat[(i, j)]))
                .collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        std::fs::write(out.join("a_hat.csv"), csv).map_err(runtime)?;
        let report = serde_json::to_string_pretty(&outcome.report).map_err(runtime)?;
        std::fs::write(out.join("report.json"), report).map_err(runtime)?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), PipelineError> {
    let text = std::fs::read_to_string(&a.grid).map_err(runtime)?;
    let grid: BenchGrid =
        serde_json::from_str(&text).map_err(|e| PipelineError::Usage(format!("bad grid: {e}")))?;
    if grid.trials == 0 || grid.algorithms.is_empty() || grid.dims.is_empty() {
        return Err(PipelineError::Usage(
            "grid needs at least one dim, one algorithm and one trial".into(),
        ));
    }
    let threads = a
        .parallel
        .or_else(|| {
            std::env::var("SIMPLEX_UNMIX_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(num_cpus);
    let rows = run_grid(&grid, threads.max(1))?;
    write_outputs(&rows, &a.out, a.svg)?;
    println!(
        "wrote {} rows to {}",
        rows.len(),
        a.out.join("results.csv").display()
    );
    Ok(())
}

fn num_cpus() -> usize {
    std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
}

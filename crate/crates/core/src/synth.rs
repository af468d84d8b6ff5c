//! Synthetic data generation for the simulation model: uniform-on-simplex
//! latent variables, random mixing matrices with condition-number rejection,
//! SNR-calibrated Gaussian noise, and NMF-style column normalization.

use crate::error::{Result, ScaError};
use crate::linalg::cond_2;
use nalgebra::DMatrix;
#[cfg(test)]
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Ground truth carried alongside a synthetic observation matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub a0: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub seed: u64,
}

impl GroundTruth {
    pub fn a0_matrix(&self) -> DMatrix<f64> {
        matrix_from_rows(&self.a0)
    }

    pub fn s_matrix(&self) -> DMatrix<f64> {
        matrix_from_rows(&self.s)
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// An M x T observation matrix with optional synthetic ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: DMatrix<f64>,
    pub ground_truth: Option<GroundTruth>,
    pub seed: u64,
}

/// Noise level request: an explicit decibel figure or exactly noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SnrSpec {
    Db(f64),
    Noiseless,
}

/// Synthetic problem descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub snr: SnrSpec,
    pub cond_max: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(m: usize, n: usize, t: usize, snr: SnrSpec, seed: u64) -> Self {
        SynthSpec {
            m,
            n,
            t,
            snr,
            cond_max: 100.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m < self.n || self.t < self.n {
            return Err(ScaError::InvalidArgument(format!(
                "need M >= N >= 2 and T >= N, got M={}, N={}, T={}",
                self.m, self.n, self.t
            )));
        }
        if self.cond_max <= 1.0 {
            return Err(ScaError::InvalidArgument(format!(
                "cond_max must exceed 1, got {}",
                self.cond_max
            )));
        }
        Ok(())
    }
}

/// i.i.d. Dirichlet(1,...,1) columns via normalized standard-exponential
/// draws; each column sums to one.
pub fn sample_unit_simplex(n: usize, count: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    assert!(n >= 1);
    let mut s = DMatrix::zeros(n, count);
    for t in 0..count {
        let mut sum = 0.0;
        for i in 0..n {
            let u: f64 = rng.gen::<f64>();
            let e = -(1.0 - u).ln();
            s[(i, t)] = e;
            sum += e;
        }
        for i in 0..n {
            s[(i, t)] /= sum;
        }
    }
    s
}

const REJECTION_CAP: usize = 10_000;

/// Generate a synthetic dataset per the simulation protocol: A0 elementwise
/// U[0,1] redrawn until cond(A0) <= cond_max, Dirichlet(1) abundances, and
/// Gaussian noise calibrated to the requested SNR in decibels.
pub fn generate(spec: &SynthSpec, rng: &mut impl Rng) -> Result<Dataset> {
    spec.validate()?;
    let mut a0 = None;
    for _ in 0..REJECTION_CAP {
        let cand = DMatrix::from_fn(spec.m, spec.n, |_, _| rng.gen::<f64>());
        if cond_2(&cand) <= spec.cond_max {
            a0 = Some(cand);
            break;
        }
    }
    let a0 = a0.ok_or_else(|| {
        ScaError::Generation(format!(
            "no A0 with cond <= {} found in {REJECTION_CAP} draws",
            spec.cond_max
        ))
    })?;

    let s = sample_unit_simplex(spec.n, spec.t, rng);
    let clean = &a0 * &s;

    let sigma2 = match spec.snr {
        SnrSpec::Noiseless => 0.0,
        SnrSpec::Db(db) => {
            let power: f64 =
                clean.column_iter().map(|c| c.norm_squared()).sum::<f64>() / spec.t as f64;
            let snr_lin = 10f64.powf(db / 10.0);
            power / (spec.m as f64 * snr_lin)
        }
    };

    let mut y = clean;
    if sigma2 > 0.0 {
        let sd = sigma2.sqrt();
        for v in y.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sd * z;
        }
    }

    Ok(Dataset {
        y,
        ground_truth: Some(GroundTruth {
            a0: matrix_to_rows(&a0),
            s: matrix_to_rows(&s),
            sigma2,
            seed: spec.seed,
        }),
        seed: spec.seed,
    })
}

/// Divide every column of a nonnegative matrix by its entry sum.
pub fn nmf_normalize(z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = z.clone();
    for j in 0..z.ncols() {
        let sum = z.column(j).sum();
        if sum <= 0.0 {
            return Err(ScaError::ZeroSumColumn(j));
        }
        for i in 0..z.nrows() {
            out[(i, j)] /= sum;
        }
    }
    Ok(out)
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips to the same double
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
    s
}

/// Write the observation matrix as CSV (M rows, T columns, no header) and,
/// when ground truth is present, a sidecar JSON file next to it.
pub fn write_dataset(ds: &Dataset, data_path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(data_path)?);
    for i in 0..ds.y.nrows() {
        let row: Vec<String> = (0..ds.y.ncols()).map(|j| fmt_f64(ds.y[(i, j)])).collect();
        writeln!(file, "{}", row.join(","))?;
    }
    file.flush()?;
    if let Some(gt) = &ds.ground_truth {
        let json = serde_json::to_string_pretty(gt)
            .map_err(|e| ScaError::Parse(e.to_string()))?;
        std::fs::write(sidecar_path(data_path), json)?;
    }
    Ok(())
}

pub fn sidecar_path(data_path: &Path) -> std::path::PathBuf {
    data_path.with_extension("truth.json")
}

/// Read a dataset written by [`write_dataset`]; the sidecar is optional.
pub fn read_dataset(data_path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(data_path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| ScaError::Parse(format!("bad CSV value: {e}")))?);
    }
    if rows.is_empty() {
        return Err(ScaError::Parse("empty data file".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ScaError::Parse("ragged CSV rows".into()));
    }
    let y = matrix_from_rows(&rows);

    let sidecar = sidecar_path(data_path);
    let ground_truth = if sidecar.exists() {
        let json = std::fs::read_to_string(sidecar)?;
        Some(serde_json::from_str(&json).map_err(|e| ScaError::Parse(e.to_string()))?)
    } else {
        None
    };
    let seed = ground_truth.as_ref().map_or(0, |gt: &GroundTruth| gt.seed);
    Ok(Dataset { y, ground_truth, seed })
}

/// Empirical SNR in decibels recomputed from the generated pieces.
pub fn empirical_snr_db(clean: &DMatrix<f64>, noise: &DMatrix<f64>) -> f64 {
    let t = clean.ncols() as f64;
    let m = clean.nrows() as f64;
    let signal = clean.column_iter().map(|c| c.norm_squared()).sum::<f64>() / t;
    let noise_pow = noise.column_iter().map(|c| c.norm_squared()).sum::<f64>() / (t * m);
    10.0 * (signal / (m * noise_pow)).log10()
}

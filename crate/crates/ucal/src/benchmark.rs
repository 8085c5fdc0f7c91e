//! Synthetic Monte Carlo comparison of the coupled calibration against
//! independent rank-1 fits.

use std::f64::consts::PI;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ucal_core::cpd::{DEFAULT_CPD_MAX_ITER, DEFAULT_CPD_TOL};
use ucal_core::math::compensated_sum;
use ucal_core::model::response_atom;
use ucal_core::{
    calibrate, canonicalize, mcncc, rank1_cpd, reconstruction_error, synthesize, BcdConfig,
    CalibrationEstimate, CalibrationSet, Complex64, ComplexTensor4, Dims, PositionParams,
    SharedParams, TargetPosition,
};

use crate::error::{Error, Result};

/// Sizes, grids and seed of a Monte Carlo sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub positions: usize,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub t: usize,
    /// Magnitude response spreads, each in `[0, 1)`.
    pub deltas: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SimConfig {
    /// Desk-scale sweep that finishes in minutes.
    pub fn desk() -> Self {
        Self {
            positions: 50,
            n: 4,
            m: 16,
            l: 24,
            t: 10,
            deltas: vec![0.0, 0.5],
            snr_db: vec![-20.0, -10.0, 0.0, 10.0, 20.0],
            trials: 10,
            seed: 0,
        }
    }

    /// Full-size sweep with 250 positions and 60 receivers. Expect hours.
    pub fn full() -> Self {
        Self {
            positions: 250,
            m: 60,
            deltas: vec![0.0, 0.1, 0.5],
            trials: 100,
            ..Self::desk()
        }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.n, self.m, self.l, self.t)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.positions, self.n, self.m, self.l, self.t, self.trials].contains(&0) {
            return Err(Error::Config(
                "sweep sizes and trial count must be at least 1".into(),
            ));
        }
        if self.deltas.is_empty() || self.snr_db.is_empty() {
            return Err(Error::Config(
                "delta and SNR grids must not be empty".into(),
            ));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(0.0..1.0).contains(*d)) {
            return Err(Error::Config(format!("delta {d} outside [0, 1)")));
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(Error::Config("SNR grid contains NaN".into()));
        }
        Ok(())
    }
}

fn unit(rng: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(-PI..PI))
}

/// Raw magnitude responses, uniform on `[1 − δ, 1]`, before any
/// normalization.
pub fn draw_magnitudes(len: usize, delta: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..len)
        .map(|_| {
            if delta == 0.0 {
                1.0
            } else {
                rng.gen_range(1.0 - delta..=1.0)
            }
        })
        .collect()
}

/// Random ground truth in canonical form: unit-modulus steering, phase and
/// gain entries with uniform phase, magnitude responses uniform on
/// `[1 − δ, 1]`.
pub fn generate_truth(
    dims: Dims,
    positions: usize,
    delta: f64,
    rng: &mut impl Rng,
) -> (SharedParams, Vec<PositionParams>) {
    let g_tx = draw_magnitudes(dims.l * dims.n, delta, rng);
    let g_rx = draw_magnitudes(dims.l * dims.m, delta, rng);
    let mut shared = SharedParams::new(dims.l, dims.n, dims.m, g_tx, g_rx)
        .expect("sizes are consistent by construction");
    let mut units = |len: usize| -> Vec<Complex64> { (0..len).map(|_| unit(rng)).collect() };
    let mut params: Vec<PositionParams> = (0..positions)
        .map(|_| PositionParams {
            a_tx: units(dims.n),
            a_rx: units(dims.m),
            c: units(dims.l),
            h: units(dims.t),
        })
        .collect();
    canonicalize(&mut shared, &mut params);
    (shared, params)
}

/// Adds circular complex Gaussian noise so that the expected total noise
/// energy is `‖y‖² / 10^(snr/10)`. An infinite SNR returns `y` unchanged.
pub fn add_noise(y: &ComplexTensor4, snr_db: f64, rng: &mut impl Rng) -> Result<ComplexTensor4> {
    let energy = y.norm_sqr();
    if energy == 0.0 {
        return Err(ucal_core::Error::ZeroSignal("noise reference signal").into());
    }
    if snr_db == f64::INFINITY {
        return Ok(y.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::Config("SNR must not be NaN".into()));
    }
    let variance = energy / (y.dims().len() as f64 * 10f64.powf(snr_db / 10.0));
    let sigma = (variance / 2.0).sqrt();
    let mut out = y.clone();
    for z in out.data_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += Complex64::new(sigma * re, sigma * im);
    }
    Ok(out)
}

/// Reference positions attached to synthetic tensors. The solver does not
/// use them.
pub fn placeholder_positions(count: usize) -> Vec<TargetPosition> {
    (0..count)
        .map(|p| TargetPosition {
            range: 1.0,
            azimuth: 0.01 * p as f64,
            elevation: 0.0,
        })
        .collect()
}

/// Per-position relative reconstruction errors of a calibration estimate.
pub fn reconstruction_map(data: &CalibrationSet, est: &CalibrationEstimate) -> Result<Vec<f64>> {
    data.tensors()
        .iter()
        .enumerate()
        .map(|(p, y)| Ok(reconstruction_error(y, &est.reconstruct(p)?)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    Rank1Cpd,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Proposed, Method::Rank1Cpd];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub delta: f64,
    pub method: Method,
    pub trial: usize,
    pub mcncc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub snr_db: f64,
    pub delta: f64,
    pub method: Method,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: SimConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<Aggregate>,
}

impl MetricReport {
    pub fn mean(&self, method: Method, delta: f64, snr_db: f64) -> Option<f64> {
        self.summary
            .iter()
            .find(|a| a.method == method && a.delta == delta && a.snr_db == snr_db)
            .map(|a| a.mean)
    }
}

const TRUTH_STREAM: u64 = 1 << 62;
const NOISE_STREAM: u64 = 2 << 62;

/// Truth depends on `(δ, trial)` only, so every SNR sees the same draws.
fn truth_rng(seed: u64, delta_idx: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRUTH_STREAM | (delta_idx as u64) << 32 | trial as u64);
    rng
}

fn noise_rng(seed: u64, snr_idx: usize, delta_idx: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM | (snr_idx as u64) << 48 | (delta_idx as u64) << 32 | trial as u64);
    rng
}

/// One trial: noisy data, both estimators, MCNCC of each.
fn run_trial(
    cfg: &SimConfig,
    bcd: &BcdConfig,
    snr_idx: usize,
    delta_idx: usize,
    trial: usize,
) -> Result<[f64; 2]> {
    let dims = cfg.dims();
    let delta = cfg.deltas[delta_idx];
    let (shared, params) = generate_truth(
        dims,
        cfg.positions,
        delta,
        &mut truth_rng(cfg.seed, delta_idx, trial),
    );
    let mut rng = noise_rng(cfg.seed, snr_idx, delta_idx, trial);
    let tensors = params
        .iter()
        .map(|p| add_noise(&synthesize(&shared, p)?, cfg.snr_db[snr_idx], &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let truth_atoms = params
        .iter()
        .map(|p| response_atom(&shared, &p.a_tx, &p.a_rx, &p.c))
        .collect::<ucal_core::Result<Vec<_>>>()?;

    let cpd_atoms = tensors
        .iter()
        .map(|y| Ok(rank1_cpd(y, DEFAULT_CPD_TOL, DEFAULT_CPD_MAX_ITER)?.atom()))
        .collect::<Result<Vec<_>>>()?;

    let set = CalibrationSet::new(tensors, placeholder_positions(cfg.positions))?;
    let est = calibrate(&set, bcd)?;
    let est_atoms = est
        .positions
        .iter()
        .map(|p| response_atom(&est.shared, &p.a_tx, &p.a_rx, &p.c))
        .collect::<ucal_core::Result<Vec<_>>>()?;

    Ok([
        mcncc(&truth_atoms, &est_atoms)?,
        mcncc(&truth_atoms, &cpd_atoms)?,
    ])
}

/// Runs every `(SNR, δ, trial)` combination in parallel. Trials use
/// independent random streams derived from the seed, and aggregation runs
/// serially in grid order, so the report does not depend on scheduling.
pub fn run_sweep(cfg: &SimConfig, bcd: &BcdConfig) -> Result<MetricReport> {
    cfg.validate()?;
    bcd.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..cfg.snr_db.len())
        .flat_map(|s| {
            (0..cfg.deltas.len()).flat_map(move |d| (0..cfg.trials).map(move |t| (s, d, t)))
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(s, d, t)| run_trial(cfg, bcd, s, d, t))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(2 * jobs.len());
    for (&(s, d, t), values) in jobs.iter().zip(&results) {
        for (method, &mcncc) in Method::ALL.iter().zip(values) {
            records.push(TrialRecord {
                snr_db: cfg.snr_db[s],
                delta: cfg.deltas[d],
                method: *method,
                trial: t,
                mcncc,
            });
        }
    }
    let mut summary = Vec::new();
    for &snr_db in &cfg.snr_db {
        for &delta in &cfg.deltas {
            for method in Method::ALL {
                let values: Vec<f64> = records
                    .iter()
                    .filter(|r| r.method == method && r.delta == delta && r.snr_db == snr_db)
                    .map(|r| r.mcncc)
                    .collect();
                summary.push(Aggregate {
                    snr_db,
                    delta,
                    method,
                    mean: compensated_sum(values.iter().copied()) / values.len() as f64,
                    min: values.iter().copied().fold(f64::INFINITY, f64::min),
                    max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    trials: values.len(),
                });
            }
        }
    }
    Ok(MetricReport {
        config: cfg.clone(),
        records,
        summary,
    })
}

/// Writes one row per trial and method: `snr_db,delta,method,trial,mcncc`.
pub fn write_sweep_csv(path: &Path, report: &MetricReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &report.records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the configuration and the per-cell aggregates as JSON.
pub fn write_summary_json(path: &Path, report: &MetricReport) -> Result<()> {
    #[derive(Serialize)]
    struct Summary<'a> {
        config: &'a SimConfig,
        summary: &'a [Aggregate],
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(
        &mut file,
        &Summary {
            config: &report.config,
            summary: &report.summary,
        },
    )?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}

//! The five command-line stages as library functions. Each writes its
//! artifacts plus a JSON manifest next to the main output.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use ucal_core::{
    build_dictionary, calibrate, estimate_r0, image, synthesize, threshold_and_project, Block,
    CalibrationEstimate, Complex64, DictionaryConfig, Dims, ImageEstimate, PhaseModel,
    PositionParams, SharedParams, TargetPosition,
};

use crate::benchmark::{
    add_noise, generate_truth, placeholder_positions, reconstruction_map, run_sweep,
    write_summary_json, write_sweep_csv,
};
use crate::config::{RunConfig, SimSource, TargetSpec};
use crate::error::{Error, Result};
use crate::format::{
    read_calibration, read_dictionary, read_estimate, write_calibration, write_dictionary,
    write_estimate, CalibrationFile, EstimateFile,
};
use crate::scene::{direction_grid, UraSimulator};

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate {
        output: PathBuf,
    },
    Calibrate {
        input: PathBuf,
        output: PathBuf,
    },
    Dictionary {
        input: PathBuf,
        output: PathBuf,
    },
    Image {
        input: PathBuf,
        dictionary: PathBuf,
        output: PathBuf,
    },
    Eval {
        output: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Calibrate { .. } => "calibrate",
            Command::Dictionary { .. } => "dictionary",
            Command::Image { .. } => "image",
            Command::Eval { .. } => "eval",
        }
    }

    pub fn output(&self) -> &Path {
        match self {
            Command::Simulate { output }
            | Command::Calibrate { output, .. }
            | Command::Dictionary { output, .. }
            | Command::Image { output, .. }
            | Command::Eval { output } => output,
        }
    }
}

/// Run-wide settings after merging command-line flags into the config.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub config: RunConfig,
    pub threads: Option<usize>,
}

impl RunContext {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn deterministic(&self) -> bool {
        self.config.deterministic
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub deterministic: bool,
    pub threads: Option<usize>,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub results: Value,
    /// Excluded from reproducibility comparisons.
    pub wall_time_s: f64,
}

/// `out.ext` becomes `out.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

pub fn manifest_path(output: &Path) -> PathBuf {
    sidecar(output, "manifest.json")
}

struct Outcome {
    outputs: Vec<PathBuf>,
    results: Value,
}

/// Runs one stage and writes its manifest.
pub fn execute(ctx: &RunContext, cmd: &Command) -> Result<Manifest> {
    let start = Instant::now();
    let outcome = match cmd {
        Command::Simulate { output } => simulate(ctx, output)?,
        Command::Calibrate { input, output } => calibrate_cmd(ctx, input, output)?,
        Command::Dictionary { input, output } => dictionary_cmd(ctx, input, output)?,
        Command::Image {
            input,
            dictionary,
            output,
        } => image_cmd(ctx, input, dictionary, output)?,
        Command::Eval { output } => eval_cmd(ctx, output)?,
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        seed: ctx.seed(),
        deterministic: ctx.deterministic(),
        threads: ctx.threads,
        config: ctx.config.clone(),
        outputs: outcome
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        results: outcome.results,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&manifest_path(cmd.output()), &manifest)?;
    Ok(manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}

fn target_from_spec(spec: &TargetSpec) -> Result<TargetPosition> {
    Ok(TargetPosition::new(
        spec.range,
        spec.azimuth_deg.to_radians(),
        spec.elevation_deg.to_radians(),
    )?)
}

fn snr(value: Option<f64>) -> f64 {
    value.unwrap_or(f64::INFINITY)
}

fn simulate(ctx: &RunContext, output: &Path) -> Result<Outcome> {
    let cfg = &ctx.config.simulate;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let (dims, shared, targets, params): (
        Dims,
        SharedParams,
        Vec<TargetPosition>,
        Vec<PositionParams>,
    );
    let mut simulator = None;
    match cfg.source {
        SimSource::Random => {
            if [cfg.positions, cfg.n, cfg.m, cfg.l, cfg.t].contains(&0) {
                return Err(Error::Config("simulation sizes must be at least 1".into()));
            }
            if !(0.0..1.0).contains(&cfg.delta) {
                return Err(Error::Config(format!("delta {} outside [0, 1)", cfg.delta)));
            }
            if cfg.scene.is_some() {
                return Err(Error::Config(
                    "scenes require the rectangular array source".into(),
                ));
            }
            dims = Dims::new(cfg.n, cfg.m, cfg.l, cfg.t);
            (shared, params) = generate_truth(dims, cfg.positions, cfg.delta, &mut rng);
            targets = placeholder_positions(cfg.positions);
        }
        SimSource::Ura => {
            let sim = UraSimulator::new(cfg.ura.clone(), &mut rng)?;
            let rad = |v: &[f64]| v.iter().map(|d| d.to_radians()).collect::<Vec<_>>();
            targets = direction_grid(cfg.range, &rad(&cfg.azimuth_deg), &rad(&cfg.elevation_deg))?;
            if targets.is_empty() {
                return Err(Error::Config("calibration grid is empty".into()));
            }
            dims = cfg.ura.dims();
            shared = sim.shared().clone();
            params = targets
                .iter()
                .map(|t| {
                    let h = sim.random_gains(&mut rng);
                    sim.params(t, h)
                })
                .collect::<Result<_>>()?;
            simulator = Some(sim);
        }
    }
    let tensors = params
        .iter()
        .map(|p| add_noise(&synthesize(&shared, p)?, snr(cfg.snr_db), &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let file = CalibrationFile {
        dims,
        positions: targets.clone(),
        tensors,
    };
    write_calibration(output, &file)?;
    let mut outputs = vec![output.to_path_buf()];
    if let Some(path) = &cfg.truth {
        write_estimate(
            path,
            &EstimateFile {
                dims,
                shared,
                targets,
                params,
            },
        )?;
        outputs.push(path.clone());
    }
    let mut results =
        json!({ "positions": file.tensors.len(), "dims": [dims.n, dims.m, dims.l, dims.t] });
    if let (Some(sim), Some(scene)) = (&simulator, &cfg.scene) {
        if scene.targets.is_empty() {
            return Err(Error::Config("scene has no targets".into()));
        }
        let spots = scene
            .targets
            .iter()
            .map(|spec| Ok((target_from_spec(spec)?, sim.random_gains(&mut rng))))
            .collect::<Result<Vec<_>>>()?;
        let y = sim.scene(&spots, snr(scene.snr_db), &mut rng)?;
        let scene_file = CalibrationFile {
            dims,
            positions: vec![spots[0].0],
            tensors: vec![y],
        };
        write_calibration(&scene.output, &scene_file)?;
        outputs.push(scene.output.clone());
        results["scene_targets"] = json!(scene.targets.len());
    }
    info!("simulated {} positions", file.tensors.len());
    Ok(Outcome { outputs, results })
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    block: &'static str,
    cost: f64,
}

#[derive(Serialize)]
struct ZetaRow {
    position: usize,
    range_m: f64,
    azimuth_deg: f64,
    elevation_deg: f64,
    zeta_rel: f64,
}

fn write_trace(path: &Path, est: &CalibrationEstimate) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.serialize(TraceRow {
        iteration: 0,
        block: "initial",
        cost: est.initial_cost,
    })?;
    for rec in &est.trace {
        for (block, &cost) in Block::ALL.iter().zip(&rec.block_costs) {
            w.serialize(TraceRow {
                iteration: rec.iteration,
                block: block.name(),
                cost,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn calibrate_cmd(ctx: &RunContext, input: &Path, output: &Path) -> Result<Outcome> {
    let file = read_calibration(input)?;
    let dims = file.dims;
    let set = file.into_set()?;
    let bcd = ctx.config.calibrate.bcd(ctx.deterministic());
    let est = calibrate(&set, &bcd)?;
    let final_cost = est.final_cost();
    if !final_cost.is_finite() {
        return Err(Error::Numerical(format!(
            "calibration cost diverged to {final_cost}"
        )));
    }
    info!(
        "calibrated {} positions in {} iterations, cost {final_cost:.3e}",
        set.len(),
        est.iterations()
    );
    write_estimate(
        output,
        &EstimateFile {
            dims,
            shared: est.shared.clone(),
            targets: set.positions().to_vec(),
            params: est.positions.clone(),
        },
    )?;
    let trace = sidecar(output, "trace.csv");
    write_trace(&trace, &est)?;

    let zeta = reconstruction_map(&set, &est)?;
    let zeta_path = sidecar(output, "zeta.csv");
    let mut w = csv::Writer::from_path(&zeta_path)?;
    for (p, (z, t)) in zeta.iter().zip(set.positions()).enumerate() {
        w.serialize(ZetaRow {
            position: p,
            range_m: t.range,
            azimuth_deg: t.azimuth.to_degrees(),
            elevation_deg: t.elevation.to_degrees(),
            zeta_rel: *z,
        })?;
    }
    w.flush().map_err(|e| Error::io(&zeta_path, e))?;

    let d = &est.diagnostics;
    let results = json!({
        "initial_cost": est.initial_cost,
        "final_cost": final_cost,
        "iterations": est.iterations(),
        "converged": est.converged,
        "guarded_updates": d.guarded,
        "excluded_positions": d.excluded,
        "degenerate_steering": d.degenerate_steering,
    });
    Ok(Outcome {
        outputs: vec![output.to_path_buf(), trace, zeta_path],
        results,
    })
}

fn dictionary_cmd(ctx: &RunContext, input: &Path, output: &Path) -> Result<Outcome> {
    let cfg = &ctx.config.dictionary;
    let est = read_estimate(input)?;
    let base = PhaseModel::new(cfg.c_sound, cfg.delta_omega(), 0.0)?;
    let (r0, estimated) = match cfg.r0 {
        Some(r0) => (r0, false),
        None => {
            let phases: Vec<Vec<Complex64>> = est.params.iter().map(|p| p.c.clone()).collect();
            let ranges: Vec<f64> = est.targets.iter().map(|t| t.range).collect();
            (
                estimate_r0(&phases, &ranges, &base, cfg.aggregation.into())?,
                true,
            )
        }
    };
    let model = PhaseModel::new(cfg.c_sound, cfg.delta_omega(), r0)?;
    let dict = build_dictionary(
        &est.shared,
        &est.params,
        &est.targets,
        &DictionaryConfig {
            model,
            offsets: cfg.offsets.clone(),
            source: cfg.source.into(),
        },
    )?;
    write_dictionary(output, &dict)?;
    info!("dictionary with {} atoms, r0 = {r0:.6} m", dict.len());
    Ok(Outcome {
        outputs: vec![output.to_path_buf()],
        results: json!({ "r0_m": r0, "r0_estimated": estimated, "atoms": dict.len() }),
    })
}

#[derive(Serialize)]
struct DetectionRow {
    iteration: usize,
    atom: usize,
    range_m: f64,
    azimuth_deg: f64,
    elevation_deg: f64,
    power_db: f64,
}

#[derive(Serialize)]
struct CartesianRow {
    detection: usize,
    x_m: f64,
    y_m: f64,
    z_m: f64,
    power_db: f64,
}

#[derive(Serialize)]
struct AngularRow {
    azimuth_deg: f64,
    elevation_deg: f64,
    power_db: f64,
}

fn db(power: f64) -> f64 {
    10.0 * power.log10()
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the detection list and both projections.
pub fn write_image_outputs(
    output: &Path,
    est: &ImageEstimate,
    power_floor_db: f64,
) -> Result<Vec<PathBuf>> {
    write_rows(
        output,
        est.detections.iter().map(|d| DetectionRow {
            iteration: d.iteration,
            atom: d.atom,
            range_m: d.meta.range,
            azimuth_deg: d.meta.azimuth.to_degrees(),
            elevation_deg: d.meta.elevation.to_degrees(),
            power_db: db(d.power),
        }),
    )?;
    let proj = threshold_and_project(est, power_floor_db);
    let cartesian = sidecar(output, "cartesian.csv");
    write_rows(
        &cartesian,
        proj.cartesian.iter().map(|p| CartesianRow {
            detection: p.detection,
            x_m: p.x,
            y_m: p.y,
            z_m: p.z,
            power_db: db(p.power),
        }),
    )?;
    let angular = sidecar(output, "angular.csv");
    write_rows(
        &angular,
        proj.angular.iter().map(|p| AngularRow {
            azimuth_deg: p.azimuth.to_degrees(),
            elevation_deg: p.elevation.to_degrees(),
            power_db: db(p.power),
        }),
    )?;
    Ok(vec![output.to_path_buf(), cartesian, angular])
}

fn image_cmd(ctx: &RunContext, input: &Path, dictionary: &Path, output: &Path) -> Result<Outcome> {
    let cfg = &ctx.config.image;
    let file = read_calibration(input)?;
    let y = file.tensors.get(cfg.scene).ok_or_else(|| {
        Error::Config(format!(
            "scene index {} out of range for {} tensors",
            cfg.scene,
            file.tensors.len()
        ))
    })?;
    let dict = read_dictionary(dictionary)?;
    if cfg.eta_relative.is_some_and(|f| !(f >= 0.0)) {
        return Err(Error::Config("eta_relative must be non-negative".into()));
    }
    let omp = cfg.omp(y.norm_sqr());
    let est = image(y, &dict, &omp)?;
    info!("{} detections, stop: {:?}", est.detections.len(), est.stop);
    let outputs = write_image_outputs(output, &est, cfg.power_floor_db)?;
    let results = json!({
        "detections": est.detections.len(),
        "stop": format!("{:?}", est.stop),
        "eta": omp.eta,
        "initial_norm": est.initial_norm,
        "residual_norms": est.residual_norms,
    });
    Ok(Outcome { outputs, results })
}

fn eval_cmd(ctx: &RunContext, output: &Path) -> Result<Outcome> {
    let sweep = ctx.config.eval.sweep(ctx.seed());
    let bcd = ctx.config.calibrate.bcd(ctx.deterministic());
    let report = run_sweep(&sweep, &bcd)?;
    write_sweep_csv(output, &report)?;
    let summary = sidecar(output, "summary.json");
    write_summary_json(&summary, &report)?;
    info!("sweep finished with {} records", report.records.len());
    Ok(Outcome {
        outputs: vec![output.to_path_buf(), summary],
        results: json!({ "records": report.records.len(), "summary": report.summary }),
    })
}

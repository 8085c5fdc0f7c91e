use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ucal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucal"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = ucal(dir, args);
    assert!(
        out.status.success(),
        "ucal {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn without_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn noiseless_simulation_calibrates_to_zero_cost() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("run.toml"),
        "[simulate]\npositions = 6\nn = 2\nm = 4\nl = 6\nt = 3\n\n[calibrate]\ntol = 1e-12\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "--config", "run.toml", "--seed", "3", "simulate", "--output", "cal.ucal",
        ],
    );
    ok(
        d,
        &[
            "--config",
            "run.toml",
            "calibrate",
            "cal.ucal",
            "--output",
            "est.uest",
        ],
    );
    let m = manifest(&d.join("est.manifest.json"));
    assert_eq!(m["command"], "calibrate");
    let cost = m["results"]["final_cost"].as_f64().unwrap();
    assert!(cost < 1e-10, "final cost {cost}");

    let mut trace = csv::Reader::from_path(d.join("est.trace.csv")).unwrap();
    assert_eq!(trace.headers().unwrap(), vec!["iteration", "block", "cost"]);
    assert!(trace.records().count() > 1);
    let mut zeta = csv::Reader::from_path(d.join("est.zeta.csv")).unwrap();
    assert_eq!(
        zeta.headers().unwrap(),
        vec![
            "position",
            "range_m",
            "azimuth_deg",
            "elevation_deg",
            "zeta_rel"
        ]
    );
    assert_eq!(zeta.records().count(), 6);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = || {
        ok(
            d,
            &[
                "--seed",
                "11",
                "--deterministic",
                "simulate",
                "--output",
                "cal.ucal",
            ],
        );
        ok(
            d,
            &[
                "--deterministic",
                "calibrate",
                "cal.ucal",
                "--output",
                "est.uest",
            ],
        );
        let read = |name: &str| std::fs::read(d.join(name)).unwrap();
        (
            read("cal.ucal"),
            read("est.uest"),
            read("est.trace.csv"),
            read("est.zeta.csv"),
            without_wall_time(manifest(&d.join("cal.manifest.json"))),
            without_wall_time(manifest(&d.join("est.manifest.json"))),
        )
    };
    let first = run();
    let second = run();
    assert!(first == second, "outputs differ between identical runs");
    assert_eq!(first.4["seed"], 11);
    assert_eq!(first.5["deterministic"], true);
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let missing = ucal(d, &["calibrate", "nothing.ucal", "--output", "est.uest"]);
    assert_eq!(missing.status.code(), Some(2));

    std::fs::write(d.join("bad.ucal"), b"NOPE\x01\x00\x00\x00").unwrap();
    let bad = ucal(d, &["calibrate", "bad.ucal", "--output", "est.uest"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bad.ucal"));

    std::fs::write(d.join("bad.toml"), "[simulate]\nunknown_key = 1\n").unwrap();
    let config = ucal(
        d,
        &["--config", "bad.toml", "simulate", "--output", "x.ucal"],
    );
    assert_eq!(config.status.code(), Some(1));

    let threads = ucal(d, &["--threads", "0", "simulate", "--output", "x.ucal"]);
    assert_eq!(threads.status.code(), Some(1));
}

#[test]
fn eval_writes_one_row_per_trial_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("eval.toml"),
        "[eval.sweep]\npositions = 5\nn = 2\nm = 3\nl = 4\nt = 2\n\
         deltas = [0.0, 0.5]\nsnr_db = [0.0, 10.0, 20.0]\ntrials = 2\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "--config",
            "eval.toml",
            "--threads",
            "2",
            "eval",
            "--output",
            "sweep.csv",
        ],
    );
    let mut reader = csv::Reader::from_path(d.join("sweep.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec!["snr_db", "delta", "method", "trial", "mcncc"]
    );
    assert_eq!(reader.records().count(), 3 * 2 * 2 * 2);
    let summary = manifest(&d.join("sweep.summary.json"));
    assert_eq!(summary["summary"].as_array().unwrap().len(), 3 * 2 * 2);
    assert_eq!(manifest(&d.join("sweep.manifest.json"))["threads"], 2);
}

#[test]
fn rectangular_array_pipeline_localizes_a_target() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("ura.toml"),
        r#"
[simulate]
source = "ura"
snr_db = 40.0
azimuth_deg = [-15.0, 0.0, 15.0]
elevation_deg = [0.0]

[simulate.ura]
rx_rows = 3
rx_cols = 3
bins = 12
snapshots = 2

[simulate.scene]
output = "scene.ucal"
targets = [{ range = 1.0, azimuth_deg = 15.0, elevation_deg = 0.0 }]

[dictionary]
offsets = [-0.1, 0.0, 0.1]

[image]
eta_relative = 1e-2
"#,
    )
    .unwrap();
    fn with<'a>(rest: &[&'a str]) -> Vec<&'a str> {
        [&["--config", "ura.toml", "--seed", "4"][..], rest].concat()
    }
    ok(d, &with(&["simulate", "--output", "cal.ucal"]));
    ok(d, &with(&["calibrate", "cal.ucal", "--output", "est.uest"]));
    ok(
        d,
        &with(&["dictionary", "est.uest", "--output", "dict.udic"]),
    );
    ok(
        d,
        &with(&[
            "image",
            "scene.ucal",
            "--dictionary",
            "dict.udic",
            "--output",
            "det.csv",
        ]),
    );

    let dict = manifest(&d.join("dict.manifest.json"));
    assert_eq!(dict["results"]["atoms"], 9);
    let r0 = dict["results"]["r0_m"].as_f64().unwrap();
    assert!((r0 - 0.05).abs() < 1e-3, "r0 {r0}");

    let mut reader = csv::Reader::from_path(d.join("det.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    let value = |k: usize| rows[0][k].parse::<f64>().unwrap();
    assert!((value(2) - 1.0).abs() < 1e-12);
    assert!((value(3) - 15.0).abs() < 1e-9 && value(4).abs() < 1e-9);
    assert_eq!(
        manifest(&d.join("det.manifest.json"))["results"]["stop"],
        "ResidualThreshold"
    );
    assert!(d.join("det.cartesian.csv").exists() && d.join("det.angular.csv").exists());
}

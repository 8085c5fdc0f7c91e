use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ucal::scene::{direction_grid, UraConfig, UraSimulator};
use ucal_core::{calibrate, estimate_r0, BcdConfig, Complex64, OffsetAggregation, TargetPosition};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small() -> UraConfig {
    UraConfig {
        rx_rows: 2,
        rx_cols: 3,
        bins: 8,
        snapshots: 3,
        ..UraConfig::default()
    }
}

fn grid() -> Vec<TargetPosition> {
    let rad = |v: &[f64]| v.iter().map(|d: &f64| d.to_radians()).collect::<Vec<_>>();
    direction_grid(1.0, &rad(&[-20.0, 0.0, 20.0]), &rad(&[-10.0, 10.0])).unwrap()
}

#[test]
fn grid_varies_azimuth_fastest() {
    let g = grid();
    assert_eq!(g.len(), 6);
    assert!((g[1].azimuth - 0.0).abs() < 1e-15 && g[1].elevation < 0.0);
    assert!(g[3].elevation > 0.0 && g[3].azimuth < 0.0);
    assert!(direction_grid(-1.0, &[0.0], &[0.0]).is_err());
}

#[test]
fn geometry_is_centred_with_the_configured_pitch() {
    let cfg = small();
    let geo = cfg.geometry();
    assert_eq!(geo.rx_positions.len(), 6);
    assert_eq!(geo.tx_positions.len(), 2);
    for axis in 0..3 {
        let mean: f64 = geo.rx_positions.iter().map(|p| p[axis]).sum::<f64>() / 6.0;
        assert!(mean.abs() < 1e-15);
    }
    let dx = geo.rx_positions[1][0] - geo.rx_positions[0][0];
    let dy = geo.rx_positions[3][1] - geo.rx_positions[0][1];
    assert!((dx - cfg.pitch).abs() < 1e-15 && (dy - cfg.pitch).abs() < 1e-15);
    let tx_gap = geo.tx_positions[1][0] - geo.tx_positions[0][0];
    assert!((tx_gap - 3.0 * cfg.pitch).abs() < 1e-15);
}

#[test]
fn echo_matches_the_entrywise_product() {
    let sim = UraSimulator::new(small(), &mut rng(1)).unwrap();
    let target = TargetPosition::new(0.8, 0.2, -0.1).unwrap();
    let h = sim.random_gains(&mut rng(2));
    let params = sim.params(&target, h.clone()).unwrap();
    let y = sim.echo(&target, h).unwrap();
    let d = y.dims();
    let s = sim.shared();
    for n in 0..d.n {
        for m in 0..d.m {
            for l in 0..d.l {
                for t in 0..d.t {
                    let expected = params.a_tx[n]
                        * params.a_rx[m]
                        * params.c[l]
                        * params.h[t]
                        * (s.g_tx(l, n) * s.g_rx(l, m));
                    assert!((y.get(n, m, l, t).unwrap() - expected).norm() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn scene_superposes_echoes() {
    let sim = UraSimulator::new(small(), &mut rng(3)).unwrap();
    let a = TargetPosition::new(0.9, 0.1, 0.0).unwrap();
    let b = TargetPosition::new(1.2, -0.3, 0.2).unwrap();
    let ha = vec![Complex64::new(1.0, 0.0); 3];
    let hb = vec![Complex64::new(0.0, 0.5); 3];
    let y = sim
        .scene(
            &[(a, ha.clone()), (b, hb.clone())],
            f64::INFINITY,
            &mut rng(4),
        )
        .unwrap();
    let mut expected = sim.echo(&a, ha).unwrap();
    expected.add_assign(&sim.echo(&b, hb).unwrap()).unwrap();
    for (u, v) in y.data().iter().zip(expected.data()) {
        assert!((u - v).norm() < 1e-14);
    }
}

#[test]
fn noiseless_calibration_fits_and_recovers_the_offset() {
    let cfg = UraConfig {
        r0: 0.07,
        ..small()
    };
    let sim = UraSimulator::new(cfg, &mut rng(5)).unwrap();
    let targets = grid();
    let set = sim
        .calibration_set(&targets, f64::INFINITY, &mut rng(6))
        .unwrap();
    let est = calibrate(
        &set,
        &BcdConfig {
            tol: 1e-12,
            max_iter: 500,
            ..BcdConfig::default()
        },
    )
    .unwrap();
    assert!(est.final_cost() < 1e-10, "cost {}", est.final_cost());

    let phases: Vec<Vec<Complex64>> = est.positions.iter().map(|p| p.c.clone()).collect();
    let ranges: Vec<f64> = targets.iter().map(|t| t.range).collect();
    let r0 = estimate_r0(&phases, &ranges, sim.phase_model(), OffsetAggregation::Mean).unwrap();
    assert!((r0 - 0.07).abs() < 1e-6, "r0 {r0}");
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        UraConfig { bins: 0, ..small() },
        UraConfig {
            pitch: 0.0,
            ..small()
        },
        UraConfig {
            delta: 1.0,
            ..small()
        },
    ] {
        let err = UraSimulator::new(cfg, &mut rng(0)).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucal_core::model::response_atom;
use ucal_core::{
    canonicalize, synthesize, CalibrationSet, Complex64, ComplexTensor4, Dims, PositionParams,
    SharedParams, TargetPosition,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(
        1.0,
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
}

pub fn complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Zero-mean normal draw by the Box-Muller transform.
pub fn gaussian(rng: &mut impl Rng, sigma: f64) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn units(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| unit(rng)).collect()
}

pub fn complexes(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| complex(rng)).collect()
}

pub fn random_tensor(rng: &mut impl Rng, dims: Dims) -> ComplexTensor4 {
    ComplexTensor4::new(dims, complexes(rng, dims.len())).unwrap()
}

/// Unit-modulus random factors, magnitudes uniform on `[1 − δ, 1]`, then
/// brought into canonical form.
pub fn random_truth(
    rng: &mut impl Rng,
    dims: Dims,
    positions: usize,
    delta: f64,
) -> (SharedParams, Vec<PositionParams>) {
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| {
                if delta == 0.0 {
                    1.0
                } else {
                    rng.gen_range(1.0 - delta..=1.0)
                }
            })
            .collect()
    };
    let g_tx = draw(dims.l * dims.n);
    let g_rx = draw(dims.l * dims.m);
    let mut shared = SharedParams::new(dims.l, dims.n, dims.m, g_tx, g_rx).unwrap();
    let mut params: Vec<PositionParams> = (0..positions)
        .map(|_| PositionParams {
            a_tx: units(rng, dims.n),
            a_rx: units(rng, dims.m),
            c: units(rng, dims.l),
            h: units(rng, dims.t),
        })
        .collect();
    assert!(canonicalize(&mut shared, &mut params).is_empty());
    (shared, params)
}

pub fn grid(count: usize) -> Vec<TargetPosition> {
    (0..count)
        .map(|p| {
            TargetPosition::new(1.0 + 0.01 * p as f64, 0.02 * p as f64, -0.01 * p as f64).unwrap()
        })
        .collect()
}

pub fn synthesize_set(shared: &SharedParams, params: &[PositionParams]) -> CalibrationSet {
    let tensors = params
        .iter()
        .map(|p| synthesize(shared, p).unwrap())
        .collect();
    CalibrationSet::new(tensors, grid(params.len())).unwrap()
}

pub fn atoms(shared: &SharedParams, params: &[PositionParams]) -> Vec<Vec<Complex64>> {
    params
        .iter()
        .map(|p| response_atom(shared, &p.a_tx, &p.a_rx, &p.c).unwrap())
        .collect()
}

pub fn relative_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

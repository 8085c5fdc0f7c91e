//! Orthogonal matching pursuit over a range-angle dictionary.
//!
//! The measurement is handled in its mode-4 unfolding `Y` (`T × NML`), which
//! the model writes as `Σ_k h_k q_kᵀ`. Each iteration selects the atom whose
//! single-atom least-squares fit removes the most residual energy and then
//! refits all selected gains jointly.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dictionary::{AtomMeta, Dictionary};
use crate::error::{check_len, Error, Result};
use crate::math;
use crate::tensor::{norm_sqr, ComplexMatrix, ComplexTensor4, Mode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpConfig {
    /// Stop once the squared residual norm is at most this value.
    pub eta: f64,
    pub max_iter: usize,
    /// Detections this many dB below the strongest one are discarded.
    pub power_floor_db: f64,
    /// Largest accepted condition estimate of the selected atom set.
    pub condition_limit: f64,
}

impl Default for OmpConfig {
    fn default() -> Self {
        Self {
            eta: 0.0,
            max_iter: 100,
            power_floor_db: 10.0,
            condition_limit: 1e12,
        }
    }
}

impl OmpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidConfig("eta must be non-negative"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1"));
        }
        if !(self.condition_limit > 1.0) {
            return Err(Error::InvalidConfig("condition limit must exceed one"));
        }
        if self.power_floor_db.is_nan() {
            return Err(Error::InvalidConfig("power floor must be a number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ResidualThreshold,
    IterationLimit,
    /// No remaining atom correlates with the residual.
    NoCorrelation,
    /// Every atom has been selected.
    Exhausted,
    /// The newest atom made the selected set numerically rank deficient; it
    /// was dropped.
    IllConditioned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Iteration (from 1) in which the atom was selected.
    pub iteration: usize,
    pub atom: usize,
    pub meta: AtomMeta,
    /// Jointly refitted gains, one per snapshot.
    pub gains: Vec<Complex64>,
    /// Weighted power `‖h‖² / T²`.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageEstimate {
    pub detections: Vec<Detection>,
    /// Squared residual norm of the input.
    pub initial_norm: f64,
    /// Squared residual norm after each iteration.
    pub residual_norms: Vec<f64>,
    pub stop: StopReason,
}

/// `Y − Σ_k h_k q_kᵀ` for an unfolded measurement `Y` of shape `T × NML`.
pub fn residual(
    y_unfolded: &ComplexMatrix,
    atoms: &[&[Complex64]],
    gains: &[Vec<Complex64>],
) -> Result<ComplexMatrix> {
    check_len("gain vectors", atoms.len(), gains.len())?;
    let (rows, cols) = (y_unfolded.rows(), y_unfolded.cols());
    for (q, h) in atoms.iter().zip(gains) {
        check_len("atom", cols, q.len())?;
        check_len("gains", rows, h.len())?;
    }
    let mut data = y_unfolded.data().to_vec();
    for (row, chunk) in data.chunks_exact_mut(cols.max(1)).enumerate() {
        for (q, h) in atoms.iter().zip(gains) {
            let ht = h[row];
            for (r, qv) in chunk.iter_mut().zip(q.iter()) {
                *r -= ht * qv;
            }
        }
    }
    ComplexMatrix::new(rows, cols, data)
}

/// Residual energy removed by fitting atom `q` alone: `‖R q*‖² / ‖q‖²`.
fn score(res: &ComplexMatrix, q: &[Complex64], q_norm: f64) -> f64 {
    let cols = res.cols();
    let mut total = 0.0;
    for t in 0..res.rows() {
        let row = &res.data()[t * cols..(t + 1) * cols];
        let v: Complex64 = row.iter().zip(q).map(|(r, qv)| r * qv.conj()).sum();
        total += v.norm_sqr();
    }
    total / q_norm
}

/// Incremental QR factorization `A = U R` of the selected atoms.
struct IncrementalQr {
    basis: Vec<Vec<Complex64>>,
    /// Column `j` of `R` holds `j + 1` entries.
    r: Vec<Vec<Complex64>>,
}

impl IncrementalQr {
    fn new() -> Self {
        Self {
            basis: Vec::new(),
            r: Vec::new(),
        }
    }

    /// Orthogonalizes `q` against the basis with two Gram-Schmidt passes.
    /// Leaves the factorization untouched and returns `None` if the diagonal
    /// ratio of `R` would exceed `limit`.
    fn try_push(&mut self, q: &[Complex64], limit: f64) -> Option<()> {
        let mut v = q.to_vec();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.basis.len() + 1];
        for _ in 0..2 {
            for (j, u) in self.basis.iter().enumerate() {
                let c: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
                coeffs[j] += c;
            }
        }
        let norm = math::sqrt(norm_sqr(&v));
        let mut max = norm;
        let mut min = norm;
        for col in &self.r {
            let d = col[col.len() - 1].norm();
            max = max.max(d);
            min = min.min(d);
        }
        if !(min > 0.0) || max / min > limit {
            return None;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        coeffs[self.basis.len()] = Complex64::new(norm, 0.0);
        self.basis.push(v);
        self.r.push(coeffs);
        Some(())
    }

    /// Solves `R x = rhs` by back substitution.
    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let k = self.r.len();
        let mut x = vec![Complex64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut acc = rhs[i];
            for j in i + 1..k {
                acc -= self.r[j][i] * x[j];
            }
            x[i] = acc / self.r[i][i];
        }
        x
    }
}

/// Greedy sparse decomposition of `y` over `dict`.
pub fn image(y: &ComplexTensor4, dict: &Dictionary, config: &OmpConfig) -> Result<ImageEstimate> {
    config.validate()?;
    let dims = y.dims();
    check_len("tensor N", dict.shape().0, dims.n)?;
    check_len("tensor M", dict.shape().1, dims.m)?;
    check_len("tensor L", dict.shape().2, dims.l)?;

    let y4 = y.unfold(Mode::Four);
    let t_len = dims.t;
    let cols = y4.cols();
    let norms: Vec<f64> = dict.atoms().map(norm_sqr).collect();
    let mut res = y4.clone();
    let initial_norm = norm_sqr(res.data());
    let mut residual_norms = Vec::new();
    let mut selected: Vec<usize> = Vec::new();
    let mut is_selected = vec![false; dict.len()];
    let mut qr = IncrementalQr::new();
    // Projections Uᴴ y_t of every snapshot onto the orthonormal basis.
    let mut projections: Vec<Vec<Complex64>> = vec![Vec::new(); t_len];
    let mut gains: Vec<Vec<Complex64>> = Vec::new();

    let mut stop = StopReason::IterationLimit;
    if initial_norm <= config.eta {
        stop = StopReason::ResidualThreshold;
    } else {
        for _ in 0..config.max_iter {
            if selected.len() == dict.len() {
                stop = StopReason::Exhausted;
                break;
            }
            let mut best: Option<(usize, f64)> = None;
            for (k, q) in dict.atoms().enumerate() {
                if is_selected[k] || norms[k] == 0.0 {
                    continue;
                }
                let s = score(&res, q, norms[k]);
                if best.map_or(true, |(_, b)| s > b) {
                    best = Some((k, s));
                }
            }
            let k = match best {
                Some((k, s)) if s > 0.0 => k,
                _ => {
                    stop = StopReason::NoCorrelation;
                    break;
                }
            };
            if qr.try_push(dict.atom(k), config.condition_limit).is_none() {
                stop = StopReason::IllConditioned;
                break;
            }
            selected.push(k);
            is_selected[k] = true;

            let u = qr.basis.last().expect("basis was just extended");
            for (t, proj) in projections.iter_mut().enumerate() {
                let row = &y4.data()[t * cols..(t + 1) * cols];
                proj.push(u.iter().zip(row).map(|(a, b)| a.conj() * b).sum());
            }
            // gains[j][t] is the refitted gain of atom j at snapshot t.
            gains = vec![vec![Complex64::new(0.0, 0.0); t_len]; selected.len()];
            for (t, proj) in projections.iter().enumerate() {
                for (j, x) in qr.solve(proj).into_iter().enumerate() {
                    gains[j][t] = x;
                }
            }
            let atoms: Vec<&[Complex64]> = selected.iter().map(|&j| dict.atom(j)).collect();
            res = residual(&y4, &atoms, &gains)?;
            let norm = norm_sqr(res.data());
            residual_norms.push(norm);
            if norm <= config.eta {
                stop = StopReason::ResidualThreshold;
                break;
            }
        }
    }

    let t2 = (t_len * t_len) as f64;
    let detections = selected
        .iter()
        .zip(gains)
        .enumerate()
        .map(|(i, (&atom, h))| Detection {
            iteration: i + 1,
            atom,
            meta: *dict.meta(atom),
            power: norm_sqr(&h) / t2,
            gains: h,
        })
        .collect();
    Ok(ImageEstimate {
        detections,
        initial_norm,
        residual_norms,
        stop,
    })
}

/// A surviving detection in Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint {
    pub detection: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub power: f64,
}

/// Summed power of all surviving detections sharing one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularPoint {
    pub azimuth: f64,
    pub elevation: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Projections {
    pub cartesian: Vec<CartesianPoint>,
    pub angular: Vec<AngularPoint>,
}

/// Drops detections more than `power_floor_db` below the strongest one and
/// projects the rest onto Cartesian and angular coordinates. Detections with
/// bit-identical directions are merged in the angular output.
pub fn threshold_and_project(est: &ImageEstimate, power_floor_db: f64) -> Projections {
    let peak = est
        .detections
        .iter()
        .map(|d| d.power)
        .fold(f64::NEG_INFINITY, f64::max);
    if est.detections.is_empty() {
        return Projections::default();
    }
    let floor = peak * math::powf(10.0, -power_floor_db / 10.0);
    let mut out = Projections::default();
    for (i, d) in est.detections.iter().enumerate() {
        if d.power < floor {
            continue;
        }
        let target = crate::model::direction(d.meta.azimuth, d.meta.elevation);
        out.cartesian.push(CartesianPoint {
            detection: i,
            x: d.meta.range * target[0],
            y: d.meta.range * target[1],
            z: d.meta.range * target[2],
            power: d.power,
        });
        let key = (d.meta.azimuth.to_bits(), d.meta.elevation.to_bits());
        match out
            .angular
            .iter_mut()
            .find(|a| (a.azimuth.to_bits(), a.elevation.to_bits()) == key)
        {
            Some(a) => a.power += d.power,
            None => out.angular.push(AngularPoint {
                azimuth: d.meta.azimuth,
                elevation: d.meta.elevation,
                power: d.power,
            }),
        }
    }
    out
}

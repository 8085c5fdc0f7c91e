//! Positionwise rank-1 CPD by alternating least squares, used as the
//! comparison baseline and for broadside compensation.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::{norm_sqr, outer, ComplexTensor4};

/// Default stopping threshold on the change of the relative residual.
pub const DEFAULT_CPD_TOL: f64 = 1e-10;
/// Default sweep budget.
pub const DEFAULT_CPD_MAX_ITER: usize = 500;

/// Rank-1 approximation `tx ∘ rx ∘ freq ∘ gain` of a four-way array.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Cpd {
    pub tx: Vec<Complex64>,
    pub rx: Vec<Complex64>,
    pub freq: Vec<Complex64>,
    pub gain: Vec<Complex64>,
    /// Relative squared residual `‖Y − Ŷ‖² / ‖Y‖²` after each sweep.
    pub residuals: Vec<f64>,
    /// Set when the input tensor is identically zero; all factors are zero.
    pub degenerate: bool,
}

impl Rank1Cpd {
    pub fn reconstruct(&self) -> Result<ComplexTensor4> {
        outer(&self.tx, &self.rx, &self.freq, &self.gain)
    }

    /// Vectorized `tx ∘ rx ∘ freq` in mode-4 column order.
    pub fn atom(&self) -> Vec<Complex64> {
        let mut atom = Vec::with_capacity(self.tx.len() * self.rx.len() * self.freq.len());
        for &f in &self.freq {
            for &r in &self.rx {
                let fr = f * r;
                atom.extend(self.tx.iter().map(|&t| t * fr));
            }
        }
        atom
    }

    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }
}

/// Complex-valued t-average: per snapshot, the mean absolute real part plus
/// `j` times the mean absolute imaginary part over all `(n, m, ℓ)`.
pub fn snapshot_average(y: &ComplexTensor4) -> Vec<Complex64> {
    let d = y.dims();
    let count = (d.n * d.m * d.l) as f64;
    let mut acc = vec![Complex64::new(0.0, 0.0); d.t];
    for fiber in y.data().chunks_exact(d.t) {
        for (a, z) in acc.iter_mut().zip(fiber) {
            a.re += z.re.abs();
            a.im += z.im.abs();
        }
    }
    for a in &mut acc {
        *a /= count;
    }
    acc
}

/// Scales `v` to squared norm `len(v)` with a real non-negative first entry;
/// returns the applied factor, or `None` for a zero vector.
pub(crate) fn canonical_scale(v: &mut [Complex64]) -> Option<Complex64> {
    let norm = math::sqrt(norm_sqr(v));
    if norm == 0.0 {
        return None;
    }
    let phase = if v[0].norm_sqr() > 0.0 {
        math::cis(-v[0].arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let kappa = phase * (math::sqrt(v.len() as f64) / norm);
    for z in v.iter_mut() {
        *z *= kappa;
    }
    v[0] = Complex64::new(v[0].re, 0.0);
    Some(kappa)
}

/// Fits a rank-1 CPD with ALS, initialized with unit factors and the
/// t-average gain, then rescales `tx`, `rx` and `freq` to norms `√N`, `√M`,
/// `√L` with real leading entries; `gain` absorbs the scaling.
pub fn rank1_cpd(y: &ComplexTensor4, tol: f64, max_iter: usize) -> Result<Rank1Cpd> {
    if max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be at least 1"));
    }
    let d = y.dims();
    let zero = Complex64::new(0.0, 0.0);
    let y_norm = y.norm_sqr();
    if y_norm == 0.0 {
        return Ok(Rank1Cpd {
            tx: vec![zero; d.n],
            rx: vec![zero; d.m],
            freq: vec![zero; d.l],
            gain: vec![zero; d.t],
            residuals: Vec::new(),
            degenerate: true,
        });
    }

    let one = Complex64::new(1.0, 0.0);
    let mut a = vec![one; d.n];
    let mut b = vec![one; d.m];
    let mut c = vec![one; d.l];
    let mut g = snapshot_average(y);
    if norm_sqr(&g) == 0.0 {
        g = vec![one; d.t];
    }

    let data = y.data();
    // z[n, m, ℓ] = Σ_t Y[n, m, ℓ, t] conj(g[t])
    let mut z = vec![zero; d.n * d.m * d.l];
    let project = |g: &[Complex64], z: &mut [Complex64]| {
        for (zi, fiber) in z.iter_mut().zip(data.chunks_exact(d.t)) {
            *zi = fiber.iter().zip(g).map(|(y, h)| y * h.conj()).sum();
        }
    };
    project(&g, &mut z);

    let mut residuals = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..max_iter {
        let gg = norm_sqr(&g);

        let scale = norm_sqr(&b) * norm_sqr(&c) * gg;
        for (n, an) in a.iter_mut().enumerate() {
            let mut acc = zero;
            for (m, bm) in b.iter().enumerate() {
                let row = &z[(n * d.m + m) * d.l..(n * d.m + m + 1) * d.l];
                let s: Complex64 = row.iter().zip(&c).map(|(zv, cl)| zv * cl.conj()).sum();
                acc += bm.conj() * s;
            }
            if scale > 0.0 {
                *an = acc / scale;
            }
        }

        let scale = norm_sqr(&a) * norm_sqr(&c) * gg;
        for (m, bm) in b.iter_mut().enumerate() {
            let mut acc = zero;
            for (n, an) in a.iter().enumerate() {
                let row = &z[(n * d.m + m) * d.l..(n * d.m + m + 1) * d.l];
                let s: Complex64 = row.iter().zip(&c).map(|(zv, cl)| zv * cl.conj()).sum();
                acc += an.conj() * s;
            }
            if scale > 0.0 {
                *bm = acc / scale;
            }
        }

        let scale = norm_sqr(&a) * norm_sqr(&b) * gg;
        let mut acc = vec![zero; d.l];
        for (n, an) in a.iter().enumerate() {
            for (m, bm) in b.iter().enumerate() {
                let w = (an * bm).conj();
                let row = &z[(n * d.m + m) * d.l..(n * d.m + m + 1) * d.l];
                for (ac, zv) in acc.iter_mut().zip(row) {
                    *ac += w * zv;
                }
            }
        }
        if scale > 0.0 {
            for (cl, ac) in c.iter_mut().zip(&acc) {
                *cl = ac / scale;
            }
        }

        let scale = norm_sqr(&a) * norm_sqr(&b) * norm_sqr(&c);
        let mut w = vec![zero; d.t];
        for n in 0..d.n {
            for m in 0..d.m {
                let ab = (a[n] * b[m]).conj();
                for l in 0..d.l {
                    let coef = ab * c[l].conj();
                    let fiber = y.fiber(n, m, l);
                    for (wt, yv) in w.iter_mut().zip(fiber) {
                        *wt += coef * yv;
                    }
                }
            }
        }
        if scale > 0.0 {
            for (gt, wt) in g.iter_mut().zip(&w) {
                *gt = wt / scale;
            }
        }
        project(&g, &mut z);

        // After the exact gain update the residual is ‖Y‖² − ‖w‖² / scale.
        let cost = if scale > 0.0 {
            ((y_norm - norm_sqr(&w) / scale) / y_norm).max(0.0)
        } else {
            1.0
        };
        residuals.push(cost);
        if (prev - cost).abs() < tol {
            break;
        }
        prev = cost;
    }

    let mut kappa = Complex64::new(1.0, 0.0);
    for v in [&mut a, &mut b, &mut c] {
        if let Some(k) = canonical_scale(v) {
            kappa *= k;
        }
    }
    for gt in &mut g {
        *gt /= kappa;
    }

    Ok(Rank1Cpd {
        tx: a,
        rx: b,
        freq: c,
        gain: g,
        residuals,
        degenerate: false,
    })
}

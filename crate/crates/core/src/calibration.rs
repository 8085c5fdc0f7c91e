//! Block coordinate descent for the jointly parameterized calibration model.
//!
//! Every block update is the exact minimizer of the squared fitting error
//! with the other blocks held fixed, so the cost never increases. The
//! rescaling step only redistributes scale between factors and leaves the
//! reconstruction unchanged.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::math;
use crate::model::{synthesize, PositionParams, SharedParams, TargetPosition, DEFAULT_EPSILON};
use crate::tensor::{norm_sqr, ComplexTensor4, Dims};

/// Measured tensors of a calibration grid with their known positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    tensors: Vec<ComplexTensor4>,
    positions: Vec<TargetPosition>,
}

impl CalibrationSet {
    pub fn new(tensors: Vec<ComplexTensor4>, positions: Vec<TargetPosition>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Empty("calibration set"));
        }
        check_len("calibration positions", tensors.len(), positions.len())?;
        let dims = tensors[0].dims();
        for t in &tensors {
            if t.dims() != dims {
                return Err(Error::ShapeMismatch {
                    what: "calibration tensor",
                    expected: dims.len(),
                    found: t.dims().len(),
                });
            }
        }
        Ok(Self { tensors, positions })
    }

    pub fn dims(&self) -> Dims {
        self.tensors[0].dims()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensors(&self) -> &[ComplexTensor4] {
        &self.tensors
    }

    pub fn positions(&self) -> &[TargetPosition] {
        &self.positions
    }

    pub fn total_energy(&self) -> f64 {
        math::compensated_sum(self.tensors.iter().map(ComplexTensor4::norm_sqr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcdConfig {
    /// Lower bound on the magnitude responses.
    pub epsilon: f64,
    /// Stop once the relative cost decreases by no more than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Requests a fixed reduction order. The solver in this crate is serial,
    /// so every run is reproducible bit for bit regardless of this flag; it
    /// is carried for callers that parallelize around the solver.
    pub deterministic: bool,
}

impl Default for BcdConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            tol: 1e-6,
            max_iter: 500,
            deterministic: true,
        }
    }
}

impl BcdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidConfig("epsilon must lie in (0, 1]"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidConfig("tolerance must be non-negative"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// The seven steps of one descent iteration, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    TxSteering,
    RxSteering,
    Phase,
    TxMagnitude,
    RxMagnitude,
    Gain,
    Rescale,
}

impl Block {
    pub const ALL: [Block; 7] = [
        Block::TxSteering,
        Block::RxSteering,
        Block::Phase,
        Block::TxMagnitude,
        Block::RxMagnitude,
        Block::Gain,
        Block::Rescale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::TxSteering => "a_tx",
            Block::RxSteering => "a_rx",
            Block::Phase => "c",
            Block::TxMagnitude => "g_tx",
            Block::RxMagnitude => "g_rx",
            Block::Gain => "h",
            Block::Rescale => "rescale",
        }
    }
}

/// Relative costs recorded during one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Relative cost after the full iteration.
    pub cost: f64,
    /// Relative cost after each block, indexed like [`Block::ALL`].
    pub block_costs: [f64; 7],
}

/// Counters for guarded updates and flagged positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Scalars left at their previous value because of a zero denominator,
    /// indexed like the first six entries of [`Block::ALL`].
    pub guarded: [usize; 6],
    /// Positions whose data is identically zero; they take no part in the fit.
    pub excluded: Vec<usize>,
    /// Positions whose steering vector vanished during rescaling.
    pub degenerate_steering: Vec<usize>,
}

/// Descent iterate together with the cached gain projections
/// `z_p[n, m, ℓ] = Σ_t conj(h_p[t]) Y_p[n, m, ℓ, t]`.
#[derive(Debug, Clone)]
pub struct BcdState {
    shared: SharedParams,
    positions: Vec<PositionParams>,
    projected: Vec<Vec<Complex64>>,
    active: Vec<bool>,
    energies: Vec<f64>,
    epsilon: f64,
}

fn project_gain(y: &ComplexTensor4, h: &[Complex64], out: &mut [Complex64]) {
    let t = y.dims().t;
    for (zi, fiber) in out.iter_mut().zip(y.data().chunks_exact(t)) {
        *zi = fiber.iter().zip(h).map(|(yv, hv)| yv * hv.conj()).sum();
    }
}

fn snapshot_average(y: &ComplexTensor4) -> Vec<Complex64> {
    crate::cpd::snapshot_average(y)
}

impl BcdState {
    /// Starts from unit steering, magnitudes and phases with the t-average
    /// gain.
    pub fn initialize(data: &CalibrationSet, epsilon: f64) -> Result<Self> {
        let d = data.dims();
        let positions = data
            .tensors()
            .iter()
            .map(|y| {
                let mut p = PositionParams::ones(d.n, d.m, d.l, d.t);
                p.h = snapshot_average(y);
                p
            })
            .collect();
        Self::from_params(data, SharedParams::ones(d.l, d.n, d.m), positions, epsilon)
    }

    /// Wraps an arbitrary iterate; the projection cache is computed here.
    pub fn from_params(
        data: &CalibrationSet,
        shared: SharedParams,
        positions: Vec<PositionParams>,
        epsilon: f64,
    ) -> Result<Self> {
        let d = data.dims();
        check_len("position parameters", data.len(), positions.len())?;
        check_len("g_tx bins", d.l, shared.num_bins())?;
        check_len("g_tx columns", d.n, shared.num_tx())?;
        check_len("g_rx columns", d.m, shared.num_rx())?;
        for p in &positions {
            if p.dims() != d {
                return Err(Error::ShapeMismatch {
                    what: "position parameters",
                    expected: d.len(),
                    found: p.dims().len(),
                });
            }
        }
        let energies: Vec<f64> = data
            .tensors()
            .iter()
            .map(ComplexTensor4::norm_sqr)
            .collect();
        if energies.iter().all(|&e| e == 0.0) {
            return Err(Error::ZeroSignal("calibration data"));
        }
        let active = energies.iter().map(|&e| e > 0.0).collect();
        let projected = data
            .tensors()
            .iter()
            .zip(&positions)
            .map(|(y, p)| {
                let mut z = vec![Complex64::new(0.0, 0.0); d.n * d.m * d.l];
                project_gain(y, &p.h, &mut z);
                z
            })
            .collect();
        Ok(Self {
            shared,
            positions,
            projected,
            active,
            energies,
            epsilon,
        })
    }

    pub fn shared(&self) -> &SharedParams {
        &self.shared
    }

    pub fn positions(&self) -> &[PositionParams] {
        &self.positions
    }

    pub fn is_active(&self, p: usize) -> bool {
        self.active[p]
    }

    pub fn into_parts(self) -> (SharedParams, Vec<PositionParams>) {
        (self.shared, self.positions)
    }

    fn dims(&self) -> Dims {
        self.positions[0].dims()
    }

    /// `‖Y‖² − 2 Re Σ conj(s) z + ‖h‖² Σ |s|²` summed over positions, with
    /// `s = a_tx a_rx g_tx g_rx c`, divided by `‖Y‖²`. Needs no pass over the
    /// data, but its absolute error is about machine epsilon, so it is only
    /// meaningful for costs well above that.
    pub fn expanded_cost(&self) -> f64 {
        let d = self.dims();
        let total = math::compensated_sum(self.energies.iter().copied());
        let per_position = self.positions.iter().enumerate().map(|(p, pos)| {
            if !self.active[p] {
                return 0.0;
            }
            let z = &self.projected[p];
            let mut cross = 0.0;
            let mut ss = 0.0;
            for n in 0..d.n {
                for m in 0..d.m {
                    let amp = pos.a_tx[n] * pos.a_rx[m];
                    let base = (n * d.m + m) * d.l;
                    for l in 0..d.l {
                        let s = amp * pos.c[l] * (self.shared.g_tx(l, n) * self.shared.g_rx(l, m));
                        cross += (s.conj() * z[base + l]).re;
                        ss += s.norm_sqr();
                    }
                }
            }
            self.energies[p] - 2.0 * cross + norm_sqr(&pos.h) * ss
        });
        (math::compensated_sum(per_position) / total).max(0.0)
    }

    /// Exact relative cost `Σ_p ‖Y_p − Ŷ_p‖² / Σ_p ‖Y_p‖²` of the iterate,
    /// accumulated fibre by fibre without forming `Ŷ_p`.
    pub fn exact_cost(&self, data: &CalibrationSet) -> f64 {
        let d = self.dims();
        let total = math::compensated_sum(self.energies.iter().copied());
        let per_position = data.tensors().iter().enumerate().map(|(p, y)| {
            if !self.active[p] {
                return 0.0;
            }
            let pos = &self.positions[p];
            let mut fibres = Vec::with_capacity(d.n * d.m * d.l);
            let mut chunks = y.data().chunks_exact(d.t);
            for n in 0..d.n {
                for m in 0..d.m {
                    let amp = pos.a_tx[n] * pos.a_rx[m];
                    for l in 0..d.l {
                        let s = amp * pos.c[l] * (self.shared.g_tx(l, n) * self.shared.g_rx(l, m));
                        let fibre = chunks.next().expect("fibre count matches dimensions");
                        fibres.push(
                            fibre
                                .iter()
                                .zip(&pos.h)
                                .map(|(yv, hv)| (yv - s * hv).norm_sqr())
                                .sum::<f64>(),
                        );
                    }
                }
            }
            math::compensated_sum(fibres)
        });
        math::compensated_sum(per_position) / total
    }

    fn active_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.positions.len()).filter(move |&p| self.active[p])
    }
}

/// Default initialization with `ε` at its default value.
pub fn initialize(data: &CalibrationSet) -> Result<BcdState> {
    BcdState::initialize(data, DEFAULT_EPSILON)
}

/// Exact relative fitting error `Σ_p ‖Y_p − Ŷ_p‖² / Σ_p ‖Y_p‖²`.
pub fn normalized_cost(
    data: &CalibrationSet,
    shared: &SharedParams,
    positions: &[PositionParams],
) -> Result<f64> {
    check_len("position parameters", data.len(), positions.len())?;
    let total = data.total_energy();
    if total == 0.0 {
        return Err(Error::ZeroSignal("calibration data"));
    }
    let mut residuals = Vec::with_capacity(data.len());
    for (y, pos) in data.tensors().iter().zip(positions) {
        let model = synthesize(shared, pos)?;
        check_len("model tensor", y.dims().len(), model.dims().len())?;
        residuals.push(math::compensated_sum(
            y.data()
                .iter()
                .zip(model.data())
                .map(|(a, b)| (a - b).norm_sqr()),
        ));
    }
    Ok(math::compensated_sum(residuals) / total)
}

/// Least-squares update of every transmit steering vector. Returns the number
/// of guarded entries.
pub fn update_a_tx(state: &mut BcdState) -> usize {
    let d = state.dims();
    let mut guarded = 0;
    for p in 0..state.positions.len() {
        if !state.active[p] {
            continue;
        }
        let pos = &state.positions[p];
        let z = &state.projected[p];
        let hh = norm_sqr(&pos.h);
        let mut updated = pos.a_tx.clone();
        for (n, a) in updated.iter_mut().enumerate() {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for m in 0..d.m {
                let base = (n * d.m + m) * d.l;
                let mut acc = Complex64::new(0.0, 0.0);
                let mut bb = 0.0;
                for l in 0..d.l {
                    let b = pos.c[l] * (state.shared.g_tx(l, n) * state.shared.g_rx(l, m));
                    acc += b.conj() * z[base + l];
                    bb += b.norm_sqr();
                }
                num += pos.a_rx[m].conj() * acc;
                den += pos.a_rx[m].norm_sqr() * bb;
            }
            let den = den * hh;
            if den > 0.0 && den.is_finite() {
                *a = num / den;
            } else {
                guarded += 1;
            }
        }
        state.positions[p].a_tx = updated;
    }
    guarded
}

/// Least-squares update of every receive steering vector.
pub fn update_a_rx(state: &mut BcdState) -> usize {
    let d = state.dims();
    let mut guarded = 0;
    for p in 0..state.positions.len() {
        if !state.active[p] {
            continue;
        }
        let pos = &state.positions[p];
        let z = &state.projected[p];
        let hh = norm_sqr(&pos.h);
        let mut updated = pos.a_rx.clone();
        for (m, a) in updated.iter_mut().enumerate() {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for n in 0..d.n {
                let base = (n * d.m + m) * d.l;
                let mut acc = Complex64::new(0.0, 0.0);
                let mut bb = 0.0;
                for l in 0..d.l {
                    let b = pos.c[l] * (state.shared.g_tx(l, n) * state.shared.g_rx(l, m));
                    acc += b.conj() * z[base + l];
                    bb += b.norm_sqr();
                }
                num += pos.a_tx[n].conj() * acc;
                den += pos.a_tx[n].norm_sqr() * bb;
            }
            let den = den * hh;
            if den > 0.0 && den.is_finite() {
                *a = num / den;
            } else {
                guarded += 1;
            }
        }
        state.positions[p].a_rx = updated;
    }
    guarded
}

/// Unit-modulus phase update: `c[ℓ] = exp(j arg S[ℓ])`.
pub fn update_c(state: &mut BcdState) -> usize {
    let d = state.dims();
    let mut guarded = 0;
    for p in 0..state.positions.len() {
        if !state.active[p] {
            continue;
        }
        let pos = &state.positions[p];
        let z = &state.projected[p];
        let mut s = vec![Complex64::new(0.0, 0.0); d.l];
        for n in 0..d.n {
            for m in 0..d.m {
                let w = (pos.a_tx[n] * pos.a_rx[m]).conj();
                let base = (n * d.m + m) * d.l;
                for (l, sl) in s.iter_mut().enumerate() {
                    *sl += w * (state.shared.g_tx(l, n) * state.shared.g_rx(l, m)) * z[base + l];
                }
            }
        }
        let c = &mut state.positions[p].c;
        for (cl, sl) in c.iter_mut().zip(&s) {
            if sl.norm_sqr() > 0.0 && sl.re.is_finite() && sl.im.is_finite() {
                *cl = math::cis(sl.arg());
            } else {
                guarded += 1;
            }
        }
    }
    guarded
}

/// Joint least-squares update of the transmit magnitudes, clipped to
/// `[ε, 1]`. The reference column stays fixed at one.
pub fn update_g_tx(state: &mut BcdState) -> usize {
    let d = state.dims();
    let mut num = vec![0.0; d.l * d.n];
    let mut den = vec![0.0; d.l * d.n];
    for p in state.active_positions() {
        let pos = &state.positions[p];
        let z = &state.projected[p];
        let hh = norm_sqr(&pos.h);
        for n in 1..d.n {
            for m in 0..d.m {
                let w = (pos.a_tx[n] * pos.a_rx[m]).conj();
                let ww = pos.a_tx[n].norm_sqr() * pos.a_rx[m].norm_sqr() * hh;
                let base = (n * d.m + m) * d.l;
                for l in 0..d.l {
                    let gr = state.shared.g_rx(l, m);
                    num[l * d.n + n] += (w * pos.c[l].conj() * z[base + l]).re * gr;
                    den[l * d.n + n] += ww * pos.c[l].norm_sqr() * gr * gr;
                }
            }
        }
    }
    let mut guarded = 0;
    for l in 0..d.l {
        for n in 1..d.n {
            let (nu, de) = (num[l * d.n + n], den[l * d.n + n]);
            if de > 0.0 && de.is_finite() {
                state
                    .shared
                    .set_g_tx(l, n, (nu / de).clamp(state.epsilon, 1.0));
            } else {
                guarded += 1;
            }
        }
    }
    guarded
}

/// Joint least-squares update of the receive magnitudes, clipped to
/// `[ε, 1]`.
pub fn update_g_rx(state: &mut BcdState) -> usize {
    let d = state.dims();
    let mut num = vec![0.0; d.l * d.m];
    let mut den = vec![0.0; d.l * d.m];
    for p in state.active_positions() {
        let pos = &state.positions[p];
        let z = &state.projected[p];
        let hh = norm_sqr(&pos.h);
        for n in 0..d.n {
            for m in 0..d.m {
                let w = (pos.a_tx[n] * pos.a_rx[m]).conj();
                let ww = pos.a_tx[n].norm_sqr() * pos.a_rx[m].norm_sqr() * hh;
                let base = (n * d.m + m) * d.l;
                for l in 0..d.l {
                    let gt = state.shared.g_tx(l, n);
                    num[l * d.m + m] += (w * pos.c[l].conj() * z[base + l]).re * gt;
                    den[l * d.m + m] += ww * pos.c[l].norm_sqr() * gt * gt;
                }
            }
        }
    }
    let mut guarded = 0;
    for l in 0..d.l {
        for m in 0..d.m {
            let (nu, de) = (num[l * d.m + m], den[l * d.m + m]);
            if de > 0.0 && de.is_finite() {
                state
                    .shared
                    .set_g_rx(l, m, (nu / de).clamp(state.epsilon, 1.0));
            } else {
                guarded += 1;
            }
        }
    }
    guarded
}

/// Least-squares update of the pulse gains followed by a refresh of the
/// projection cache. Returns the guarded count and the exact residual energy
/// of the new iterate, both accumulated in the refresh pass.
fn update_h_exact(data: &CalibrationSet, state: &mut BcdState) -> (usize, f64) {
    let d = state.dims();
    let mut guarded = 0;
    let mut residuals = Vec::with_capacity(data.len());
    let mut s = vec![Complex64::new(0.0, 0.0); d.n * d.m * d.l];
    for (p, y) in data.tensors().iter().enumerate() {
        if !state.active[p] {
            residuals.push(0.0);
            continue;
        }
        let pos = &state.positions[p];
        for n in 0..d.n {
            for m in 0..d.m {
                let amp = pos.a_tx[n] * pos.a_rx[m];
                let base = (n * d.m + m) * d.l;
                for l in 0..d.l {
                    s[base + l] =
                        amp * pos.c[l] * (state.shared.g_tx(l, n) * state.shared.g_rx(l, m));
                }
            }
        }
        let ss = norm_sqr(&s);
        let mut w = vec![Complex64::new(0.0, 0.0); d.t];
        for (si, fiber) in s.iter().zip(y.data().chunks_exact(d.t)) {
            let sc = si.conj();
            for (wt, yv) in w.iter_mut().zip(fiber) {
                *wt += sc * yv;
            }
        }
        let h = &mut state.positions[p].h;
        if ss > 0.0 && ss.is_finite() {
            for (ht, wt) in h.iter_mut().zip(&w) {
                *ht = wt / ss;
            }
        } else {
            guarded += d.t;
        }
        let z = &mut state.projected[p];
        let mut res = Vec::with_capacity(z.len());
        for ((zi, si), fiber) in z.iter_mut().zip(&s).zip(y.data().chunks_exact(d.t)) {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut r = 0.0;
            for (yv, hv) in fiber.iter().zip(h.iter()) {
                acc += yv * hv.conj();
                r += (yv - si * hv).norm_sqr();
            }
            *zi = acc;
            res.push(r);
        }
        residuals.push(math::compensated_sum(res));
    }
    (guarded, math::compensated_sum(residuals))
}

/// Least-squares update of the pulse gains of every position.
pub fn update_h(data: &CalibrationSet, state: &mut BcdState) -> usize {
    update_h_exact(data, state).0
}

/// Redistributes scale so that the magnitude columns peak at one, the
/// steering vectors have norms `√N`, `√M` with real non-negative leading
/// entries and `c[0] = 1`; the pulse gains absorb the remainder. Returns the
/// positions whose steering vector is zero; those keep their steering scale.
pub fn rescale(state: &mut BcdState) -> Vec<usize> {
    let (kappas, flagged) = rescale_params(&mut state.shared, &mut state.positions);
    for (z, kappa) in state.projected.iter_mut().zip(kappas) {
        let zk = (Complex64::new(1.0, 0.0) / kappa).conj();
        for zi in z.iter_mut() {
            *zi *= zk;
        }
    }
    flagged.into_iter().filter(|&p| state.active[p]).collect()
}

/// Brings a parameter set into canonical form: the transmit reference column
/// is moved into the receive responses and the scaling of [`rescale`] is
/// applied. The synthesized tensors are unchanged. Returns the positions with
/// a zero steering vector.
pub fn canonicalize(shared: &mut SharedParams, positions: &mut [PositionParams]) -> Vec<usize> {
    // A zero reference entry cannot be divided out; the remaining scaling
    // still applies.
    let _ = shared.normalize_reference();
    rescale_params(shared, positions).1
}

/// Returns the factor `κ` each position's gain was divided by, and the
/// positions whose steering could not be normalized.
fn rescale_params(
    shared: &mut SharedParams,
    positions: &mut [PositionParams],
) -> (Vec<Complex64>, Vec<usize>) {
    let (l_len, n_len, m_len) = (shared.num_bins(), shared.num_tx(), shared.num_rx());
    for n in 1..n_len {
        let max = (0..l_len).map(|l| shared.g_tx(l, n)).fold(0.0, f64::max);
        if !(max > 0.0) || max == 1.0 {
            continue;
        }
        for l in 0..l_len {
            let v = shared.g_tx(l, n) / max;
            shared.set_g_tx(l, n, v);
        }
        for pos in positions.iter_mut() {
            pos.a_tx[n] *= max;
        }
    }
    for m in 0..m_len {
        let max = (0..l_len).map(|l| shared.g_rx(l, m)).fold(0.0, f64::max);
        if !(max > 0.0) || max == 1.0 {
            continue;
        }
        for l in 0..l_len {
            let v = shared.g_rx(l, m) / max;
            shared.set_g_rx(l, m, v);
        }
        for pos in positions.iter_mut() {
            pos.a_rx[m] *= max;
        }
    }

    let mut kappas = Vec::with_capacity(positions.len());
    let mut flagged = Vec::new();
    for (p, pos) in positions.iter_mut().enumerate() {
        let mut kappa = Complex64::new(1.0, 0.0);
        let mut degenerate = false;
        for v in [&mut pos.a_tx, &mut pos.a_rx] {
            match crate::cpd::canonical_scale(v) {
                Some(k) => kappa *= k,
                None => degenerate = true,
            }
        }
        let c0 = pos.c[0];
        if c0.norm_sqr() > 0.0 {
            let k = c0.conj() / c0.norm();
            for c in pos.c.iter_mut() {
                *c *= k;
            }
            pos.c[0] = Complex64::new(1.0, 0.0);
            kappa *= k;
        }
        for h in pos.h.iter_mut() {
            *h /= kappa;
        }
        kappas.push(kappa);
        if degenerate {
            flagged.push(p);
        }
    }
    (kappas, flagged)
}

/// Result of a calibration run.
#[derive(Debug, Clone)]
pub struct CalibrationEstimate {
    pub shared: SharedParams,
    pub positions: Vec<PositionParams>,
    /// Exact relative cost of the initial iterate.
    pub initial_cost: f64,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

impl CalibrationEstimate {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Exact relative cost of the returned iterate.
    pub fn final_cost(&self) -> f64 {
        self.trace.last().map_or(self.initial_cost, |r| r.cost)
    }

    pub fn reconstruct(&self, p: usize) -> Result<ComplexTensor4> {
        let pos = self
            .positions
            .get(p)
            .ok_or(Error::InvalidConfig("position index out of range"))?;
        synthesize(&self.shared, pos)
    }
}

/// Runs block coordinate descent from the default initialization until the
/// relative cost stalls or the iteration budget is exhausted.
pub fn calibrate(data: &CalibrationSet, config: &BcdConfig) -> Result<CalibrationEstimate> {
    config.validate()?;
    let state = BcdState::initialize(data, config.epsilon)?;
    calibrate_from(data, state, config)
}

/// Same as [`calibrate`], starting from a caller-supplied iterate.
pub fn calibrate_from(
    data: &CalibrationSet,
    mut state: BcdState,
    config: &BcdConfig,
) -> Result<CalibrationEstimate> {
    config.validate()?;
    let total = data.total_energy();
    let initial_cost = normalized_cost(data, &state.shared, &state.positions)?;
    let mut diagnostics = Diagnostics {
        excluded: (0..data.len()).filter(|&p| !state.active[p]).collect(),
        ..Diagnostics::default()
    };

    let mut trace = Vec::new();
    let mut previous = initial_cost;
    let mut converged = false;
    for iteration in 1..=config.max_iter {
        let mut costs = [0.0; 7];
        diagnostics.guarded[0] += update_a_tx(&mut state);
        costs[0] = state.exact_cost(data);
        diagnostics.guarded[1] += update_a_rx(&mut state);
        costs[1] = state.exact_cost(data);
        diagnostics.guarded[2] += update_c(&mut state);
        costs[2] = state.exact_cost(data);
        diagnostics.guarded[3] += update_g_tx(&mut state);
        costs[3] = state.exact_cost(data);
        diagnostics.guarded[4] += update_g_rx(&mut state);
        costs[4] = state.exact_cost(data);
        let (guarded, residual) = update_h_exact(data, &mut state);
        diagnostics.guarded[5] += guarded;
        let exact = residual / total;
        costs[5] = exact;
        for p in rescale(&mut state) {
            if !diagnostics.degenerate_steering.contains(&p) {
                diagnostics.degenerate_steering.push(p);
            }
        }
        costs[6] = state.exact_cost(data);

        trace.push(IterationRecord {
            iteration,
            cost: exact,
            block_costs: costs,
        });
        if previous - exact <= config.tol {
            converged = true;
            break;
        }
        previous = exact;
    }

    let (shared, positions) = state.into_parts();
    Ok(CalibrationEstimate {
        shared,
        positions,
        initial_cost,
        trace,
        converged,
        diagnostics,
    })
}

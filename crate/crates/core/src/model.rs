//! Forward model of the MIMO array: parameter containers, tensor synthesis,
//! derived factor matrices and the analytic far-field response.
//!
//! A calibration tensor for target position `p` is
//!
//! ```text
//! Y[n, m, ℓ, t] = a_tx[n] · a_rx[m] · g_tx[ℓ, n] · g_rx[ℓ, m] · c[ℓ] · h[t]
//! ```
//!
//! where the magnitude responses `g_tx`, `g_rx` are shared by every position
//! and the remaining factors are per position.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::math;
use crate::tensor::{kron_vec, ComplexMatrix, ComplexTensor4, Dims};

/// Default lower bound ε on magnitude responses.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Real magnitude responses shared across all positions.
///
/// `g_tx` is `L × N` and `g_rx` is `L × M`, both stored row-major (`ℓ` major).
#[derive(Debug, Clone, PartialEq)]
pub struct SharedParams {
    l: usize,
    n: usize,
    m: usize,
    g_tx: Vec<f64>,
    g_rx: Vec<f64>,
}

impl SharedParams {
    pub fn new(l: usize, n: usize, m: usize, g_tx: Vec<f64>, g_rx: Vec<f64>) -> Result<Self> {
        if l == 0 || n == 0 || m == 0 {
            return Err(Error::Empty("magnitude response dimensions"));
        }
        check_len("g_tx", l * n, g_tx.len())?;
        check_len("g_rx", l * m, g_rx.len())?;
        Ok(Self {
            l,
            n,
            m,
            g_tx,
            g_rx,
        })
    }

    pub fn ones(l: usize, n: usize, m: usize) -> Self {
        Self {
            l,
            n,
            m,
            g_tx: vec![1.0; l * n],
            g_rx: vec![1.0; l * m],
        }
    }

    pub fn num_bins(&self) -> usize {
        self.l
    }

    pub fn num_tx(&self) -> usize {
        self.n
    }

    pub fn num_rx(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn g_tx(&self, l: usize, n: usize) -> f64 {
        self.g_tx[l * self.n + n]
    }

    #[inline]
    pub fn g_rx(&self, l: usize, m: usize) -> f64 {
        self.g_rx[l * self.m + m]
    }

    #[inline]
    pub fn set_g_tx(&mut self, l: usize, n: usize, value: f64) {
        self.g_tx[l * self.n + n] = value;
    }

    #[inline]
    pub fn set_g_rx(&mut self, l: usize, m: usize, value: f64) {
        self.g_rx[l * self.m + m] = value;
    }

    /// Row-major `L × N` transmit magnitude responses.
    pub fn g_tx_data(&self) -> &[f64] {
        &self.g_tx
    }

    /// Row-major `L × M` receive magnitude responses.
    pub fn g_rx_data(&self) -> &[f64] {
        &self.g_rx
    }

    pub fn tx_column(&self, n: usize) -> Vec<f64> {
        (0..self.l).map(|l| self.g_tx(l, n)).collect()
    }

    pub fn rx_column(&self, m: usize) -> Vec<f64> {
        (0..self.l).map(|l| self.g_rx(l, m)).collect()
    }

    /// `G_Tx` as a complex `L × N` matrix.
    pub fn g_tx_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.l, self.n, |l, n| Complex64::new(self.g_tx(l, n), 0.0))
    }

    /// `G_Rx` as a complex `L × M` matrix.
    pub fn g_rx_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.l, self.m, |l, m| Complex64::new(self.g_rx(l, m), 0.0))
    }

    /// Moves the transmit reference column into the receive responses so that
    /// `g_tx[:, 0] = 1`, leaving every product `g_tx[ℓ, n]·g_rx[ℓ, m]` unchanged.
    ///
    /// Returns `false` if a reference entry is zero.
    pub fn normalize_reference(&mut self) -> bool {
        for l in 0..self.l {
            let r = self.g_tx(l, 0);
            if r == 0.0 {
                return false;
            }
            for n in 0..self.n {
                let v = self.g_tx(l, n) / r;
                self.set_g_tx(l, n, v);
            }
            for m in 0..self.m {
                let v = self.g_rx(l, m) * r;
                self.set_g_rx(l, m, v);
            }
        }
        true
    }

    /// Checks `g ∈ [ε, 1]`, the all-ones reference column and the per-column
    /// max-equals-one constraint, each to within `tol`.
    pub fn satisfies_constraints(&self, epsilon: f64, tol: f64) -> bool {
        let in_box = |v: f64| v >= epsilon - tol && v <= 1.0 + tol;
        if !self.g_tx.iter().chain(&self.g_rx).all(|&v| in_box(v)) {
            return false;
        }
        if (0..self.l).any(|l| (self.g_tx(l, 0) - 1.0).abs() > tol) {
            return false;
        }
        let col_max_is_one = |col: Vec<f64>| {
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (max - 1.0).abs() <= tol
        };
        (1..self.n).all(|n| col_max_is_one(self.tx_column(n)))
            && (0..self.m).all(|m| col_max_is_one(self.rx_column(m)))
    }
}

/// Per-position factors: transmit and receive steering, phase response and
/// pulse gains.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionParams {
    pub a_tx: Vec<Complex64>,
    pub a_rx: Vec<Complex64>,
    pub c: Vec<Complex64>,
    pub h: Vec<Complex64>,
}

impl PositionParams {
    pub fn ones(n: usize, m: usize, l: usize, t: usize) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            a_tx: vec![one; n],
            a_rx: vec![one; m],
            c: vec![one; l],
            h: vec![one; t],
        }
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.a_tx.len(), self.a_rx.len(), self.c.len(), self.h.len())
    }

    /// Checks the unit-modulus phase, real leading steering entries and the
    /// steering norm constraints to within `tol`.
    pub fn satisfies_constraints(&self, tol: f64) -> bool {
        let n = self.a_tx.len() as f64;
        let m = self.a_rx.len() as f64;
        let unit_phase = self.c.iter().all(|z| (z.norm() - 1.0).abs() <= tol);
        let c0 = (self.c[0] - Complex64::new(1.0, 0.0)).norm() <= tol;
        let tx0 = self.a_tx[0].im.abs() <= tol && self.a_tx[0].re >= -tol;
        let rx0 = self.a_rx[0].im.abs() <= tol && self.a_rx[0].re >= -tol;
        let tx_norm = (crate::tensor::norm_sqr(&self.a_tx) - n).abs() <= tol * n;
        let rx_norm = (crate::tensor::norm_sqr(&self.a_rx) - m).abs() <= tol * m;
        unit_phase && c0 && tx0 && rx0 && tx_norm && rx_norm
    }
}

fn check_compatible(shared: &SharedParams, pos: &PositionParams) -> Result<()> {
    check_len("a_tx", shared.n, pos.a_tx.len())?;
    check_len("a_rx", shared.m, pos.a_rx.len())?;
    check_len("c", shared.l, pos.c.len())?;
    if pos.h.is_empty() {
        return Err(Error::Empty("h"));
    }
    Ok(())
}

/// Frequency vector `b_{n,m} = g_tx[:, n] ⊙ g_rx[:, m] ⊙ c`.
pub fn frequency_vector(
    shared: &SharedParams,
    c: &[Complex64],
    n: usize,
    m: usize,
) -> Vec<Complex64> {
    (0..shared.l)
        .map(|l| c[l] * (shared.g_tx(l, n) * shared.g_rx(l, m)))
        .collect()
}

/// Noise-free measurement tensor of a single position.
pub fn synthesize(shared: &SharedParams, pos: &PositionParams) -> Result<ComplexTensor4> {
    check_compatible(shared, pos)?;
    let dims = pos.dims();
    let mut data = Vec::with_capacity(dims.len());
    for n in 0..dims.n {
        for m in 0..dims.m {
            let amp = pos.a_tx[n] * pos.a_rx[m];
            for l in 0..dims.l {
                let s = amp * pos.c[l] * (shared.g_tx(l, n) * shared.g_rx(l, m));
                data.extend(pos.h.iter().map(|&h| s * h));
            }
        }
    }
    ComplexTensor4::new(dims, data)
}

/// Frequency matrix `B_p` (`L × NM`); column `n·M + m` is `b_{n,m}`.
pub fn frequency_matrix(shared: &SharedParams, c: &[Complex64]) -> Result<ComplexMatrix> {
    check_len("c", shared.l, c.len())?;
    Ok(ComplexMatrix::from_fn(
        shared.l,
        shared.n * shared.m,
        |l, col| {
            let (n, m) = (col / shared.m, col % shared.m);
            c[l] * (shared.g_tx(l, n) * shared.g_rx(l, m))
        },
    ))
}

/// `A_tx = diag(a_tx) ⊗ 1_Mᵀ` (`N × NM`).
pub fn tx_factor_matrix(a_tx: &[Complex64], m: usize) -> ComplexMatrix {
    let n = a_tx.len();
    ComplexMatrix::from_fn(n, n * m, |r, col| {
        if col / m == r {
            a_tx[r]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `A_rx = 1_Nᵀ ⊗ diag(a_rx)` (`M × NM`).
pub fn rx_factor_matrix(a_rx: &[Complex64], n: usize) -> ComplexMatrix {
    let m = a_rx.len();
    ComplexMatrix::from_fn(m, n * m, |r, col| {
        if col % m == r {
            a_rx[r]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `H = h 1_{NM}ᵀ` (`T × NM`).
pub fn gain_factor_matrix(h: &[Complex64], nm: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(h.len(), nm, |r, _| h[r])
}

/// Virtual-array steering vector `a_tx ⊗ a_rx`.
pub fn virtual_steering(a_tx: &[Complex64], a_rx: &[Complex64]) -> Vec<Complex64> {
    kron_vec(a_tx, a_rx)
}

/// Vectorized range-angle response `q` of one position, ordered like the
/// columns of the mode-4 unfolding (`n` fastest, then `m`, then `ℓ`).
pub fn response_atom(
    shared: &SharedParams,
    a_tx: &[Complex64],
    a_rx: &[Complex64],
    c: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len("a_tx", shared.n, a_tx.len())?;
    check_len("a_rx", shared.m, a_rx.len())?;
    check_len("c", shared.l, c.len())?;
    let mut atom = Vec::with_capacity(shared.l * shared.m * shared.n);
    for l in 0..shared.l {
        for m in 0..shared.m {
            let rx = a_rx[m] * c[l] * shared.g_rx(l, m);
            for n in 0..shared.n {
                atom.push(a_tx[n] * rx * shared.g_tx(l, n));
            }
        }
    }
    Ok(atom)
}

/// Target location in array-centred spherical coordinates.
///
/// Azimuth is measured from the z-axis toward the x-axis, elevation from the
/// z-axis toward the y-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetPosition {
    pub range: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl TargetPosition {
    pub fn new(range: f64, azimuth: f64, elevation: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(Error::InvalidConfig("target range must be positive"));
        }
        Ok(Self {
            range,
            azimuth,
            elevation,
        })
    }

    /// Unit direction `[sinϑ cosφ, sinφ, cosϑ cosφ]`.
    pub fn direction(&self) -> [f64; 3] {
        direction(self.azimuth, self.elevation)
    }

    pub fn cartesian(&self) -> [f64; 3] {
        let d = self.direction();
        [self.range * d[0], self.range * d[1], self.range * d[2]]
    }
}

pub(crate) fn direction(azimuth: f64, elevation: f64) -> [f64; 3] {
    let ce = math::cos(elevation);
    [
        math::sin(azimuth) * ce,
        math::sin(elevation),
        math::cos(azimuth) * ce,
    ]
}

/// Element positions and acquisition parameters for the analytic model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub tx_positions: Vec<[f64; 3]>,
    pub rx_positions: Vec<[f64; 3]>,
    /// Carrier frequency in Hz.
    pub f0: f64,
    /// Sampling frequency in Hz.
    pub fs: f64,
    /// Speed of sound in m/s.
    pub c_sound: f64,
    /// DFT length in samples.
    pub l_dft: usize,
}

impl ArrayGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.tx_positions.is_empty() {
            return Err(Error::Empty("transmit element list"));
        }
        if self.rx_positions.is_empty() {
            return Err(Error::Empty("receive element list"));
        }
        if !(self.f0 > 0.0 && self.fs > 0.0 && self.c_sound > 0.0) || self.l_dft == 0 {
            return Err(Error::InvalidConfig(
                "frequencies, sound speed and DFT length must be positive",
            ));
        }
        Ok(())
    }

    /// Bin spacing `Δω = 2π·f_s / L_DFT` in rad/s.
    pub fn delta_omega(&self) -> f64 {
        2.0 * math::PI * self.fs / self.l_dft as f64
    }

    /// Wave vector `k(ϑ, φ) = −2π f0 / c · [sinϑ cosφ, sinφ, cosϑ cosφ]`.
    pub fn wavevector(&self, azimuth: f64, elevation: f64) -> [f64; 3] {
        let k = -2.0 * math::PI * self.f0 / self.c_sound;
        let d = direction(azimuth, elevation);
        [k * d[0], k * d[1], k * d[2]]
    }
}

fn steering(positions: &[[f64; 3]], k: [f64; 3]) -> Vec<Complex64> {
    positions
        .iter()
        .map(|r| math::cis(-(k[0] * r[0] + k[1] * r[1] + k[2] * r[2])))
        .collect()
}

/// Single-snapshot analytic array response factors.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticResponse {
    pub tx: Vec<Complex64>,
    pub rx: Vec<Complex64>,
    pub freq: Vec<Complex64>,
}

impl AnalyticResponse {
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
}

/// Analytic steering vectors and linear frequency response of a far-field
/// point target.
pub fn analytic_response(
    geom: &ArrayGeometry,
    target: &TargetPosition,
    num_bins: usize,
) -> Result<AnalyticResponse> {
    geom.validate()?;
    if num_bins == 0 {
        return Err(Error::Empty("frequency bins"));
    }
    let k = geom.wavevector(target.azimuth, target.elevation);
    let slope = 2.0 * target.range * geom.delta_omega() / geom.c_sound;
    Ok(AnalyticResponse {
        tx: steering(&geom.tx_positions, k),
        rx: steering(&geom.rx_positions, k),
        freq: (0..num_bins)
            .map(|l| math::cis(-(l as f64) * slope))
            .collect(),
    })
}

/// Complex correction gains for the analytic model.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadsideGains {
    pub tx: Vec<Complex64>,
    pub rx: Vec<Complex64>,
    pub freq: Vec<Complex64>,
}

impl BroadsideGains {
    /// Gains from canonically scaled rank-1 factors fitted to a broadside
    /// measurement, with the analytic broadside response divided out so that
    /// the compensated broadside response equals the fitted factors.
    pub fn from_fit(
        tx: &[Complex64],
        rx: &[Complex64],
        freq: &[Complex64],
        reference: &AnalyticResponse,
    ) -> Result<Self> {
        check_len("tx gains", reference.tx.len(), tx.len())?;
        check_len("rx gains", reference.rx.len(), rx.len())?;
        check_len("frequency gains", reference.freq.len(), freq.len())?;
        let div = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x / y).collect();
        Ok(Self {
            tx: div(tx, &reference.tx),
            rx: div(rx, &reference.rx),
            freq: div(freq, &reference.freq),
        })
    }
}

/// Elementwise correction of analytic factors by broadside gains.
pub fn broadside_compensate(
    analytic: &AnalyticResponse,
    gains: &BroadsideGains,
) -> Result<AnalyticResponse> {
    use crate::tensor::hadamard_vec;
    Ok(AnalyticResponse {
        tx: hadamard_vec(&analytic.tx, &gains.tx)?,
        rx: hadamard_vec(&analytic.rx, &gains.rx)?,
        freq: hadamard_vec(&analytic.freq, &gains.freq)?,
    })
}

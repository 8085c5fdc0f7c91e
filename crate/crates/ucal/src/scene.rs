//! Geometric simulator for a transmitter line and a uniform rectangular
//! receive array with element errors and nonidentical magnitude responses.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use ucal_core::{
    analytic_response, phase_response, synthesize, ArrayGeometry, CalibrationSet, Complex64,
    ComplexTensor4, Dims, PhaseModel, PositionParams, SharedParams, TargetPosition,
};

use crate::benchmark::add_noise;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UraConfig {
    pub tx: usize,
    pub rx_rows: usize,
    pub rx_cols: usize,
    /// Receive element pitch in metres.
    pub pitch: f64,
    /// Carrier frequency in Hz.
    pub f0: f64,
    /// Sampling frequency in Hz.
    pub fs: f64,
    /// Speed of sound in m/s.
    pub c_sound: f64,
    /// DFT length in samples.
    pub l_dft: usize,
    /// Number of frequency bins kept.
    pub bins: usize,
    pub snapshots: usize,
    /// System range offset in metres.
    pub r0: f64,
    /// Magnitude response spread.
    pub delta: f64,
    /// Magnitude spread of the complex element gains.
    pub element_spread: f64,
}

impl Default for UraConfig {
    fn default() -> Self {
        Self {
            tx: 2,
            rx_rows: 4,
            rx_cols: 4,
            pitch: 0.0043,
            f0: 40_000.0,
            fs: 195_000.0,
            c_sound: 343.0,
            l_dft: 4096,
            bins: 16,
            snapshots: 4,
            r0: 0.05,
            delta: 0.3,
            element_spread: 0.3,
        }
    }
}

impl UraConfig {
    pub fn dims(&self) -> Dims {
        Dims::new(
            self.tx,
            self.rx_rows * self.rx_cols,
            self.bins,
            self.snapshots,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if [
            self.tx,
            self.rx_rows,
            self.rx_cols,
            self.l_dft,
            self.bins,
            self.snapshots,
        ]
        .contains(&0)
        {
            return Err(Error::Config(
                "array and acquisition sizes must be at least 1".into(),
            ));
        }
        if !(self.pitch > 0.0) {
            return Err(Error::Config("pitch must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.delta) || !(0.0..1.0).contains(&self.element_spread) {
            return Err(Error::Config(
                "delta and element spread must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Receivers on a centred grid in the `z = 0` plane, transmitters on a
    /// centred line along `x` spaced by the receive aperture.
    pub fn geometry(&self) -> ArrayGeometry {
        let centred =
            |i: usize, count: usize, step: f64| (i as f64 - (count as f64 - 1.0) / 2.0) * step;
        let tx_step = self.rx_cols as f64 * self.pitch;
        ArrayGeometry {
            tx_positions: (0..self.tx)
                .map(|i| [centred(i, self.tx, tx_step), 0.0, 0.0])
                .collect(),
            rx_positions: (0..self.rx_rows * self.rx_cols)
                .map(|k| {
                    [
                        centred(k % self.rx_cols, self.rx_cols, self.pitch),
                        centred(k / self.rx_cols, self.rx_rows, self.pitch),
                        0.0,
                    ]
                })
                .collect(),
            f0: self.f0,
            fs: self.fs,
            c_sound: self.c_sound,
            l_dft: self.l_dft,
        }
    }

    pub fn phase_model(&self) -> Result<PhaseModel> {
        Ok(PhaseModel::new(
            self.c_sound,
            self.geometry().delta_omega(),
            self.r0,
        )?)
    }
}

/// A simulated array instance with fixed element errors.
#[derive(Debug, Clone)]
pub struct UraSimulator {
    config: UraConfig,
    geometry: ArrayGeometry,
    model: PhaseModel,
    shared: SharedParams,
    tx_gain: Vec<Complex64>,
    rx_gain: Vec<Complex64>,
}

impl UraSimulator {
    pub fn new(config: UraConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let dims = config.dims();
        let geometry = config.geometry();
        geometry.validate()?;
        let model = config.phase_model()?;
        let mut draw = |len: usize, spread: f64| -> Vec<f64> {
            (0..len)
                .map(|_| {
                    if spread == 0.0 {
                        1.0
                    } else {
                        rng.gen_range(1.0 - spread..=1.0)
                    }
                })
                .collect()
        };
        let g_tx = draw(dims.l * dims.n, config.delta);
        let g_rx = draw(dims.l * dims.m, config.delta);
        let tx_mag = draw(dims.n, config.element_spread);
        let rx_mag = draw(dims.m, config.element_spread);
        let mut element = |mag: Vec<f64>| -> Vec<Complex64> {
            mag.into_iter()
                .map(|a| Complex64::from_polar(a, rng.gen_range(-PI..PI)))
                .collect()
        };
        let tx_gain = element(tx_mag);
        let rx_gain = element(rx_mag);
        Ok(Self {
            shared: SharedParams::new(dims.l, dims.n, dims.m, g_tx, g_rx)?,
            config,
            geometry,
            model,
            tx_gain,
            rx_gain,
        })
    }

    pub fn config(&self) -> &UraConfig {
        &self.config
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn phase_model(&self) -> &PhaseModel {
        &self.model
    }

    pub fn shared(&self) -> &SharedParams {
        &self.shared
    }

    /// True model parameters of a point target with snapshot gains `h`.
    pub fn params(&self, target: &TargetPosition, h: Vec<Complex64>) -> Result<PositionParams> {
        let analytic = analytic_response(&self.geometry, target, self.config.bins)?;
        let times =
            |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x * y).collect();
        Ok(PositionParams {
            a_tx: times(&analytic.tx, &self.tx_gain),
            a_rx: times(&analytic.rx, &self.rx_gain),
            c: phase_response(&self.model, target.range, self.config.bins),
            h,
        })
    }

    /// Noise-free echo of one point target.
    pub fn echo(&self, target: &TargetPosition, h: Vec<Complex64>) -> Result<ComplexTensor4> {
        Ok(synthesize(&self.shared, &self.params(target, h)?)?)
    }

    /// Unit-modulus snapshot gains with random phase.
    pub fn random_gains(&self, rng: &mut impl Rng) -> Vec<Complex64> {
        (0..self.config.snapshots)
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(-PI..PI)))
            .collect()
    }

    /// One measurement per target with random snapshot gains and noise at
    /// the given SNR.
    pub fn calibration_set(
        &self,
        targets: &[TargetPosition],
        snr_db: f64,
        rng: &mut impl Rng,
    ) -> Result<CalibrationSet> {
        let tensors = targets
            .iter()
            .map(|target| {
                let h = self.random_gains(rng);
                add_noise(&self.echo(target, h)?, snr_db, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CalibrationSet::new(tensors, targets.to_vec())?)
    }

    /// Superposition of point-target echoes with the given gains, noise
    /// referenced to the total signal energy.
    pub fn scene(
        &self,
        targets: &[(TargetPosition, Vec<Complex64>)],
        snr_db: f64,
        rng: &mut impl Rng,
    ) -> Result<ComplexTensor4> {
        let mut y = ComplexTensor4::zeros(self.config.dims());
        for (target, h) in targets {
            y.add_assign(&self.echo(target, h.clone())?)?;
        }
        add_noise(&y, snr_db, rng)
    }
}

/// Targets on an azimuth by elevation grid at a fixed range, azimuth
/// varying fastest. Angles in radians.
pub fn direction_grid(
    range: f64,
    azimuths: &[f64],
    elevations: &[f64],
) -> Result<Vec<TargetPosition>> {
    elevations
        .iter()
        .flat_map(|&el| {
            azimuths
                .iter()
                .map(move |&az| TargetPosition::new(range, az, el))
        })
        .collect::<ucal_core::Result<Vec<_>>>()
        .map_err(Error::from)
}

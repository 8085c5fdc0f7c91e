//! Range-scanned dictionary of vectorized range-angle responses.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::math;
use crate::model::{response_atom, PositionParams, SharedParams, TargetPosition};

/// Linear phase model `c[ℓ] = exp(−j ℓ Δφ)` with `Δφ = 2 (r + r0) Δω / c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseModel {
    /// Speed of sound in m/s.
    pub c_sound: f64,
    /// Bin spacing in rad/s.
    pub delta_omega: f64,
    /// System range offset in metres.
    pub r0: f64,
}

impl PhaseModel {
    pub fn new(c_sound: f64, delta_omega: f64, r0: f64) -> Result<Self> {
        let model = Self {
            c_sound,
            delta_omega,
            r0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_sound > 0.0 && self.delta_omega > 0.0) {
            return Err(Error::InvalidConfig(
                "sound speed and bin spacing must be positive",
            ));
        }
        if !self.r0.is_finite() {
            return Err(Error::InvalidConfig("range offset must be finite"));
        }
        Ok(())
    }

    /// Per-bin phase step for a target at range `r`.
    pub fn phase_step(&self, r: f64) -> f64 {
        2.0 * (r + self.r0) * self.delta_omega / self.c_sound
    }
}

/// How per-position range discrepancies are combined into one offset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OffsetAggregation {
    /// Average over positions.
    #[default]
    Mean,
    /// Plain sum over positions, kept for compatibility with the literal
    /// closed form. Exact only for a single position.
    Sum,
}

/// Estimates the range offset `r0` from learned phase responses.
///
/// Each position contributes `arg(Σ_ℓ c[ℓ] conj(c[ℓ+1]) · exp(−j 2 r_p Δω / c))`,
/// the wrapped difference between its measured phase step and the one implied
/// by its known range. Only the `c_sound` and `delta_omega` fields of `model`
/// are used.
pub fn estimate_r0(
    phases: &[Vec<Complex64>],
    ranges: &[f64],
    model: &PhaseModel,
    aggregation: OffsetAggregation,
) -> Result<f64> {
    if phases.is_empty() {
        return Err(Error::Empty("phase responses"));
    }
    check_len("ranges", phases.len(), ranges.len())?;
    model.validate()?;
    let mut terms = Vec::with_capacity(phases.len());
    for (c, &r) in phases.iter().zip(ranges) {
        if c.len() < 2 {
            return Err(Error::InvalidConfig(
                "at least two frequency bins are required",
            ));
        }
        let lag: Complex64 = c.windows(2).map(|w| w[0] * w[1].conj()).sum();
        let expected = math::cis(-2.0 * r * model.delta_omega / model.c_sound);
        terms.push((lag * expected).arg());
    }
    let total = math::compensated_sum(terms);
    let combined = match aggregation {
        OffsetAggregation::Mean => total / phases.len() as f64,
        OffsetAggregation::Sum => total,
    };
    Ok(model.c_sound / (2.0 * model.delta_omega) * combined)
}

/// Linear phase response of a target at range `r`.
pub fn phase_response(model: &PhaseModel, r: f64, num_bins: usize) -> Vec<Complex64> {
    let step = model.phase_step(r);
    (0..num_bins)
        .map(|l| math::cis(-(l as f64) * step))
        .collect()
}

/// Source of the phase responses placed in the atoms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PhaseSource {
    /// Regenerate linear phases from the phase model at every scan range.
    #[default]
    Model,
    /// Reuse the learned phases, shifted linearly from the calibration range
    /// to the scan range.
    Learned,
}

/// Metadata of one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomMeta {
    /// Index of the calibration position the atom was built from, if known.
    pub source: Option<usize>,
    pub range: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

/// Ordered set of atoms of length `N·M·L` in mode-4 column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    n: usize,
    m: usize,
    l: usize,
    atoms: Vec<Complex64>,
    meta: Vec<AtomMeta>,
}

impl Dictionary {
    /// `atoms` holds the atoms back to back.
    pub fn new(
        n: usize,
        m: usize,
        l: usize,
        atoms: Vec<Complex64>,
        meta: Vec<AtomMeta>,
    ) -> Result<Self> {
        if n == 0 || m == 0 || l == 0 {
            return Err(Error::Empty("atom dimensions"));
        }
        check_len("dictionary atoms", meta.len() * n * m * l, atoms.len())?;
        Ok(Self {
            n,
            m,
            l,
            atoms,
            meta,
        })
    }

    /// `(N, M, L)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n, self.m, self.l)
    }

    pub fn atom_len(&self) -> usize {
        self.n * self.m * self.l
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn atom(&self, k: usize) -> &[Complex64] {
        let len = self.atom_len();
        &self.atoms[k * len..(k + 1) * len]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[Complex64]> {
        self.atoms.chunks_exact(self.atom_len())
    }

    pub fn atom_data(&self) -> &[Complex64] {
        &self.atoms
    }

    pub fn meta(&self, k: usize) -> &AtomMeta {
        &self.meta[k]
    }

    pub fn metas(&self) -> &[AtomMeta] {
        &self.meta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryConfig {
    pub model: PhaseModel,
    /// Scan offsets added to each calibration range.
    pub offsets: Vec<f64>,
    pub source: PhaseSource,
}

/// Builds one atom per calibrated position and scan offset; atom `p·R + k`
/// belongs to position `p` and offset `k`.
pub fn build_dictionary(
    shared: &SharedParams,
    positions: &[PositionParams],
    targets: &[TargetPosition],
    config: &DictionaryConfig,
) -> Result<Dictionary> {
    if config.offsets.is_empty() {
        return Err(Error::Empty("scan range list"));
    }
    if positions.is_empty() {
        return Err(Error::Empty("calibrated positions"));
    }
    check_len("calibration targets", positions.len(), targets.len())?;
    config.model.validate()?;
    let (n, m, l) = (shared.num_tx(), shared.num_rx(), shared.num_bins());
    let mut atoms = Vec::with_capacity(positions.len() * config.offsets.len() * n * m * l);
    let mut meta = Vec::with_capacity(positions.len() * config.offsets.len());
    for (p, (pos, target)) in positions.iter().zip(targets).enumerate() {
        for &offset in &config.offsets {
            let range = target.range + offset;
            let c = match config.source {
                PhaseSource::Model => phase_response(&config.model, range, l),
                PhaseSource::Learned => {
                    check_len("c", l, pos.c.len())?;
                    let shift = PhaseModel {
                        r0: -target.range,
                        ..config.model
                    };
                    let ramp = phase_response(&shift, range, l);
                    pos.c.iter().zip(&ramp).map(|(a, b)| a * b).collect()
                }
            };
            atoms.extend(response_atom(shared, &pos.a_tx, &pos.a_rx, &c)?);
            meta.push(AtomMeta {
                source: Some(p),
                range,
                azimuth: target.azimuth,
                elevation: target.elevation,
            });
        }
    }
    Dictionary::new(n, m, l, atoms, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn model(r0: f64) -> PhaseModel {
        PhaseModel::new(343.0, 2.0 * math::PI * 195_000.0 / 4096.0, r0).unwrap()
    }

    #[test]
    fn zero_slope_gives_ones() {
        let m = model(0.25);
        for z in phase_response(&m, -0.25, 6) {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn half_turn_alternates() {
        let m = model(0.0);
        let r = math::PI * m.c_sound / (2.0 * m.delta_omega);
        let v = phase_response(&m, r, 5);
        for (l, z) in v.iter().enumerate() {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - Complex64::new(sign, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn hand_evaluated_step() {
        let m = model(0.0);
        let expected = 2.0 * 2.0 * (2.0 * math::PI * 195_000.0 / 4096.0) / 343.0;
        assert!((m.phase_step(2.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn offset_round_trip() {
        let m = model(0.1);
        let ranges = [0.8, 1.0, 1.3];
        let phases: Vec<_> = ranges.iter().map(|&r| phase_response(&m, r, 12)).collect();
        let r0 = estimate_r0(&phases, &ranges, &m, OffsetAggregation::Mean).unwrap();
        assert!((r0 - 0.1).abs() < 1e-10);
        let sum = estimate_r0(&phases, &ranges, &m, OffsetAggregation::Sum).unwrap();
        assert!((sum - 0.3).abs() < 1e-10);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let m = model(0.0);
        assert!(estimate_r0(&[], &[], &m, OffsetAggregation::Mean).is_err());
        let shared = SharedParams::ones(1, 1, 1);
        let cfg = DictionaryConfig {
            model: m,
            offsets: vec![],
            source: PhaseSource::Model,
        };
        let pos = PositionParams::ones(1, 1, 1, 1);
        let target = TargetPosition::new(1.0, 0.0, 0.0).unwrap();
        assert!(build_dictionary(&shared, &[pos], &[target], &cfg).is_err());
    }

    #[test]
    fn scalar_atom() {
        let mut shared = SharedParams::ones(1, 1, 1);
        shared.set_g_rx(0, 0, 0.5);
        let mut pos = PositionParams::ones(1, 1, 1, 1);
        pos.a_tx[0] = Complex64::new(0.0, 2.0);
        pos.a_rx[0] = Complex64::new(3.0, 0.0);
        let target = TargetPosition::new(1.0, 0.2, 0.1).unwrap();
        let cfg = DictionaryConfig {
            model: model(0.0),
            offsets: vec![0.0],
            source: PhaseSource::Model,
        };
        let dict = build_dictionary(&shared, &[pos], &[target], &cfg).unwrap();
        assert_eq!(dict.len(), 1);
        assert!((dict.atom(0)[0] - Complex64::new(0.0, 3.0)).norm() < 1e-15);
        assert_eq!(dict.meta(0).source, Some(0));
    }
}

//! Little-endian binary containers for calibration sets, calibration
//! estimates and dictionaries.
//!
//! Every file starts with a four-byte magic and a `u32` version, followed by
//! `u64` sizes. Reals are IEEE 754 doubles, complex values are stored as
//! interleaved real and imaginary parts, angles are in radians.

use std::fs;
use std::path::Path;

use thiserror::Error;
use ucal_core::{
    AtomMeta, CalibrationSet, Complex64, ComplexTensor4, Dictionary, Dims, PositionParams,
    SharedParams, TargetPosition,
};

use crate::error::{Error, Result};

pub const CALIBRATION_MAGIC: [u8; 4] = *b"UCAL";
pub const ESTIMATE_MAGIC: [u8; 4] = *b"UEST";
pub const DICTIONARY_MAGIC: [u8; 4] = *b"UDIC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("unsupported {kind} version {found} (supported: {supported})")]
    UnsupportedVersion {
        kind: &'static str,
        found: u32,
        supported: u32,
    },

    #[error("file truncated in {section}")]
    Truncated { section: String },

    #[error("{0} trailing bytes after the last section")]
    TrailingBytes(usize),

    #[error("header declares an empty set (P = 0)")]
    EmptySet,

    #[error("invalid header: {0}")]
    InvalidHeader(&'static str),

    #[error("invalid contents: {0}")]
    Invalid(#[from] ucal_core::Error),
}

type FormatResult<T> = std::result::Result<T, FormatError>;

/// Measurement tensors with their reference target positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFile {
    pub dims: Dims,
    pub positions: Vec<TargetPosition>,
    pub tensors: Vec<ComplexTensor4>,
}

impl CalibrationFile {
    pub fn from_set(set: &CalibrationSet) -> Self {
        Self {
            dims: set.dims(),
            positions: set.positions().to_vec(),
            tensors: set.tensors().to_vec(),
        }
    }

    pub fn into_set(self) -> ucal_core::Result<CalibrationSet> {
        CalibrationSet::new(self.tensors, self.positions)
    }
}

/// Calibrated model parameters together with the target positions they
/// were learned at.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateFile {
    pub dims: Dims,
    pub shared: SharedParams,
    pub targets: Vec<TargetPosition>,
    pub params: Vec<PositionParams>,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: [u8; 4]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(&magic);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        Self { buf }
    }

    fn size(&mut self, v: usize) {
        self.buf.extend_from_slice(&(v as u64).to_le_bytes());
    }

    fn real(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn reals(&mut self, v: &[f64]) {
        v.iter().for_each(|&x| self.real(x));
    }

    fn complexes(&mut self, v: &[Complex64]) {
        for z in v {
            self.real(z.re);
            self.real(z.im);
        }
    }

    fn target(&mut self, t: &TargetPosition) {
        self.reals(&[t.range, t.azimuth, t.elevation]);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, section: &str) -> FormatResult<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(FormatError::Truncated {
                section: section.to_string(),
            }),
        }
    }

    fn preamble(bytes: &'a [u8], magic: [u8; 4], kind: &'static str) -> FormatResult<Self> {
        let mut r = Self { bytes, pos: 0 };
        let found = r.take(4, "magic")?;
        if found != magic {
            return Err(FormatError::BadMagic {
                expected: String::from_utf8_lossy(&magic).into_owned(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        let version = u32::from_le_bytes(r.take(4, "version")?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion {
                kind,
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        Ok(r)
    }

    fn sizes<const K: usize>(&mut self) -> FormatResult<[usize; K]> {
        let raw = self.take(8 * K, "header")?;
        let mut out = [0usize; K];
        for (o, chunk) in out.iter_mut().zip(raw.chunks_exact(8)) {
            let v = u64::from_le_bytes(chunk.try_into().unwrap());
            *o = usize::try_from(v)
                .map_err(|_| FormatError::InvalidHeader("size overflows usize"))?;
        }
        Ok(out)
    }

    fn reals(&mut self, len: usize, section: &str) -> FormatResult<Vec<f64>> {
        let bytes = len
            .checked_mul(8)
            .ok_or(FormatError::InvalidHeader("section size overflows"))?;
        let raw = self.take(bytes, section)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn complexes(&mut self, len: usize, section: &str) -> FormatResult<Vec<Complex64>> {
        let len2 = len
            .checked_mul(2)
            .ok_or(FormatError::InvalidHeader("section size overflows"))?;
        let flat = self.reals(len2, section)?;
        Ok(flat
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect())
    }

    fn targets(&mut self, count: usize, section: &str) -> FormatResult<Vec<TargetPosition>> {
        let raw = self.reals(
            count
                .checked_mul(3)
                .ok_or(FormatError::InvalidHeader("section size overflows"))?,
            section,
        )?;
        raw.chunks_exact(3)
            .map(|c| TargetPosition::new(c[0], c[1], c[2]).map_err(FormatError::from))
            .collect()
    }

    fn finish(self) -> FormatResult<()> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            extra => Err(FormatError::TrailingBytes(extra)),
        }
    }
}

fn checked_dims(n: usize, m: usize, l: usize, t: usize) -> FormatResult<Dims> {
    if n == 0 || m == 0 || l == 0 || t == 0 {
        return Err(FormatError::InvalidHeader(
            "tensor dimensions must be positive",
        ));
    }
    n.checked_mul(m)
        .and_then(|x| x.checked_mul(l))
        .and_then(|x| x.checked_mul(t))
        .ok_or(FormatError::InvalidHeader("tensor size overflows"))?;
    Ok(Dims::new(n, m, l, t))
}

pub fn encode_calibration(file: &CalibrationFile) -> Vec<u8> {
    let d = file.dims;
    let mut w = Writer::new(CALIBRATION_MAGIC);
    for v in [d.n, d.m, d.l, d.t, file.tensors.len()] {
        w.size(v);
    }
    file.positions.iter().for_each(|t| w.target(t));
    for y in &file.tensors {
        w.complexes(y.data());
    }
    w.buf
}

pub fn decode_calibration(bytes: &[u8]) -> FormatResult<CalibrationFile> {
    let mut r = Reader::preamble(bytes, CALIBRATION_MAGIC, "calibration set")?;
    let [n, m, l, t, p] = r.sizes()?;
    if p == 0 {
        return Err(FormatError::EmptySet);
    }
    let dims = checked_dims(n, m, l, t)?;
    let positions = r.targets(p, "position records")?;
    let tensors = (0..p)
        .map(|k| {
            let data = r.complexes(dims.len(), &format!("tensor {k}"))?;
            Ok(ComplexTensor4::new(dims, data)?)
        })
        .collect::<FormatResult<Vec<_>>>()?;
    r.finish()?;
    Ok(CalibrationFile {
        dims,
        positions,
        tensors,
    })
}

pub fn encode_estimate(file: &EstimateFile) -> Vec<u8> {
    let d = file.dims;
    let mut w = Writer::new(ESTIMATE_MAGIC);
    for v in [d.n, d.m, d.l, d.t, file.params.len()] {
        w.size(v);
    }
    w.reals(file.shared.g_tx_data());
    w.reals(file.shared.g_rx_data());
    file.targets.iter().for_each(|t| w.target(t));
    for p in &file.params {
        w.complexes(&p.a_tx);
        w.complexes(&p.a_rx);
        w.complexes(&p.c);
        w.complexes(&p.h);
    }
    w.buf
}

pub fn decode_estimate(bytes: &[u8]) -> FormatResult<EstimateFile> {
    let mut r = Reader::preamble(bytes, ESTIMATE_MAGIC, "calibration estimate")?;
    let [n, m, l, t, p] = r.sizes()?;
    if p == 0 {
        return Err(FormatError::EmptySet);
    }
    let dims = checked_dims(n, m, l, t)?;
    let g_tx = r.reals(l * n, "transmit magnitude responses")?;
    let g_rx = r.reals(l * m, "receive magnitude responses")?;
    let shared = SharedParams::new(l, n, m, g_tx, g_rx)?;
    let targets = r.targets(p, "position records")?;
    let params = (0..p)
        .map(|k| {
            let section = format!("parameters of position {k}");
            Ok(PositionParams {
                a_tx: r.complexes(n, &section)?,
                a_rx: r.complexes(m, &section)?,
                c: r.complexes(l, &section)?,
                h: r.complexes(t, &section)?,
            })
        })
        .collect::<FormatResult<Vec<_>>>()?;
    r.finish()?;
    Ok(EstimateFile {
        dims,
        shared,
        targets,
        params,
    })
}

pub fn encode_dictionary(dict: &Dictionary) -> Vec<u8> {
    let (n, m, l) = dict.shape();
    let mut w = Writer::new(DICTIONARY_MAGIC);
    for v in [n, m, l, dict.len()] {
        w.size(v);
    }
    for meta in dict.metas() {
        w.reals(&[meta.range, meta.azimuth, meta.elevation]);
    }
    w.complexes(dict.atom_data());
    w.buf
}

/// The source position of each atom is not stored, so decoded metadata
/// carries `source: None`.
pub fn decode_dictionary(bytes: &[u8]) -> FormatResult<Dictionary> {
    let mut r = Reader::preamble(bytes, DICTIONARY_MAGIC, "dictionary")?;
    let [n, m, l, count] = r.sizes()?;
    if count == 0 {
        return Err(FormatError::EmptySet);
    }
    let atom_len = checked_dims(n, m, l, 1)?.len();
    let total = atom_len
        .checked_mul(count)
        .ok_or(FormatError::InvalidHeader("dictionary size overflows"))?;
    let meta = r
        .reals(
            count
                .checked_mul(3)
                .ok_or(FormatError::InvalidHeader("dictionary size overflows"))?,
            "atom metadata",
        )?
        .chunks_exact(3)
        .map(|c| AtomMeta {
            source: None,
            range: c[0],
            azimuth: c[1],
            elevation: c[2],
        })
        .collect();
    let atoms = r.complexes(total, "atom data")?;
    r.finish()?;
    Ok(Dictionary::new(n, m, l, atoms, meta)?)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn with_path<T>(path: &Path, r: FormatResult<T>) -> Result<T> {
    r.map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_calibration(path: &Path) -> Result<CalibrationFile> {
    with_path(path, decode_calibration(&read_bytes(path)?))
}

pub fn write_calibration(path: &Path, file: &CalibrationFile) -> Result<()> {
    write_bytes(path, &encode_calibration(file))
}

pub fn read_estimate(path: &Path) -> Result<EstimateFile> {
    with_path(path, decode_estimate(&read_bytes(path)?))
}

pub fn write_estimate(path: &Path, file: &EstimateFile) -> Result<()> {
    write_bytes(path, &encode_estimate(file))
}

pub fn read_dictionary(path: &Path) -> Result<Dictionary> {
    with_path(path, decode_dictionary(&read_bytes(path)?))
}

pub fn write_dictionary(path: &Path, dict: &Dictionary) -> Result<()> {
    write_bytes(path, &encode_dictionary(dict))
}

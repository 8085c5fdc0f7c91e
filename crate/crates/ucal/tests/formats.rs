use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucal::format::{
    decode_calibration, decode_dictionary, decode_estimate, encode_calibration, encode_dictionary,
    encode_estimate, read_calibration, write_calibration, CalibrationFile, EstimateFile,
    FormatError, FORMAT_VERSION,
};
use ucal::Error;
use ucal_core::{
    AtomMeta, Complex64, ComplexTensor4, Dictionary, Dims, PositionParams, SharedParams,
    TargetPosition,
};

fn complexes(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1e3..1e3), rng.gen::<f64>() * 1e-300))
        .collect()
}

fn target(rng: &mut impl Rng) -> TargetPosition {
    TargetPosition::new(
        rng.gen_range(0.1..5.0),
        rng.gen_range(-1.5..1.5),
        rng.gen_range(-1.5..1.5),
    )
    .unwrap()
}

fn calibration(seed: u64, dims: Dims, p: usize) -> CalibrationFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CalibrationFile {
        dims,
        positions: (0..p).map(|_| target(&mut rng)).collect(),
        tensors: (0..p)
            .map(|_| ComplexTensor4::new(dims, complexes(&mut rng, dims.len())).unwrap())
            .collect(),
    }
}

fn estimate(seed: u64, dims: Dims, p: usize) -> EstimateFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reals = |len: usize| (0..len).map(|_| rng.gen_range(0.001..1.0)).collect();
    let shared = SharedParams::new(
        dims.l,
        dims.n,
        dims.m,
        reals(dims.l * dims.n),
        reals(dims.l * dims.m),
    )
    .unwrap();
    EstimateFile {
        dims,
        shared,
        targets: (0..p).map(|_| target(&mut rng)).collect(),
        params: (0..p)
            .map(|_| PositionParams {
                a_tx: complexes(&mut rng, dims.n),
                a_rx: complexes(&mut rng, dims.m),
                c: complexes(&mut rng, dims.l),
                h: complexes(&mut rng, dims.t),
            })
            .collect(),
    }
}

fn dictionary(seed: u64, n: usize, m: usize, l: usize, count: usize) -> Dictionary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let meta = (0..count)
        .map(|_| {
            let t = target(&mut rng);
            AtomMeta {
                source: None,
                range: t.range,
                azimuth: t.azimuth,
                elevation: t.elevation,
            }
        })
        .collect();
    Dictionary::new(n, m, l, complexes(&mut rng, n * m * l * count), meta).unwrap()
}

fn dims_strategy() -> impl Strategy<Value = (Dims, usize)> {
    (1usize..4, 1usize..4, 1usize..5, 1usize..3, 1usize..4)
        .prop_map(|(n, m, l, t, p)| (Dims::new(n, m, l, t), p))
}

proptest! {
    #[test]
    fn calibration_round_trip((dims, p) in dims_strategy(), seed in any::<u64>()) {
        let file = calibration(seed, dims, p);
        let bytes = encode_calibration(&file);
        prop_assert_eq!(bytes.len(), 4 + 4 + 5 * 8 + p * 24 + p * dims.len() * 16);
        let back = decode_calibration(&bytes).unwrap();
        prop_assert_eq!(encode_calibration(&back), bytes);
        prop_assert_eq!(back, file);
    }

    #[test]
    fn estimate_round_trip((dims, p) in dims_strategy(), seed in any::<u64>()) {
        let file = estimate(seed, dims, p);
        let back = decode_estimate(&encode_estimate(&file)).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn dictionary_round_trip(n in 1usize..4, m in 1usize..4, l in 1usize..5, count in 1usize..6, seed in any::<u64>()) {
        let dict = dictionary(seed, n, m, l, count);
        let back = decode_dictionary(&encode_dictionary(&dict)).unwrap();
        prop_assert_eq!(back, dict);
    }

    /// Every strict prefix of a valid file is rejected as truncated.
    #[test]
    fn prefixes_are_truncated(cut in 0usize..1000, seed in any::<u64>()) {
        let bytes = encode_calibration(&calibration(seed, Dims::new(2, 2, 3, 2), 2));
        let cut = cut % bytes.len();
        let err = decode_calibration(&bytes[..cut]).unwrap_err();
        prop_assert!(matches!(err, FormatError::Truncated { .. }), "{err:?}");
    }
}

fn truncated_section(bytes: &[u8]) -> String {
    match decode_calibration(bytes) {
        Err(FormatError::Truncated { section }) => section,
        other => panic!("expected truncation, got {other:?}"),
    }
}

#[test]
fn truncation_names_the_missing_section() {
    let dims = Dims::new(1, 2, 2, 1);
    let bytes = encode_calibration(&calibration(1, dims, 2));
    let header = 8 + 40;
    let records = header + 2 * 24;
    assert_eq!(truncated_section(&bytes[..2]), "magic");
    assert_eq!(truncated_section(&bytes[..6]), "version");
    assert_eq!(truncated_section(&bytes[..20]), "header");
    assert_eq!(truncated_section(&bytes[..header + 10]), "position records");
    assert_eq!(truncated_section(&bytes[..records + 5]), "tensor 0");
    assert_eq!(truncated_section(&bytes[..bytes.len() - 1]), "tensor 1");

    let est = encode_estimate(&estimate(2, dims, 1));
    match decode_estimate(&est[..est.len() - 3]) {
        Err(FormatError::Truncated { section }) => assert_eq!(section, "parameters of position 0"),
        other => panic!("{other:?}"),
    }
    let dict = encode_dictionary(&dictionary(3, 1, 2, 2, 3));
    match decode_dictionary(&dict[..8 + 32 + 10]) {
        Err(FormatError::Truncated { section }) => assert_eq!(section, "atom metadata"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn magic_and_version_errors_are_distinct() {
    let mut bytes = encode_calibration(&calibration(4, Dims::new(1, 1, 2, 1), 1));
    let mut wrong_magic = bytes.clone();
    wrong_magic[..4].copy_from_slice(b"XCAL");
    assert!(matches!(
        decode_calibration(&wrong_magic),
        Err(FormatError::BadMagic { .. })
    ));

    bytes[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    match decode_calibration(&bytes) {
        Err(FormatError::UnsupportedVersion { found, .. }) => assert_eq!(found, FORMAT_VERSION + 1),
        other => panic!("{other:?}"),
    }

    // Each decoder rejects the other containers by magic.
    let est = encode_estimate(&estimate(5, Dims::new(1, 1, 2, 1), 1));
    let dict = encode_dictionary(&dictionary(6, 1, 1, 2, 1));
    assert!(matches!(
        decode_calibration(&est),
        Err(FormatError::BadMagic { .. })
    ));
    assert!(matches!(
        decode_estimate(&dict),
        Err(FormatError::BadMagic { .. })
    ));
    assert!(matches!(
        decode_dictionary(&est),
        Err(FormatError::BadMagic { .. })
    ));
}

#[test]
fn empty_sets_are_rejected() {
    let mut bytes = encode_calibration(&calibration(7, Dims::new(1, 1, 1, 1), 1));
    bytes[8 + 32..8 + 40].copy_from_slice(&0u64.to_le_bytes());
    assert!(matches!(
        decode_calibration(&bytes[..48]),
        Err(FormatError::EmptySet)
    ));

    let mut dict = encode_dictionary(&dictionary(8, 1, 1, 1, 1));
    dict[8 + 24..8 + 32].copy_from_slice(&0u64.to_le_bytes());
    assert!(matches!(
        decode_dictionary(&dict[..40]),
        Err(FormatError::EmptySet)
    ));
}

#[test]
fn trailing_bytes_and_bad_contents_are_rejected() {
    let mut bytes = encode_calibration(&calibration(9, Dims::new(1, 1, 1, 1), 1));
    bytes.push(0);
    assert!(matches!(
        decode_calibration(&bytes),
        Err(FormatError::TrailingBytes(1))
    ));
    bytes.pop();

    // Zero tensor dimension.
    let mut zero_dim = bytes.clone();
    zero_dim[8..16].copy_from_slice(&0u64.to_le_bytes());
    assert!(matches!(
        decode_calibration(&zero_dim),
        Err(FormatError::InvalidHeader(_))
    ));

    // Negative range in a position record.
    let mut negative = bytes.clone();
    negative[48..56].copy_from_slice(&(-1.0f64).to_le_bytes());
    assert!(matches!(
        decode_calibration(&negative),
        Err(FormatError::Invalid(_))
    ));
}

#[test]
fn dictionary_source_index_is_not_persisted() {
    let meta = vec![AtomMeta {
        source: Some(3),
        range: 1.0,
        azimuth: 0.1,
        elevation: 0.2,
    }];
    let dict = Dictionary::new(1, 1, 1, vec![Complex64::new(1.0, 2.0)], meta).unwrap();
    let back = decode_dictionary(&encode_dictionary(&dict)).unwrap();
    assert_eq!(back.meta(0).source, None);
    assert_eq!(back.meta(0).range, 1.0);
    assert_eq!(back.atom(0), dict.atom(0));
}

#[test]
fn file_helpers_report_paths_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set.ucal");
    let file = calibration(10, Dims::new(2, 1, 2, 1), 3);
    write_calibration(&path, &file).unwrap();
    assert_eq!(read_calibration(&path).unwrap(), file);

    let missing = read_calibration(&dir.path().join("missing.ucal")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }));
    assert_eq!(missing.exit_code(), 2);

    std::fs::write(&path, b"UDIC").unwrap();
    let bad = read_calibration(&path).unwrap_err();
    assert!(matches!(bad, Error::Format { .. }));
    assert_eq!(bad.exit_code(), 1);
    assert!(bad.to_string().contains("set.ucal"));
}

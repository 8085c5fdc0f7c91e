//! Reference-based calibration of MIMO arrays with a coupled four-way tensor
//! model, plus range-scanned dictionaries and sparse imaging built on the
//! calibrated responses.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]

extern crate alloc;

pub mod calibration;
pub mod cpd;
pub mod dictionary;
pub mod error;
pub mod math;
pub mod metrics;
pub mod model;
pub mod omp;
pub mod tensor;

pub use num_complex::Complex64;

pub use calibration::{
    calibrate, calibrate_from, canonicalize, initialize, normalized_cost, rescale, update_a_rx,
    update_a_tx, update_c, update_g_rx, update_g_tx, update_h, BcdConfig, BcdState, Block,
    CalibrationEstimate, CalibrationSet, Diagnostics, IterationRecord,
};
pub use cpd::{rank1_cpd, snapshot_average, Rank1Cpd};
pub use dictionary::{
    build_dictionary, estimate_r0, phase_response, AtomMeta, Dictionary, DictionaryConfig,
    OffsetAggregation, PhaseModel, PhaseSource,
};
pub use error::{Error, Result};
pub use metrics::{complementary_correlation, mcncc, reconstruction_error};
pub use model::{
    analytic_response, broadside_compensate, synthesize, AnalyticResponse, ArrayGeometry,
    BroadsideGains, PositionParams, SharedParams, TargetPosition, DEFAULT_EPSILON,
};
pub use omp::{
    image, residual, threshold_and_project, AngularPoint, CartesianPoint, Detection, ImageEstimate,
    OmpConfig, Projections, StopReason,
};
pub use tensor::{ComplexMatrix, ComplexTensor4, Dims, Mode};

//! Beam-pair detection for 5G NR initial access with hybrid analog/digital
//! beamforming.
//!
//! The crate simulates the downlink SSB beam sweep of a gNB towards a UE over
//! a clustered mmWave channel, and detects the dominant transmit/receive beam
//! pairs either by exhaustive search over measured beam energies or by
//! orthogonal matching pursuit over an oversampled angle-grid dictionary.
//!
//! Module overview:
//!
//! - [`arrays`]: ULA steering vectors and sin-domain grid dictionaries.
//! - [`channel`]: clustered multipath channel sampling and per-subcarrier
//!   channel matrices.
//! - [`codebooks`]: phase-shifter constrained RF codebooks.
//! - [`sweep`]: SSB sweep acquisition and the Kronecker-structured sensing
//!   operator.
//! - [`detect`]: ground truth, exhaustive search, OMP and CS beam detection.
//! - [`metrics`]: detection probabilities and beam-index error CDFs.
//! - [`experiment`]: seeded Monte Carlo runner and CSV output.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrays;
pub mod channel;
pub mod codebooks;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod seed;
pub mod sweep;

pub use arrays::{steering_vector, ArrayGeometry, GridDictionary};
pub use channel::{sample_channel, ChannelParams, ChannelRealization, PathComponent};
pub use codebooks::{Codebook, CodebookKind};
pub use detect::{BeamPair, DetectionOutcome};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResults};
pub use metrics::{Method, TrialRecord};
pub use sweep::{MeasurementSet, SensingOperator, SweepConfig};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

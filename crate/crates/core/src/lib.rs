//! Remote photoplethysmography: heart rate and SpO2 estimation from facial
//! video.
//!
//! The crate covers the whole chain: synthetic corpus generation, face
//! alignment and difference normalization, reference PPG cleaning, classical
//! (POS/CHROM) and learned (3D-CNN) pulse extraction, SpO2 regression with
//! label-distribution-smoothed weights, spectral heart-rate recovery and
//! evaluation.

pub mod classical;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod nn;
pub mod ppgclean;
pub mod preprocess;
pub mod rng;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};

//! Near-infrared remote photoplethysmography.
//!
//! The crate covers the whole path from raw recordings to a heart-rate
//! error figure: ground-truth correction and peak-trough normalization
//! ([`signal`]), face crops and motion maps ([`frames`]), heart-rate
//! augmentation ([`augmentation`]), the convolutional attention network
//! ([`model`]), overlap-averaged whole-video regression ([`inference`]),
//! R-R interval evaluation ([`evaluation`]) and file formats plus a
//! synthetic data generator ([`dataset`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augmentation;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod frames;
pub mod inference;
pub mod model;
pub mod signal;

pub use error::{Error, Result};
pub use frames::{BoundingBox, FrameSequence};
pub use signal::{ExtremaIndex, PpgSignal};

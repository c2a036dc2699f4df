//! Core algorithms for smartphone-IMU cardiorespiratory screening.
//!
//! The crate is `no_std` compatible (it needs `alloc`). Everything that
//! touches the filesystem, renders images, or parses command lines lives in
//! the companion `breathscreen` crate.
//!
//! Pipeline, in order:
//!
//! * [`synth`] builds parametric multi-scene IMU cohorts with ground truth.
//! * [`dsp`] trims transients, low-passes the gyroscope y-axis, finds
//!   breathing-cycle peaks and cuts fixed-length cycles out of the raw signal.
//! * [`nn`] holds the (bi)directional LSTM time encoder, the fully connected
//!   head and exact backpropagation through time.
//! * [`training`] fits a network with mini-batches and early stopping.
//! * [`hpo`] searches model configurations with a Gaussian-process surrogate.
//! * [`evaluation`] runs undersampling, patient-level leave-one-out
//!   cross-validation and produces metrics and report grids.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod fft;
pub mod hpo;
pub(crate) mod math;
pub mod nn;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod training;

pub use error::{Error, Result};

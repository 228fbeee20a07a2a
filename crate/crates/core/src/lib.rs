//! Spectral regression toolkit: preprocessing pipelines, artefact-style data
//! augmentation, a from-scratch 1-D CNN multi-output regressor and the
//! cross-validation machinery used to compare preprocessing procedures.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`] – spectra, targets, CSV ingestion and fold splitting
//! * [`preprocess`] – linear baseline, SNV, Savitzky–Golay derivatives,
//!   global scaling and the 64-row preprocessing design matrix
//! * [`augment`] – offset / slope / multiplicative augmentation
//! * [`nn`] – tensors, layers, Huber loss and AdamW
//! * [`train`] – mini-batch training with early stopping
//! * [`eval`] – metrics, Mann–Whitney U, cross-validation and ablations
//! * [`synth`] – synthetic spectra with known ground truth
//! * [`config`] and [`cli`] – the batch command surface

pub mod augment;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod nn;
pub mod preprocess;
pub mod rng;
pub mod synth;
pub mod train;

pub use error::{Error, Result};

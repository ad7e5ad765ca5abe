//! Gestational-age estimation from fetal-head ultrasound.
//!
//! The pipeline extracts radiomic features from image/mask pairs, derives
//! labels from head circumference, and fuses the radiomics with precomputed
//! deep embeddings through a small cross-attention regressor. Classical
//! radiomics-only baselines and the evaluation harness live alongside.

pub mod autodiff;
pub mod baselines;
pub mod biometry;
pub mod commands;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod radiomics;
pub mod synth;

pub use error::{Error, Result};

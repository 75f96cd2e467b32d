//! Single-channel RF source separation under interference-type uncertainty.

pub mod cli;
pub mod error;
pub mod gaussmix;
pub mod harness;
pub mod learning;
pub mod linalg;
pub mod signal;
pub mod siggen;
pub mod spectral;

pub use error::{Error, Result};
pub use signal::ComplexSignal;

//! Reconstruction of high-resolution reflectance spectra from low-channel
//! CFA sensor measurements.
//!
//! The crate builds a linear forward model `C = S·Λ` for a spectrally
//! characterized sensor, then inverts it three ways:
//!
//! - **WEM** — the classic Wiener estimator trained on a small patch set;
//! - **DEMUX-WEM** — the same Wiener estimator trained on a large dataset
//!   synthesized through the forward model;
//! - **DEMUX-RFM** — per-wavelength random-forest regressors trained on the
//!   same synthesized dataset.
//!
//! [`harness`] wires the full simulation experiment together: generate
//! spectra, train all three demultiplexers, reconstruct a held-out test set
//! and report pooled PSNR per method.

pub mod error;
pub mod fingerprint;
pub mod fixtures;
pub mod forest;
pub mod dataset;
pub mod forward;
pub mod grid;
pub mod harness;
pub mod io;
pub mod measurement;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod sensitivity;
pub mod specgen;
pub mod wiener;
pub mod spectrum;

pub use error::{Error, ErrorCategory, Result, Stage};
pub use fingerprint::Fingerprint;
pub use forward::forward_measure;
pub use grid::WavelengthGrid;
pub use measurement::Measurement;
pub use metrics::psnr;
pub use sensitivity::{validate_sensitivity, SensitivityMatrix, SensitivityReport};
pub use spectrum::{Illuminant, Spectrum, SpectrumKind};

/// Library version reported by front ends.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// On-disk format version shared by all binary artifacts.
pub const FORMAT_VERSION: u32 = 1;

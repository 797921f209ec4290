//! Error type shared by the whole pipeline.
//!
//! Errors carry a coarse [`ErrorCategory`] so front ends can map them to
//! process exit codes without matching on every variant.

use thiserror::Error;

use crate::grid::WavelengthGrid;

/// Pipeline stage names used to tag experiment failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sensitivity,
    Generate,
    Dataset,
    TrainWem,
    TrainDemuxWem,
    TrainDemuxRfm,
    Predict,
    Report,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Sensitivity => "sensitivity",
            Stage::Generate => "generate",
            Stage::Dataset => "dataset",
            Stage::TrainWem => "train-wem",
            Stage::TrainDemuxWem => "train-demux-wem",
            Stage::TrainDemuxRfm => "train-demux-rfm",
            Stage::Predict => "predict",
            Stage::Report => "report",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// The request itself is malformed (empty input, zero count, bad config).
    #[error("{0}")]
    Usage(String),

    /// Two operands live on different wavelength grids.
    #[error("grid mismatch in {context}: {expected} vs {actual}")]
    GridMismatch {
        context: &'static str,
        expected: WavelengthGrid,
        actual: WavelengthGrid,
    },

    /// Vector/matrix sizes disagree.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A value failed domain validation (non-finite, out of range, ...).
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// A file had the wrong shape or content.
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Detrend reference too close to zero at some wavelength.
    #[error(
        "division hazard: reference measurement is {value:e} at {wavelength_nm} nm \
         (below threshold {threshold:e})"
    )]
    DivisionHazard {
        wavelength_nm: f64,
        value: f64,
        threshold: f64,
    },

    /// A linear system was singular or too ill-conditioned to solve.
    #[error("ill-conditioned system in {context}: condition estimate {condition:e}")]
    Conditioning { context: &'static str, condition: f64 },

    /// Wraps the failure of one experiment stage.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used for exit codes: usage 1, data 2, numerical 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Usage(_) => ErrorCategory::Usage,
            Error::GridMismatch { .. }
            | Error::Dimension { .. }
            | Error::Invalid { .. }
            | Error::Format { .. }
            | Error::Io { .. } => ErrorCategory::Data,
            Error::DivisionHazard { .. } | Error::Conditioning { .. } => ErrorCategory::Numerical,
            Error::Stage { source, .. } => source.category(),
        }
    }

    pub fn in_stage(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, reason: impl Into<String>) -> Error {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_map_as_documented() {
        assert_eq!(
            Error::Usage("empty".into()).category(),
            ErrorCategory::Usage
        );
        assert_eq!(
            Error::Dimension {
                context: "t",
                expected: 3,
                actual: 2
            }
            .category(),
            ErrorCategory::Data
        );
        assert_eq!(
            Error::Conditioning {
                context: "t",
                condition: 1e18
            }
            .category(),
            ErrorCategory::Numerical
        );
    }

    #[test]
    fn stage_wrapping_keeps_inner_category() {
        let err = Error::DivisionHazard {
            wavelength_nm: 410.0,
            value: 0.0,
            threshold: 1e-9,
        }
        .in_stage(Stage::Dataset);
        assert_eq!(err.category(), ErrorCategory::Numerical);
        assert!(err.to_string().contains("dataset"));
    }
}

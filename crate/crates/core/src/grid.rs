//! Discrete wavelength axis shared by spectra, illuminants and sensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, uniformly spaced wavelength axis: `wavelength(k) = start_nm + k * step_nm`.
///
/// Grids are value types; two grids are "the same axis" exactly when all
/// three fields are equal. Every cross-object operation in this crate checks
/// grid equality before touching values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    start_nm: f64,
    step_nm: f64,
    count: usize,
}

impl WavelengthGrid {
    pub fn new(start_nm: f64, step_nm: f64, count: usize) -> Result<Self> {
        if !start_nm.is_finite() || !step_nm.is_finite() {
            return Err(Error::Invalid {
                what: "wavelength grid",
                reason: format!("non-finite bounds: start {start_nm}, step {step_nm}"),
            });
        }
        if step_nm <= 0.0 {
            return Err(Error::Invalid {
                what: "wavelength grid",
                reason: format!("step must be positive, got {step_nm}"),
            });
        }
        if count < 2 {
            return Err(Error::Invalid {
                what: "wavelength grid",
                reason: format!("need at least 2 points, got {count}"),
            });
        }
        Ok(Self {
            start_nm,
            step_nm,
            count,
        })
    }

    /// The default axis used throughout: 410-710 nm in 5 nm steps, 61 points.
    pub fn visible_5nm() -> Self {
        Self {
            start_nm: 410.0,
            step_nm: 5.0,
            count: 61,
        }
    }

    pub fn start_nm(&self) -> f64 {
        self.start_nm
    }

    pub fn step_nm(&self) -> f64 {
        self.step_nm
    }

    pub fn end_nm(&self) -> f64 {
        self.wavelength(self.count - 1)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Wavelength of grid point `k`. Panics if `k >= count`.
    pub fn wavelength(&self, k: usize) -> f64 {
        assert!(k < self.count, "grid index {k} out of range ({})", self.count);
        self.start_nm + k as f64 * self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.wavelength(k))
    }
}

impl std::fmt::Display for WavelengthGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}-{} nm step {} ({} points)",
            self.start_nm,
            self.end_nm(),
            self.step_nm,
            self.count
        )
    }
}

//! Spectra and illuminants on a wavelength grid.

use crate::error::{Error, Result};
use crate::grid::WavelengthGrid;

/// What a spectrum's values mean, and therefore which bounds apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Fraction of light reflected; values must lie in [0, 1].
    Reflectance,
    /// Relative radiance (e.g. reflectance times illuminant power); only
    /// required to be finite.
    Radiance,
}

/// Intensity or reflectance sampled on a [`WavelengthGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: Vec<f64>,
    kind: SpectrumKind,
}

impl Spectrum {
    /// A reflectance spectrum; every value must be finite and within [0, 1].
    pub fn reflectance(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self> {
        Self::validated(grid, values, SpectrumKind::Reflectance)
    }

    /// A relative-radiance spectrum; values must be finite.
    pub fn radiance(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self> {
        Self::validated(grid, values, SpectrumKind::Radiance)
    }

    pub fn new(grid: WavelengthGrid, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        Self::validated(grid, values, kind)
    }

    fn validated(grid: WavelengthGrid, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::Dimension {
                context: "spectrum values",
                expected: grid.count(),
                actual: values.len(),
            });
        }
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Invalid {
                    what: "spectrum",
                    reason: format!("non-finite value {v} at {} nm", grid.wavelength(k)),
                });
            }
            if kind == SpectrumKind::Reflectance && !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid {
                    what: "reflectance spectrum",
                    reason: format!("value {v} at {} nm outside [0, 1]", grid.wavelength(k)),
                });
            }
        }
        Ok(Self { grid, values, kind })
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub(crate) fn same_grid(&self, other: &WavelengthGrid, context: &'static str) -> Result<()> {
        if self.grid == *other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                context,
                expected: *other,
                actual: self.grid,
            })
        }
    }
}

/// Relative spectral power of a light source.
#[derive(Debug, Clone, PartialEq)]
pub struct Illuminant {
    grid: WavelengthGrid,
    power: Vec<f64>,
}

impl Illuminant {
    pub fn new(grid: WavelengthGrid, power: Vec<f64>) -> Result<Self> {
        if power.len() != grid.count() {
            return Err(Error::Dimension {
                context: "illuminant power",
                expected: grid.count(),
                actual: power.len(),
            });
        }
        if let Some((k, &v)) = power
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Invalid {
                what: "illuminant",
                reason: format!("power {v} at {} nm (must be finite, >= 0)", grid.wavelength(k)),
            });
        }
        Ok(Self { grid, power })
    }

    /// Constant spectral power at every wavelength.
    pub fn flat(grid: WavelengthGrid, level: f64) -> Result<Self> {
        Self::new(grid, vec![level; grid.count()])
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> WavelengthGrid {
        WavelengthGrid::new(400.0, 10.0, 4).unwrap()
    }

    #[test]
    fn reflectance_enforces_unit_interval() {
        assert!(Spectrum::reflectance(grid(), vec![0.0, 0.5, 1.0, 0.3]).is_ok());
        assert!(Spectrum::reflectance(grid(), vec![0.0, 1.5, 0.5, 0.3]).is_err());
        assert!(Spectrum::reflectance(grid(), vec![-0.1, 0.5, 0.5, 0.3]).is_err());
    }

    #[test]
    fn radiance_allows_values_above_one() {
        let s = Spectrum::radiance(grid(), vec![0.0, 2.5, 7.0, 0.3]).unwrap();
        assert_eq!(s.kind(), SpectrumKind::Radiance);
        assert!(Spectrum::radiance(grid(), vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn length_must_match_grid() {
        let err = Spectrum::reflectance(grid(), vec![0.1; 3]).unwrap_err();
        assert!(err.to_string().contains("expected 4"));
    }

    #[test]
    fn illuminant_rejects_negative_power() {
        assert!(Illuminant::new(grid(), vec![1.0, 0.0, 2.0, 3.0]).is_ok());
        assert!(Illuminant::new(grid(), vec![1.0, -0.5, 2.0, 3.0]).is_err());
        let flat = Illuminant::flat(grid(), 1.0).unwrap();
        assert!(flat.power().iter().all(|&p| p == 1.0));
    }
}

//! The forward sensor model: C = S·Λ.

use crate::error::Result;
use crate::measurement::Measurement;
use crate::sensitivity::SensitivityMatrix;
use crate::spectrum::Spectrum;

/// Projects a spectrum through the sensor: `values[i] = Σₖ S[i][k]·Λ[k]`.
///
/// Exact linear map, no noise. Fails if the spectrum and sensitivity live on
/// different grids.
pub fn forward_measure(spectrum: &Spectrum, sens: &SensitivityMatrix) -> Result<Measurement> {
    spectrum.same_grid(&sens.grid(), "forward_measure")?;
    let values = sens
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(spectrum.values())
                .map(|(&s, &l)| s * l)
                .sum()
        })
        .collect();
    Measurement::new(values, sens.shared_names())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WavelengthGrid;

    fn grid3() -> WavelengthGrid {
        WavelengthGrid::new(400.0, 100.0, 3).unwrap()
    }

    #[test]
    fn identity_sensitivity_passes_values_through() {
        let g = grid3();
        let s = SensitivityMatrix::identity(g);
        let lam = Spectrum::reflectance(g, vec![0.2, 0.5, 0.3]).unwrap();
        let c = forward_measure(&lam, &s).unwrap();
        assert_eq!(c.values(), &[0.2, 0.5, 0.3]);
    }

    #[test]
    fn all_ones_row_sums_the_spectrum() {
        let g = grid3();
        let s = SensitivityMatrix::new(g, vec!["sum".into()], vec![vec![1.0; 3]]).unwrap();
        let lam = Spectrum::reflectance(g, vec![0.2, 0.5, 0.3]).unwrap();
        let c = forward_measure(&lam, &s).unwrap();
        assert_eq!(c.values(), &[0.2 + 0.5 + 0.3]);
    }

    #[test]
    fn zero_spectrum_measures_zero() {
        let g = grid3();
        let s = SensitivityMatrix::new(
            g,
            vec!["a".into(), "b".into()],
            vec![vec![0.3, 0.8, 0.1], vec![0.0, 0.5, 0.9]],
        )
        .unwrap();
        let lam = Spectrum::reflectance(g, vec![0.0; 3]).unwrap();
        let c = forward_measure(&lam, &s).unwrap();
        assert_eq!(c.values(), &[0.0, 0.0]);
    }

    #[test]
    fn grid_mismatch_is_a_dimension_error() {
        let s = SensitivityMatrix::identity(grid3());
        let other = WavelengthGrid::new(410.0, 100.0, 3).unwrap();
        let lam = Spectrum::reflectance(other, vec![0.1; 3]).unwrap();
        let err = forward_measure(&lam, &s).unwrap_err();
        assert!(err.to_string().contains("grid mismatch"));
    }
}

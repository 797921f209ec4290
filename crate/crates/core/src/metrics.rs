//! Reconstruction fidelity metrics.

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Sum of squared differences between two spectra on the same grid.
pub fn spectrum_sse(truth: &Spectrum, pred: &Spectrum) -> Result<f64> {
    pred.same_grid(&truth.grid(), "spectrum_sse")?;
    Ok(truth
        .values()
        .iter()
        .zip(pred.values())
        .map(|(&t, &p)| (t - p) * (t - p))
        .sum())
}

/// PSNR in decibels from a pooled squared-error total.
///
/// `value_count` is the number of pooled scalar values (spectra × grid
/// points). A zero error total maps to the `+∞` sentinel.
pub fn psnr_from_sse(total_sse: f64, value_count: usize, peak: f64) -> f64 {
    let mse = total_sse / value_count as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Pooled PSNR over a set of spectra: `10·log₁₀(peak²/MSE)` with the MSE
/// taken over all spectra and all wavelengths together.
pub fn psnr(truth: &[Spectrum], pred: &[Spectrum], peak: f64) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Usage("psnr needs at least one spectrum".into()));
    }
    if truth.len() != pred.len() {
        return Err(Error::Dimension {
            context: "psnr spectra lists",
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Usage(format!("psnr peak must be positive, got {peak}")));
    }
    let grid = truth[0].grid();
    let mut total = 0.0;
    for (t, p) in truth.iter().zip(pred) {
        t.same_grid(&grid, "psnr")?;
        total += spectrum_sse(t, p)?;
    }
    Ok(psnr_from_sse(total, truth.len() * grid.count(), peak))
}

//! Randomized reflectance spectra, illuminant application and detrending.
//!
//! Generated spectra are sums of 1-4 Gaussian bumps with uniformly sampled
//! centers (over the grid span), widths and amplitudes, clipped to [0, 1].
//! Each spectrum draws from its own RNG substream (see [`crate::rng`]), so
//! generation is deterministic for a given seed and safe to parallelize.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WavelengthGrid;
use crate::rng::stream_rng;
use crate::spectrum::{Illuminant, Spectrum};

/// Configuration for the bump-sum reflectance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraGenConfig {
    pub seed: u64,
    pub count: usize,
    /// Inclusive range for the number of Gaussian bumps per spectrum.
    pub bump_count: (u32, u32),
    /// Inclusive range for the bump standard deviation, in nm.
    pub bump_width_nm: (f64, f64),
    /// Inclusive range for bump amplitudes; must sit inside [0, 1].
    pub amplitude: (f64, f64),
}

impl SpectraGenConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            bump_count: (1, 4),
            bump_width_nm: (10.0, 80.0),
            amplitude: (0.05, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Usage("spectra count must be at least 1".into()));
        }
        let (bl, bh) = self.bump_count;
        if bl < 1 || bl > bh {
            return Err(Error::Usage(format!("empty bump count range [{bl}, {bh}]")));
        }
        let (wl, wh) = self.bump_width_nm;
        if !(wl > 0.0) || wl > wh || !wh.is_finite() {
            return Err(Error::Usage(format!("bad bump width range [{wl}, {wh}] nm")));
        }
        let (al, ah) = self.amplitude;
        if !(0.0..=1.0).contains(&al) || !(0.0..=1.0).contains(&ah) || al > ah {
            return Err(Error::Usage(format!(
                "amplitude range [{al}, {ah}] must be non-empty and within [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Generates `cfg.count` random reflectance spectra on `grid`.
///
/// Deterministic for a given (seed, config, grid); spectrum `i` depends only
/// on substream `i`, never on how many spectra are requested.
pub fn generate_spectra(cfg: &SpectraGenConfig, grid: WavelengthGrid) -> Result<Vec<Spectrum>> {
    cfg.validate()?;
    (0..cfg.count)
        .map(|i| generate_one(cfg, grid, i as u64))
        .collect()
}

fn generate_one(cfg: &SpectraGenConfig, grid: WavelengthGrid, index: u64) -> Result<Spectrum> {
    let mut rng = stream_rng(cfg.seed, "specgen", index);
    let bumps = rng.gen_range(cfg.bump_count.0..=cfg.bump_count.1);
    let mut values = vec![0.0f64; grid.count()];
    for _ in 0..bumps {
        let center = rng.gen_range(grid.start_nm()..=grid.end_nm());
        let width = rng.gen_range(cfg.bump_width_nm.0..=cfg.bump_width_nm.1);
        let amplitude = rng.gen_range(cfg.amplitude.0..=cfg.amplitude.1);
        let inv_two_sigma_sq = 1.0 / (2.0 * width * width);
        for (k, v) in values.iter_mut().enumerate() {
            let d = grid.wavelength(k) - center;
            *v += amplitude * (-d * d * inv_two_sigma_sq).exp();
        }
    }
    for v in &mut values {
        *v = v.clamp(0.0, 1.0);
    }
    Spectrum::reflectance(grid, values)
}

/// Pointwise product Λ = R·E; the result is radiance, not bounded by 1.
pub fn apply_illuminant(reflectance: &Spectrum, light: &Illuminant) -> Result<Spectrum> {
    reflectance.same_grid(&light.grid(), "apply_illuminant")?;
    let values = reflectance
        .values()
        .iter()
        .zip(light.power())
        .map(|(&r, &e)| r * e)
        .collect();
    Spectrum::radiance(reflectance.grid(), values)
}

/// Fraction of the reference maximum below which a reference bin is treated
/// as a division hazard.
pub const DETREND_HAZARD_FRACTION: f64 = 1e-9;

/// Converts a measured spectrum to reflectance against a reference target:
/// `out[k] = reference_reflectance · measured[k] / reference_measured[k]`.
///
/// Fails with a division-hazard error (naming the wavelength) when a
/// reference bin is at or below `1e-9` of the reference maximum.
pub fn detrend(
    measured: &Spectrum,
    reference_measured: &Spectrum,
    reference_reflectance: f64,
) -> Result<Spectrum> {
    measured.same_grid(&reference_measured.grid(), "detrend")?;
    if !(reference_reflectance > 0.0 && reference_reflectance <= 1.0) {
        return Err(Error::Usage(format!(
            "reference reflectance must lie in (0, 1], got {reference_reflectance}"
        )));
    }
    let ref_max = reference_measured
        .values()
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    let threshold = DETREND_HAZARD_FRACTION * ref_max;
    let grid = measured.grid();
    let mut values = Vec::with_capacity(grid.count());
    for (k, (&m, &r)) in measured
        .values()
        .iter()
        .zip(reference_measured.values())
        .enumerate()
    {
        if r <= threshold {
            return Err(Error::DivisionHazard {
                wavelength_nm: grid.wavelength(k),
                value: r,
                threshold,
            });
        }
        values.push(reference_reflectance * m / r);
    }
    Spectrum::reflectance(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_rejected_at_validation() {
        let cfg = SpectraGenConfig::new(1, 0);
        assert!(matches!(
            generate_spectra(&cfg, WavelengthGrid::visible_5nm()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn bad_ranges_rejected() {
        let mut cfg = SpectraGenConfig::new(1, 5);
        cfg.bump_count = (0, 2);
        assert!(cfg.validate().is_err());
        cfg = SpectraGenConfig::new(1, 5);
        cfg.bump_width_nm = (80.0, 10.0);
        assert!(cfg.validate().is_err());
        cfg = SpectraGenConfig::new(1, 5);
        cfg.amplitude = (0.1, 1.5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let grid = WavelengthGrid::visible_5nm();
        let cfg = SpectraGenConfig::new(42, 50);
        let a = generate_spectra(&cfg, grid).unwrap();
        let b = generate_spectra(&cfg, grid).unwrap();
        assert_eq!(a, b);
        let other = generate_spectra(&SpectraGenConfig::new(43, 50), grid).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn spectra_are_prefix_stable_in_count() {
        // substreams are indexed per spectrum, so asking for more spectra
        // must not change the earlier ones
        let grid = WavelengthGrid::visible_5nm();
        let small = generate_spectra(&SpectraGenConfig::new(7, 10), grid).unwrap();
        let large = generate_spectra(&SpectraGenConfig::new(7, 30), grid).unwrap();
        assert_eq!(&large[..10], &small[..]);
    }

    #[test]
    fn all_values_stay_in_unit_interval() {
        let grid = WavelengthGrid::visible_5nm();
        let spectra = generate_spectra(&SpectraGenConfig::new(3, 200), grid).unwrap();
        for s in &spectra {
            assert!(s.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn unit_illuminant_is_identity() {
        let grid = WavelengthGrid::visible_5nm();
        let r = generate_spectra(&SpectraGenConfig::new(5, 1), grid).unwrap().remove(0);
        let e = Illuminant::flat(grid, 1.0).unwrap();
        let out = apply_illuminant(&r, &e).unwrap();
        assert_eq!(out.values(), r.values());
    }

    #[test]
    fn dark_illuminant_zeroes_everything() {
        let grid = WavelengthGrid::visible_5nm();
        let r = generate_spectra(&SpectraGenConfig::new(5, 1), grid).unwrap().remove(0);
        let e = Illuminant::flat(grid, 0.0).unwrap();
        let out = apply_illuminant(&r, &e).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn detrend_self_reference_is_constant_099() {
        let grid = WavelengthGrid::visible_5nm();
        let m = Spectrum::radiance(grid, (0..61).map(|k| 1.0 + k as f64).collect()).unwrap();
        let out = detrend(&m, &m, 0.99).unwrap();
        for &v in out.values() {
            assert!((v - 0.99).abs() < 1e-15);
        }
    }

    #[test]
    fn detrend_half_reference_is_0495() {
        let grid = WavelengthGrid::visible_5nm();
        let reference = Spectrum::radiance(grid, (0..61).map(|k| 2.0 + k as f64).collect()).unwrap();
        let measured =
            Spectrum::radiance(grid, reference.values().iter().map(|v| 0.5 * v).collect()).unwrap();
        let out = detrend(&measured, &reference, 0.99).unwrap();
        for &v in out.values() {
            assert!((v - 0.495).abs() < 1e-15);
        }
    }

    #[test]
    fn detrend_zero_reference_bin_is_a_hazard() {
        let grid = WavelengthGrid::new(400.0, 10.0, 3).unwrap();
        let m = Spectrum::radiance(grid, vec![1.0, 1.0, 1.0]).unwrap();
        let mut ref_vals = vec![1.0, 0.0, 1.0];
        let reference = Spectrum::radiance(grid, ref_vals.clone()).unwrap();
        let err = detrend(&m, &reference, 0.99).unwrap_err();
        match err {
            Error::DivisionHazard { wavelength_nm, .. } => assert_eq!(wavelength_nm, 410.0),
            other => panic!("expected division hazard, got {other}"),
        }
        // just above threshold is fine
        ref_vals[1] = 1e-6;
        let reference = Spectrum::radiance(grid, ref_vals).unwrap();
        assert!(detrend(&m, &reference, 1.0e-6).is_ok());
    }

    #[test]
    fn detrend_remultiply_reproduces_measurement() {
        let grid = WavelengthGrid::visible_5nm();
        let reference =
            Spectrum::radiance(grid, (0..61).map(|k| 1.0 + 0.05 * k as f64).collect()).unwrap();
        let measured =
            Spectrum::radiance(grid, reference.values().iter().map(|v| 0.37 * v).collect())
                .unwrap();
        let r = 0.99;
        let out = detrend(&measured, &reference, r).unwrap();
        for k in 0..grid.count() {
            let back = out.value(k) * reference.value(k) / r;
            assert!((back - measured.value(k)).abs() <= 1e-12 * measured.value(k).abs());
        }
    }
}

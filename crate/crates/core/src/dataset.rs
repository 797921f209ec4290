//! Training datasets of (spectrum, measurement) pairs and their archive format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fingerprint::{Fingerprint, FingerprintBuilder};
use crate::forward::forward_measure;
use crate::grid::WavelengthGrid;
use crate::measurement::Measurement;
use crate::rng::stream_rng;
use crate::sensitivity::SensitivityMatrix;
use crate::spectrum::{Spectrum, SpectrumKind};

const DATASET_MAGIC: &[u8; 8] = b"SDXDATA\0";

/// Forward-model training pairs (Λ, C) under one fingerprinted sensor.
///
/// Noiseless by default C is exactly `forward_measure(Λ, S)`; datasets built
/// with [`TrainingDataset::build_noisy`] record their noise level instead.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDataset {
    grid: WavelengthGrid,
    channel_names: Arc<Vec<String>>,
    pairs: Vec<(Spectrum, Measurement)>,
    sens_fingerprint: Fingerprint,
    noise_sigma: f64,
}

impl TrainingDataset {
    /// Noiseless dataset: every measurement comes straight off the forward model.
    pub fn build(spectra: Vec<Spectrum>, sens: &SensitivityMatrix) -> Result<Self> {
        Self::build_inner(spectra, sens, 0.0, 0)
    }

    /// Adds zero-mean Gaussian channel noise with the given sigma to every
    /// measurement (both this and the default path share the same pairs for
    /// a given spectra list; only measurements differ).
    pub fn build_noisy(
        spectra: Vec<Spectrum>,
        sens: &SensitivityMatrix,
        noise_sigma: f64,
        noise_seed: u64,
    ) -> Result<Self> {
        if !(noise_sigma > 0.0) || !noise_sigma.is_finite() {
            return Err(Error::Usage(format!(
                "noise sigma must be positive and finite, got {noise_sigma}"
            )));
        }
        Self::build_inner(spectra, sens, noise_sigma, noise_seed)
    }

    fn build_inner(
        spectra: Vec<Spectrum>,
        sens: &SensitivityMatrix,
        noise_sigma: f64,
        noise_seed: u64,
    ) -> Result<Self> {
        if spectra.is_empty() {
            return Err(Error::Usage("dataset needs at least one spectrum".into()));
        }
        let grid = sens.grid();
        let normal = if noise_sigma > 0.0 {
            Some(Normal::new(0.0, noise_sigma).expect("sigma checked above"))
        } else {
            None
        };
        let mut pairs = Vec::with_capacity(spectra.len());
        for (i, spectrum) in spectra.into_iter().enumerate() {
            spectrum.same_grid(&grid, "build_dataset")?;
            let mut c = forward_measure(&spectrum, sens)?;
            if let Some(normal) = &normal {
                let mut rng = stream_rng(noise_seed, "measurement-noise", i as u64);
                let noisy = c
                    .values()
                    .iter()
                    .map(|&v| v + normal.sample(&mut rng))
                    .collect();
                c = Measurement::new(noisy, sens.shared_names())?;
            }
            pairs.push((spectrum, c));
        }
        Ok(Self {
            grid,
            channel_names: sens.shared_names(),
            pairs,
            sens_fingerprint: sens.fingerprint(),
            noise_sigma,
        })
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn pairs(&self) -> &[(Spectrum, Measurement)] {
        &self.pairs
    }

    pub fn sens_fingerprint(&self) -> Fingerprint {
        self.sens_fingerprint
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn is_noiseless(&self) -> bool {
        self.noise_sigma == 0.0
    }

    /// Content hash over everything the trainers consume.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut b = FingerprintBuilder::new("dataset-v1");
        b.add_bytes(self.sens_fingerprint.as_bytes())
            .add_f64(self.grid.start_nm())
            .add_f64(self.grid.step_nm())
            .add_u64(self.grid.count() as u64)
            .add_f64(self.noise_sigma)
            .add_u64(self.pairs.len() as u64);
        for (lam, c) in &self.pairs {
            b.add_f64s(lam.values()).add_f64s(c.values());
        }
        b.finish()
    }

    /// Checks that this dataset belongs to `sens` and (when noiseless) that
    /// every stored measurement reproduces under the forward model to 1e-12
    /// relative.
    pub fn verify_against(&self, sens: &SensitivityMatrix) -> Result<()> {
        if sens.fingerprint() != self.sens_fingerprint {
            return Err(Error::Invalid {
                what: "dataset",
                reason: format!(
                    "sensitivity fingerprint mismatch: dataset {}, sensor {}",
                    self.sens_fingerprint,
                    sens.fingerprint()
                ),
            });
        }
        if !self.is_noiseless() {
            return Ok(());
        }
        for (i, (lam, c)) in self.pairs.iter().enumerate() {
            let recomputed = forward_measure(lam, sens)?;
            for (ch, (&got, &want)) in c.values().iter().zip(recomputed.values()).enumerate() {
                let tol = 1e-12 * want.abs().max(got.abs());
                if (got - want).abs() > tol {
                    return Err(Error::Invalid {
                        what: "dataset",
                        reason: format!(
                            "pair {i} channel {ch}: stored {got} but forward model gives {want}"
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    // -- archive format -----------------------------------------------------
    //
    // magic "SDXDATA\0", u32 format version, grid (f64 start, f64 step,
    // u64 count), u32 p, p channel names (u32 length + utf8), 32-byte sensor
    // fingerprint, f64 noise sigma, u64 pair count, then per pair: u8 kind,
    // n f64 spectrum values, p f64 measurement values. All little-endian;
    // floats as raw IEEE 754 bits, so round-trips are bit-exact.

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let io_err = |e| Error::io(&origin, e);
        let mut w = BufWriter::new(
            File::create(path).map_err(|e| Error::io(&origin, e))?,
        );
        w.write_all(DATASET_MAGIC).map_err(io_err)?;
        w.write_u32::<LittleEndian>(crate::FORMAT_VERSION).map_err(io_err)?;
        w.write_f64::<LittleEndian>(self.grid.start_nm()).map_err(io_err)?;
        w.write_f64::<LittleEndian>(self.grid.step_nm()).map_err(io_err)?;
        w.write_u64::<LittleEndian>(self.grid.count() as u64).map_err(io_err)?;
        w.write_u32::<LittleEndian>(self.channels() as u32).map_err(io_err)?;
        for name in self.channel_names.iter() {
            w.write_u32::<LittleEndian>(name.len() as u32).map_err(io_err)?;
            w.write_all(name.as_bytes()).map_err(io_err)?;
        }
        w.write_all(self.sens_fingerprint.as_bytes()).map_err(io_err)?;
        w.write_f64::<LittleEndian>(self.noise_sigma).map_err(io_err)?;
        w.write_u64::<LittleEndian>(self.pairs.len() as u64).map_err(io_err)?;
        for (lam, c) in &self.pairs {
            let kind = match lam.kind() {
                SpectrumKind::Reflectance => 0u8,
                SpectrumKind::Radiance => 1u8,
            };
            w.write_u8(kind).map_err(io_err)?;
            for &v in lam.values() {
                w.write_u64::<LittleEndian>(v.to_bits()).map_err(io_err)?;
            }
            for &v in c.values() {
                w.write_u64::<LittleEndian>(v.to_bits()).map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(&origin, e))?);
        Self::read(&mut r, &origin)
    }

    fn read<R: Read>(r: &mut R, origin: &str) -> Result<Self> {
        let io_err = |e| Error::io(origin, e);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != DATASET_MAGIC {
            return Err(Error::format(origin, "not a dataset archive (bad magic)"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io_err)?;
        if version != crate::FORMAT_VERSION {
            return Err(Error::format(
                origin,
                format!("unsupported dataset format version {version}"),
            ));
        }
        let start = r.read_f64::<LittleEndian>().map_err(io_err)?;
        let step = r.read_f64::<LittleEndian>().map_err(io_err)?;
        let count = r.read_u64::<LittleEndian>().map_err(io_err)? as usize;
        let grid = WavelengthGrid::new(start, step, count)?;
        let p = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        let mut names = Vec::with_capacity(p);
        for _ in 0..p {
            let len = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(io_err)?;
            names.push(String::from_utf8(buf).map_err(|_| {
                Error::format(origin, "channel name is not valid utf-8")
            })?);
        }
        let names = Arc::new(names);
        let mut fp = [0u8; 32];
        r.read_exact(&mut fp).map_err(io_err)?;
        let noise_sigma = r.read_f64::<LittleEndian>().map_err(io_err)?;
        let pair_count = r.read_u64::<LittleEndian>().map_err(io_err)? as usize;
        if pair_count == 0 {
            return Err(Error::format(origin, "dataset has no pairs"));
        }
        let mut pairs = Vec::with_capacity(pair_count);
        for _ in 0..pair_count {
            let kind = match r.read_u8().map_err(io_err)? {
                0 => SpectrumKind::Reflectance,
                1 => SpectrumKind::Radiance,
                other => {
                    return Err(Error::format(origin, format!("unknown spectrum kind {other}")))
                }
            };
            let mut lam = Vec::with_capacity(count);
            for _ in 0..count {
                lam.push(f64::from_bits(r.read_u64::<LittleEndian>().map_err(io_err)?));
            }
            let mut c = Vec::with_capacity(p);
            for _ in 0..p {
                c.push(f64::from_bits(r.read_u64::<LittleEndian>().map_err(io_err)?));
            }
            pairs.push((
                Spectrum::new(grid, lam, kind)?,
                Measurement::new(c, Arc::clone(&names))?,
            ));
        }
        Ok(Self {
            grid,
            channel_names: names,
            pairs,
            sens_fingerprint: Fingerprint::from_bytes(fp),
            noise_sigma,
        })
    }

    /// Inspection CSV, one row per pair: `pair,<channels...>,r<wavelengths...>`
    /// (measurement columns first, then the spectrum values).
    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let io_err = |e| Error::io(&origin, e);
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(&origin, e))?);
        write!(w, "pair").map_err(io_err)?;
        for name in self.channel_names.iter() {
            write!(w, ",{name}").map_err(io_err)?;
        }
        for wl in self.grid.wavelengths() {
            write!(w, ",r{wl}").map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
        for (i, (lam, c)) in self.pairs.iter().enumerate() {
            write!(w, "{i}").map_err(io_err)?;
            for &v in c.values() {
                write!(w, ",{v}").map_err(io_err)?;
            }
            for &v in lam.values() {
                write!(w, ",{v}").map_err(io_err)?;
            }
            writeln!(w).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specgen::{generate_spectra, SpectraGenConfig};

    fn small_dataset() -> TrainingDataset {
        let sens = crate::fixtures::fixture_sensor();
        let spectra =
            generate_spectra(&SpectraGenConfig::new(11, 20), sens.grid()).unwrap();
        TrainingDataset::build(spectra, &sens).unwrap()
    }

    #[test]
    fn identity_sensor_pairs_carry_values_through() {
        let grid = WavelengthGrid::new(400.0, 10.0, 3).unwrap();
        let sens = SensitivityMatrix::identity(grid);
        let lam = Spectrum::reflectance(grid, vec![0.2, 0.7, 0.1]).unwrap();
        let ds = TrainingDataset::build(vec![lam.clone()], &sens).unwrap();
        assert_eq!(ds.pairs()[0].1.values(), lam.values());
    }

    #[test]
    fn empty_spectra_list_is_usage_error() {
        let sens = crate::fixtures::fixture_sensor();
        assert!(matches!(
            TrainingDataset::build(vec![], &sens),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let sens = crate::fixtures::fixture_sensor();
        let other = WavelengthGrid::new(400.0, 10.0, 3).unwrap();
        let lam = Spectrum::reflectance(other, vec![0.1; 3]).unwrap();
        assert!(TrainingDataset::build(vec![lam], &sens).is_err());
    }

    #[test]
    fn archive_round_trip_is_bit_exact() {
        let ds = small_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.sdx");
        ds.save(&path).unwrap();
        let back = TrainingDataset::load(&path).unwrap();
        assert_eq!(ds, back);
        assert_eq!(ds.fingerprint(), back.fingerprint());
    }

    #[test]
    fn verify_against_accepts_owner_and_rejects_stranger() {
        let ds = small_dataset();
        let sens = crate::fixtures::fixture_sensor();
        ds.verify_against(&sens).unwrap();
        let other = SensitivityMatrix::identity(sens.grid());
        assert!(ds.verify_against(&other).is_err());
    }

    #[test]
    fn noisy_build_records_sigma_and_perturbs_measurements() {
        let sens = crate::fixtures::fixture_sensor();
        let spectra =
            generate_spectra(&SpectraGenConfig::new(11, 5), sens.grid()).unwrap();
        let clean = TrainingDataset::build(spectra.clone(), &sens).unwrap();
        let noisy = TrainingDataset::build_noisy(spectra, &sens, 0.01, 99).unwrap();
        assert!(!noisy.is_noiseless());
        assert_ne!(
            clean.pairs()[0].1.values(),
            noisy.pairs()[0].1.values()
        );
        // spectra themselves are untouched
        assert_eq!(clean.pairs()[0].0, noisy.pairs()[0].0);
        assert!(TrainingDataset::build_noisy(vec![], &sens, 0.0, 0).is_err());
    }

    #[test]
    fn csv_export_has_documented_column_order() {
        let ds = small_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        ds.export_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("pair,blue,green,red,r410,r415"));
        assert_eq!(text.lines().count(), ds.len() + 1);
    }

    #[test]
    fn truncated_archive_is_a_format_or_io_error() {
        let ds = small_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.sdx");
        ds.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(TrainingDataset::load(&path).is_err());
    }
}

//! Shared setup helpers for the criterion benchmarks.

use specdemux::dataset::TrainingDataset;
use specdemux::fixtures::fixture_sensor;
use specdemux::specgen::{generate_spectra, SpectraGenConfig};
use specdemux::{SensitivityMatrix, Spectrum};

/// The fixture sensor plus `count` generated reflectance spectra.
pub fn spectra_fixture(count: usize, seed: u64) -> (SensitivityMatrix, Vec<Spectrum>) {
    let sens = fixture_sensor();
    let spectra =
        generate_spectra(&SpectraGenConfig::new(seed, count), sens.grid()).expect("valid config");
    (sens, spectra)
}

/// A noiseless forward-model dataset of `count` pairs on the fixture sensor.
pub fn dataset_fixture(count: usize, seed: u64) -> TrainingDataset {
    let (sens, spectra) = spectra_fixture(count, seed);
    TrainingDataset::build(spectra, &sens).expect("valid dataset")
}

//! Experiment configuration: presets and the TOML file schema.
//!
//! The on-disk format is TOML with the same shape as [`ExperimentConfig`];
//! every section has defaults, so a minimal file is just `seed = ...` and
//! `out_dir = ...`. See `configs/desk.toml` in the repository root for a
//! fully spelled-out example.
//!
//! One user-facing seed drives everything; independent consumers get
//! domain-separated derived seeds (train spectra, test spectra, forest
//! bootstraps, noise), so e.g. changing the forest seed derivation can never
//! silently shift the generated spectra.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::grid::WavelengthGrid;
use crate::rng::derive_seed;
use crate::specgen::SpectraGenConfig;

/// Where a data table comes from: the built-in fixture or a CSV on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Fixture,
    Csv { path: PathBuf },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Fixture
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraSection {
    pub train_count: usize,
    pub test_count: usize,
    #[serde(default = "default_bump_count")]
    pub bump_count: (u32, u32),
    #[serde(default = "default_bump_width")]
    pub bump_width_nm: (f64, f64),
    #[serde(default = "default_amplitude")]
    pub amplitude: (f64, f64),
    /// Additive zero-mean Gaussian channel noise on every simulated
    /// measurement; omitted = noiseless (the default experiment).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
}

fn default_bump_count() -> (u32, u32) {
    (1, 4)
}

fn default_bump_width() -> (f64, f64) {
    (10.0, 80.0)
}

fn default_amplitude() -> (f64, f64) {
    (0.05, 1.0)
}

impl Default for SpectraSection {
    fn default() -> Self {
        Self {
            train_count: 2000,
            test_count: 500,
            bump_count: default_bump_count(),
            bump_width_nm: default_bump_width(),
            amplitude: default_amplitude(),
            noise_sigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerSection {
    #[serde(default = "default_ridge")]
    pub ridge_epsilon: f64,
}

fn default_ridge() -> f64 {
    crate::wiener::DEFAULT_RIDGE
}

impl Default for WienerSection {
    fn default() -> Self {
        Self {
            ridge_epsilon: default_ridge(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSection {
    pub total_trees: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
    #[serde(default = "default_min_leaf")]
    pub min_leaf_samples: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: bool,
}

fn default_max_depth() -> u32 {
    crate::forest::DEFAULT_MAX_DEPTH
}

fn default_min_leaf() -> usize {
    crate::forest::DEFAULT_MIN_LEAF
}

fn default_bootstrap() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WemSection {
    #[serde(default)]
    pub patches: DataSource,
}

impl Default for WemSection {
    fn default() -> Self {
        Self {
            patches: DataSource::Fixture,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IconSection {
    #[serde(default)]
    pub spectra: DataSource,
}

impl Default for IconSection {
    fn default() -> Self {
        Self {
            spectra: DataSource::Fixture,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSection {
    /// How many test spectra get a per-spectrum plot-data CSV.
    #[serde(default = "default_plot_count")]
    pub count: usize,
}

fn default_plot_count() -> usize {
    10
}

impl Default for PlotSection {
    fn default() -> Self {
        Self {
            count: default_plot_count(),
        }
    }
}

/// Full experiment description; presets come from [`ExperimentConfig::desk`]
/// and [`ExperimentConfig::paper`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default = "WavelengthGrid::visible_5nm")]
    pub grid: WavelengthGrid,
    #[serde(default)]
    pub sensitivity: DataSource,
    #[serde(default)]
    pub spectra: SpectraSection,
    #[serde(default)]
    pub wiener: WienerSection,
    pub forest: ForestSection,
    #[serde(default)]
    pub wem: WemSection,
    #[serde(default)]
    pub icon: IconSection,
    #[serde(default)]
    pub plots: PlotSection,
}

impl ExperimentConfig {
    /// Desk scale: 2000 train / 500 test, 30 trees per wavelength. Finishes
    /// in well under two minutes on one core.
    pub fn desk(seed: u64) -> Self {
        let grid = WavelengthGrid::visible_5nm();
        Self {
            seed,
            out_dir: PathBuf::from("runs/desk"),
            grid,
            sensitivity: DataSource::Fixture,
            spectra: SpectraSection {
                train_count: 2000,
                test_count: 500,
                ..SpectraSection::default()
            },
            wiener: WienerSection::default(),
            forest: ForestSection {
                total_trees: 30 * grid.count(),
                max_depth: default_max_depth(),
                min_leaf_samples: default_min_leaf(),
                bootstrap: true,
            },
            wem: WemSection::default(),
            icon: IconSection::default(),
            plots: PlotSection::default(),
        }
    }

    /// Published scale: 10000 train / 10000 test spectra, 8000 trees total.
    pub fn paper(seed: u64) -> Self {
        let mut cfg = Self::desk(seed);
        cfg.out_dir = PathBuf::from("runs/paper");
        cfg.spectra.train_count = 10000;
        cfg.spectra.test_count = 10000;
        cfg.forest.total_trees = 8000;
        cfg
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        WavelengthGrid::new(self.grid.start_nm(), self.grid.step_nm(), self.grid.count())?;
        if self.spectra.train_count == 0 || self.spectra.test_count == 0 {
            return Err(Error::Usage(
                "train_count and test_count must be at least 1".into(),
            ));
        }
        self.train_generator().validate()?;
        if let Some(sigma) = self.spectra.noise_sigma {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::Usage(format!(
                    "noise_sigma must be positive and finite, got {sigma}"
                )));
            }
        }
        if !(self.wiener.ridge_epsilon >= 0.0) || !self.wiener.ridge_epsilon.is_finite() {
            return Err(Error::Usage(format!(
                "ridge_epsilon must be finite and >= 0, got {}",
                self.wiener.ridge_epsilon
            )));
        }
        self.forest_config().validate(self.grid.count())?;
        Ok(())
    }

    fn generator(&self, label: &str, count: usize) -> SpectraGenConfig {
        SpectraGenConfig {
            seed: derive_seed(self.seed, label),
            count,
            bump_count: self.spectra.bump_count,
            bump_width_nm: self.spectra.bump_width_nm,
            amplitude: self.spectra.amplitude,
        }
    }

    pub fn train_generator(&self) -> SpectraGenConfig {
        self.generator("train-spectra", self.spectra.train_count)
    }

    pub fn test_generator(&self) -> SpectraGenConfig {
        self.generator("test-spectra", self.spectra.test_count)
    }

    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            total_trees: self.forest.total_trees,
            max_depth: self.forest.max_depth,
            min_leaf_samples: self.forest.min_leaf_samples,
            bootstrap: self.forest.bootstrap,
            seed: derive_seed(self.seed, "forest"),
        }
    }

    pub fn noise_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }
}

//! End-to-end experiment harness.
//!
//! [`run_simulation_experiment`] reproduces the simulated-sensor experiment:
//! generate disjoint train/test reflectance sets, train WEM (on the patch
//! set), DEMUX-WEM and DEMUX-RFM (on the forward-model dataset), demultiplex
//! the test measurements and report pooled PSNR per method, writing all
//! artifacts under the configured output directory.
//!
//! [`run_fixture_icon_experiment`] runs the identical pipeline against the
//! five named fixture icon sections. The physical icon capture cannot be
//! reproduced (its true spectra were never published), so reports from this
//! path are explicitly labeled as fixture stand-ins.
//!
//! Any stage failure aborts the run with a stage-tagged error and removes
//! whatever partial outputs were already written.

pub mod config;
pub mod report;

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::dataset::TrainingDataset;
use crate::error::{Error, Result, Stage};
use crate::fixtures;
use crate::forest::{forest_predict, forest_train, ForestModel};
use crate::forward::forward_measure;
use crate::io::{load_sensitivity_csv, load_spectra_table_csv};
use crate::measurement::Measurement;
use crate::metrics::{psnr_from_sse, spectrum_sse};
use crate::rng::stream_rng;
use crate::specgen::generate_spectra;
use crate::spectrum::{Spectrum, SpectrumKind};
use crate::wiener::{wiener_predict, wiener_train, WienerModel};

pub use config::{DataSource, ExperimentConfig};
pub use report::{ExperimentReport, MethodResult, PsnrDb, SectionPsnr, SpectrumErrors, Timings};

use rand_distr::{Distribution, Normal};

/// PSNR peak for reflectance reconstruction: the physical ceiling of 1.
pub const PSNR_PEAK: f64 = 1.0;

/// Truth plus the three method predictions for one test spectrum.
#[derive(Debug, Clone)]
pub struct PlotSpectrum {
    pub id: String,
    pub truth: Spectrum,
    pub wem: Spectrum,
    pub demux_wem: Spectrum,
    pub demux_rfm: Spectrum,
}

/// Everything a finished run leaves behind, including the in-memory models.
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub wem: WienerModel,
    pub demux_wem: WienerModel,
    pub demux_rfm: ForestModel,
    pub files: Vec<PathBuf>,
}

enum TestSet {
    Simulated,
    Icon,
}

pub fn run_simulation_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(cfg, TestSet::Simulated).map(|run| run.report)
}

pub fn run_fixture_icon_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(cfg, TestSet::Icon).map(|run| run.report)
}

/// Full runner used by the wrappers above; exposed so front ends can keep
/// the trained models.
pub fn run_experiment_full(cfg: &ExperimentConfig, icon: bool) -> Result<ExperimentRun> {
    run_experiment(cfg, if icon { TestSet::Icon } else { TestSet::Simulated })
}

// ---------------------------------------------------------------------------

/// Records every path this run creates so a failed run can clean up after
/// itself.
struct OutputTracker {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl OutputTracker {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            dirs: Vec::new(),
        }
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        if !dir.exists() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
            self.dirs.push(dir.to_path_buf());
        }
        Ok(())
    }

    fn file(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    fn remove_partial_outputs(&self) {
        for file in &self.files {
            let _ = fs::remove_file(file);
        }
        // newest dirs first so nested ones go before their parents
        for dir in self.dirs.iter().rev() {
            let _ = fs::remove_dir(dir);
        }
    }
}

fn in_stage<T>(stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| e.in_stage(stage))
}

fn run_experiment(cfg: &ExperimentConfig, test_set: TestSet) -> Result<ExperimentRun> {
    cfg.validate()?;
    let mut tracker = OutputTracker::new();
    let result = run_tracked(cfg, &test_set, &mut tracker);
    if result.is_err() {
        tracker.remove_partial_outputs();
    }
    result
}

fn run_tracked(
    cfg: &ExperimentConfig,
    test_set: &TestSet,
    tracker: &mut OutputTracker,
) -> Result<ExperimentRun> {
    let mut timings = Timings::default();
    let grid = cfg.grid;

    // -- sensitivity ---------------------------------------------------------
    let stage_start = Instant::now();
    let sens = in_stage(Stage::Sensitivity, || {
        let sens = match &cfg.sensitivity {
            DataSource::Fixture => fixtures::fixture_sensor(),
            DataSource::Csv { path } => load_sensitivity_csv(path)?,
        };
        if sens.grid() != grid {
            return Err(Error::GridMismatch {
                context: "configured grid vs sensitivity",
                expected: grid,
                actual: sens.grid(),
            });
        }
        Ok(sens)
    })?;
    timings.push("sensitivity", stage_start.elapsed().as_secs_f64());

    // -- spectra -------------------------------------------------------------
    let stage_start = Instant::now();
    let (train_spectra, test_ids, test_spectra) = in_stage(Stage::Generate, || {
        let train = generate_spectra(&cfg.train_generator(), grid)?;
        let (ids, test): (Vec<String>, Vec<Spectrum>) = match test_set {
            TestSet::Simulated => {
                let test = generate_spectra(&cfg.test_generator(), grid)?;
                let ids = (0..test.len()).map(|i| format!("s{i:05}")).collect();
                (ids, test)
            }
            TestSet::Icon => {
                let table = match &cfg.icon.spectra {
                    DataSource::Fixture => fixtures::fixture_icon_spectra(),
                    DataSource::Csv { path } => load_spectra_table_csv(path)?,
                };
                if table.grid() != grid {
                    return Err(Error::GridMismatch {
                        context: "configured grid vs icon spectra",
                        expected: grid,
                        actual: table.grid(),
                    });
                }
                (
                    table.names().to_vec(),
                    table.to_spectra(SpectrumKind::Reflectance)?,
                )
            }
        };
        // train/test disjointness, bitwise
        let train_keys: HashSet<Vec<u64>> = train
            .iter()
            .map(|s| s.values().iter().map(|v| v.to_bits()).collect())
            .collect();
        for (id, spectrum) in ids.iter().zip(&test) {
            let key: Vec<u64> = spectrum.values().iter().map(|v| v.to_bits()).collect();
            if train_keys.contains(&key) {
                return Err(Error::Invalid {
                    what: "test set",
                    reason: format!("test spectrum {id} is bitwise equal to a training spectrum"),
                });
            }
        }
        Ok((train, ids, test))
    })?;
    timings.push("generate", stage_start.elapsed().as_secs_f64());

    // -- datasets ------------------------------------------------------------
    let stage_start = Instant::now();
    let (train_ds, wem_ds) = in_stage(Stage::Dataset, || {
        let train_ds = match cfg.spectra.noise_sigma {
            None => TrainingDataset::build(train_spectra, &sens)?,
            Some(sigma) => TrainingDataset::build_noisy(
                train_spectra,
                &sens,
                sigma,
                cfg.noise_seed("train-noise"),
            )?,
        };
        let patches = match &cfg.wem.patches {
            DataSource::Fixture => fixtures::fixture_wem_patches(),
            DataSource::Csv { path } => load_spectra_table_csv(path)?,
        };
        if patches.grid() != grid {
            return Err(Error::GridMismatch {
                context: "configured grid vs wem patches",
                expected: grid,
                actual: patches.grid(),
            });
        }
        let patch_spectra = patches.to_spectra(SpectrumKind::Reflectance)?;
        let wem_ds = match cfg.spectra.noise_sigma {
            None => TrainingDataset::build(patch_spectra, &sens)?,
            Some(sigma) => TrainingDataset::build_noisy(
                patch_spectra,
                &sens,
                sigma,
                cfg.noise_seed("wem-noise"),
            )?,
        };
        Ok((train_ds, wem_ds))
    })?;
    timings.push("datasets", stage_start.elapsed().as_secs_f64());

    // -- training ------------------------------------------------------------
    let stage_start = Instant::now();
    let wem =
        in_stage(Stage::TrainWem, || wiener_train(&wem_ds, cfg.wiener.ridge_epsilon))?;
    timings.push("train-wem", stage_start.elapsed().as_secs_f64());

    let stage_start = Instant::now();
    let demux_wem = in_stage(Stage::TrainDemuxWem, || {
        wiener_train(&train_ds, cfg.wiener.ridge_epsilon)
    })?;
    timings.push("train-demux-wem", stage_start.elapsed().as_secs_f64());

    let stage_start = Instant::now();
    let demux_rfm =
        in_stage(Stage::TrainDemuxRfm, || forest_train(&train_ds, &cfg.forest_config()))?;
    timings.push("train-demux-rfm", stage_start.elapsed().as_secs_f64());

    // -- prediction ----------------------------------------------------------
    let stage_start = Instant::now();
    let noise = cfg
        .spectra
        .noise_sigma
        .map(|sigma| Normal::new(0.0, sigma).expect("sigma validated"));
    let test_noise_seed = cfg.noise_seed("test-noise");

    let mut rows = Vec::with_capacity(test_spectra.len());
    let mut plots = Vec::new();
    let mut totals = [0.0f64; 3];
    in_stage(Stage::Predict, || {
        for (i, (id, truth)) in test_ids.iter().zip(&test_spectra).enumerate() {
            let mut c = forward_measure(truth, &sens)?;
            if let Some(normal) = &noise {
                let mut rng = stream_rng(test_noise_seed, "measurement-noise", i as u64);
                c = Measurement::new(
                    c.values().iter().map(|&v| v + normal.sample(&mut rng)).collect(),
                    sens.shared_names(),
                )?;
            }
            let pred_wem = wiener_predict(&wem, &c, false)?;
            let pred_dwem = wiener_predict(&demux_wem, &c, false)?;
            let pred_rfm = forest_predict(&demux_rfm, &c)?;
            let sse = [
                spectrum_sse(truth, &pred_wem)?,
                spectrum_sse(truth, &pred_dwem)?,
                spectrum_sse(truth, &pred_rfm)?,
            ];
            for (t, s) in totals.iter_mut().zip(sse) {
                *t += s;
            }
            rows.push(SpectrumErrors {
                id: id.clone(),
                wem: sse[0],
                demux_wem: sse[1],
                demux_rfm: sse[2],
            });
            let want_plot = match test_set {
                TestSet::Simulated => i < cfg.plots.count,
                TestSet::Icon => true,
            };
            if want_plot {
                plots.push(PlotSpectrum {
                    id: id.clone(),
                    truth: truth.clone(),
                    wem: pred_wem,
                    demux_wem: pred_dwem,
                    demux_rfm: pred_rfm,
                });
            }
        }
        Ok(())
    })?;
    timings.push("predict", stage_start.elapsed().as_secs_f64());

    // -- report --------------------------------------------------------------
    let stage_start = Instant::now();
    let value_count = test_spectra.len() * grid.count();
    let methods = ["wem", "demux-wem", "demux-rfm"]
        .iter()
        .zip(totals)
        .map(|(name, total_sse)| MethodResult {
            method: name.to_string(),
            psnr_db: PsnrDb(psnr_from_sse(total_sse, value_count, PSNR_PEAK)),
            total_sse,
            value_count,
        })
        .collect();

    let sections = match test_set {
        TestSet::Simulated => None,
        TestSet::Icon => Some(
            rows.iter()
                .map(|row| {
                    let per = |sse| PsnrDb(psnr_from_sse(sse, grid.count(), PSNR_PEAK));
                    SectionPsnr {
                        section: row.id.clone(),
                        wem: per(row.wem),
                        demux_wem: per(row.demux_wem),
                        demux_rfm: per(row.demux_rfm),
                    }
                })
                .collect(),
        ),
    };

    let (kind, label) = match test_set {
        TestSet::Simulated => (
            "simulation",
            "simulated sensor, randomized held-out test spectra".to_string(),
        ),
        TestSet::Icon => (
            "fixture-icon",
            "FIXTURE STAND-IN for the physical icon capture; real icon spectra \
             are not published, so fixture section spectra exercise the same \
             pipeline"
                .to_string(),
        ),
    };

    // the echoed config identifies the experiment; where it was written is
    // environmental and would break byte-level run comparison
    let mut config_echo = cfg.clone();
    config_echo.out_dir = PathBuf::new();

    let mut report = ExperimentReport {
        kind: kind.to_string(),
        label,
        library_version: crate::VERSION.to_string(),
        format_version: crate::FORMAT_VERSION,
        config: config_echo,
        psnr_peak: PSNR_PEAK,
        sensitivity_fingerprint: sens.fingerprint(),
        train_dataset_fingerprint: train_ds.fingerprint(),
        wem_dataset_fingerprint: wem_ds.fingerprint(),
        methods,
        per_spectrum_sse: rows,
        sections,
        determinism_hash: String::new(),
        timings: Timings::default(),
    };
    report.seal();

    let files = in_stage(Stage::Report, || {
        write_artifacts(cfg, &report, &wem, &demux_wem, &demux_rfm, &plots, tracker)
    })?;
    timings.push("report", stage_start.elapsed().as_secs_f64());

    // timings land next to the report but never inside it
    let timings_path = tracker.file(cfg.out_dir.join("timings.txt"));
    fs::write(&timings_path, timings.to_text())
        .map_err(|e| Error::io(timings_path.display().to_string(), e).in_stage(Stage::Report))?;
    report.timings = timings;

    Ok(ExperimentRun {
        report,
        wem,
        demux_wem,
        demux_rfm,
        files,
    })
}

fn write_artifacts(
    cfg: &ExperimentConfig,
    report: &ExperimentReport,
    wem: &WienerModel,
    demux_wem: &WienerModel,
    demux_rfm: &ForestModel,
    plots: &[PlotSpectrum],
    tracker: &mut OutputTracker,
) -> Result<Vec<PathBuf>> {
    let out = &cfg.out_dir;
    tracker.ensure_dir(out)?;

    let report_json = tracker.file(out.join("report.json"));
    fs::write(&report_json, report.to_json())
        .map_err(|e| Error::io(report_json.display().to_string(), e))?;

    let report_txt = tracker.file(out.join("report.txt"));
    fs::write(&report_txt, report.to_text())
        .map_err(|e| Error::io(report_txt.display().to_string(), e))?;

    let errors_csv = tracker.file(out.join("errors.csv"));
    let mut text = String::from("id,wem_sse,demux_wem_sse,demux_rfm_sse\n");
    for row in &report.per_spectrum_sse {
        text.push_str(&format!(
            "{},{},{},{}\n",
            row.id, row.wem, row.demux_wem, row.demux_rfm
        ));
    }
    fs::write(&errors_csv, text).map_err(|e| Error::io(errors_csv.display().to_string(), e))?;

    let wem_path = tracker.file(out.join("wem.model"));
    wem.save(&wem_path)?;
    let dwem_path = tracker.file(out.join("demux_wem.model"));
    demux_wem.save(&dwem_path)?;
    let rfm_path = tracker.file(out.join("demux_rfm.model"));
    demux_rfm.save(&rfm_path)?;

    let plots_dir = out.join("plots");
    tracker.ensure_dir(&plots_dir)?;
    let mut files = vec![report_json, report_txt, errors_csv, wem_path, dwem_path, rfm_path];
    for path in emit_plot_data(&plots_dir, plots)? {
        files.push(tracker.file(path));
    }
    Ok(files)
}

/// Writes one CSV per test spectrum with the truth and all three
/// predictions, ready for external plotting.
pub fn emit_plot_data(dir: &Path, rows: &[PlotSpectrum]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(rows.len());
    for row in rows {
        let path = dir.join(format!("{}.csv", row.id));
        let origin = path.display().to_string();
        let mut file =
            fs::File::create(&path).map_err(|e| Error::io(origin.clone(), e))?;
        let io_err = |e| Error::io(&origin, e);
        writeln!(file, "wavelength_nm,truth,wem,demux_wem,demux_rfm").map_err(io_err)?;
        let grid = row.truth.grid();
        for k in 0..grid.count() {
            writeln!(
                file,
                "{},{},{},{},{}",
                grid.wavelength(k),
                row.truth.value(k),
                row.wem.value(k),
                row.demux_wem.value(k),
                row.demux_rfm.value(k)
            )
            .map_err(io_err)?;
        }
        written.push(path);
    }
    Ok(written)
}

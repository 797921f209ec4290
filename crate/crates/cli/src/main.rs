//! `specdemux` — command-line front end for the spectral demultiplexing
//! pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error,
//! 3 numerical/conditioning error. Errors go to stderr; results go to files
//! or stdout.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use specdemux::dataset::TrainingDataset;
use specdemux::error::ErrorCategory;
use specdemux::forest::{forest_train, ForestConfig};
use specdemux::harness::{
    emit_plot_data, run_experiment_full, ExperimentConfig, PlotSpectrum,
};
use specdemux::io::{
    load_measurement_batch_csv, load_sensitivity_csv, load_spectra_table_csv,
    save_sensitivity_csv, save_spectra_table_csv, save_spectrum_csv, SpectraTable,
};
use specdemux::metrics::{psnr_from_sse, spectrum_sse};
use specdemux::models::{load_any_model, AnyModel};
use specdemux::specgen::{generate_spectra, SpectraGenConfig};
use specdemux::wiener::{wiener_train, DEFAULT_RIDGE};
use specdemux::{
    fixtures, validate_sensitivity, Error, Measurement, Result, SensitivityMatrix, Spectrum,
    SpectrumKind,
};

const VERSION_STRING: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (library ",
    env!("CARGO_PKG_VERSION"),
    ", format v1)"
);

#[derive(Parser)]
#[command(
    name = "specdemux",
    version = VERSION_STRING,
    about = "Reconstructs high-resolution reflectance spectra from CFA sensor measurements",
    propagate_version = true
)]
struct Cli {
    /// Seed for randomized steps (generation, bootstraps).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Experiment configuration TOML (`experiment` subcommands).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect or export sensor sensitivity curves.
    Sensor {
        #[command(subcommand)]
        action: SensorAction,
    },
    /// Build a (spectrum, measurement) training dataset via the forward model.
    Generate(GenerateArgs),
    /// Train a demultiplexer on a dataset archive.
    Train(TrainArgs),
    /// Demultiplex measurements with a trained model.
    Demux(DemuxArgs),
    /// Pooled PSNR of a model against a labeled dataset.
    Evaluate(EvaluateArgs),
    /// Run the end-to-end experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Per-spectrum CSVs of truth and all three method predictions.
    PlotData(PlotDataArgs),
    /// Print header and shape information for a model file.
    ModelInfo {
        /// Model file (wiener or forest).
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Subcommand)]
enum SensorAction {
    /// Report channel peaks, support ranges and matrix rank.
    Validate {
        /// `fixture` or a sensitivity CSV path.
        #[arg(long, default_value = "fixture")]
        sensor: String,
    },
    /// Write sensitivity curves as CSV (to --out).
    Export {
        /// `fixture` or a sensitivity CSV path.
        #[arg(long, default_value = "fixture")]
        sensor: String,
    },
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of random spectra to generate.
    #[arg(long, conflicts_with = "spectra")]
    count: Option<usize>,
    /// Take spectra from a wide CSV table instead of generating.
    #[arg(long)]
    spectra: Option<PathBuf>,
    /// `fixture` or a sensitivity CSV path.
    #[arg(long, default_value = "fixture")]
    sensor: String,
    /// Additive Gaussian channel noise sigma (default: noiseless).
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Also export the dataset as CSV for inspection.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Wiener estimator (classically trained on a patch dataset).
    Wem,
    /// Wiener estimator trained on a forward-model dataset.
    DemuxWem,
    /// Random-forest demultiplexer.
    DemuxRfm,
}

#[derive(Args)]
struct TrainArgs {
    /// wem / demux-wem (linear) or demux-rfm (forest).
    #[arg(long, value_enum)]
    method: Method,
    /// Training dataset archive.
    #[arg(long)]
    data: PathBuf,
    /// Trace-scaled ridge for the linear methods.
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    ridge: f64,
    /// Total tree count for demux-rfm (default: 30 per wavelength).
    #[arg(long)]
    trees: Option<usize>,
    /// Maximum tree depth for demux-rfm.
    #[arg(long, default_value_t = specdemux::forest::DEFAULT_MAX_DEPTH)]
    depth: u32,
    /// Minimum samples per leaf for demux-rfm.
    #[arg(long, default_value_t = specdemux::forest::DEFAULT_MIN_LEAF)]
    min_leaf: usize,
    /// Train every tree on the full dataset instead of bootstrap resamples.
    #[arg(long)]
    no_bootstrap: bool,
}

#[derive(Args)]
struct DemuxArgs {
    /// Trained model file (wiener or forest).
    #[arg(long)]
    model: PathBuf,
    /// Inline measurement: comma-separated channel values.
    #[arg(long, conflicts_with = "batch")]
    measurement: Option<String>,
    /// CSV batch of measurements (header = channel names).
    #[arg(long)]
    batch: Option<PathBuf>,
    /// Clamp linear predictions into [0, 1].
    #[arg(long)]
    clamp: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Labeled dataset archive to evaluate against.
    #[arg(long)]
    data: PathBuf,
    /// PSNR peak value.
    #[arg(long, default_value_t = 1.0)]
    peak: f64,
    /// Write the per-spectrum squared-error table here.
    #[arg(long)]
    errors: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// 2000 train / 500 test spectra, 30 trees per wavelength.
    Desk,
    /// 10000 train / 10000 test spectra, 8000 trees.
    Paper,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Built-in scale preset (ignored when --config is given).
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Simulated-sensor experiment on randomized held-out spectra.
    Run(ExperimentArgs),
    /// Fixture stand-in for the physical icon experiment.
    Icon(ExperimentArgs),
}

#[derive(Args)]
struct PlotDataArgs {
    /// Labeled dataset providing truth spectra and measurements.
    #[arg(long)]
    data: PathBuf,
    /// Trained WEM model file.
    #[arg(long)]
    wem: PathBuf,
    /// Trained DEMUX-WEM model file.
    #[arg(long)]
    demux_wem: PathBuf,
    /// Trained DEMUX-RFM model file.
    #[arg(long)]
    demux_rfm: PathBuf,
    /// How many spectra to emit (from the start of the dataset).
    #[arg(long, default_value_t = 10)]
    count: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err.category() {
                ErrorCategory::Usage => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Numerical => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sensor { ref action } => match action {
            SensorAction::Validate { sensor } => sensor_validate(sensor),
            SensorAction::Export { sensor } => sensor_export(sensor, required_out(&cli)?),
        },
        Command::Generate(ref args) => generate(&cli, args),
        Command::Train(ref args) => train(&cli, args),
        Command::Demux(ref args) => demux(&cli, args),
        Command::Evaluate(ref args) => evaluate(args),
        Command::Experiment { ref action } => experiment(&cli, action),
        Command::PlotData(ref args) => plot_data(&cli, args),
        Command::ModelInfo { ref model } => model_info(model),
    }
}

fn required_out(cli: &Cli) -> Result<PathBuf> {
    cli.out
        .clone()
        .ok_or_else(|| Error::Usage("this subcommand requires --out".into()))
}

fn load_sensor(spec: &str) -> Result<SensitivityMatrix> {
    if spec == "fixture" {
        Ok(fixtures::fixture_sensor())
    } else {
        load_sensitivity_csv(spec)
    }
}

fn sensor_validate(spec: &str) -> Result<()> {
    let sens = load_sensor(spec)?;
    println!("grid: {}", sens.grid());
    println!("fingerprint: {}", sens.fingerprint());
    println!("{}", validate_sensitivity(&sens));
    Ok(())
}

fn sensor_export(spec: &str, out: PathBuf) -> Result<()> {
    let sens = load_sensor(spec)?;
    save_sensitivity_csv(&sens, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn generate(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let out = required_out(cli)?;
    let sens = load_sensor(&args.sensor)?;
    let spectra = match (&args.spectra, args.count) {
        (Some(path), _) => {
            load_spectra_table_csv(path)?.to_spectra(SpectrumKind::Reflectance)?
        }
        (None, Some(count)) => {
            let cfg = SpectraGenConfig::new(cli.seed.unwrap_or(0), count);
            generate_spectra(&cfg, sens.grid())?
        }
        (None, None) => {
            return Err(Error::Usage(
                "generate needs either --count or --spectra".into(),
            ))
        }
    };
    let dataset = match args.noise_sigma {
        None => TrainingDataset::build(spectra, &sens)?,
        Some(sigma) => {
            TrainingDataset::build_noisy(spectra, &sens, sigma, cli.seed.unwrap_or(0))?
        }
    };
    dataset.save(&out)?;
    if let Some(csv) = &args.csv {
        dataset.export_csv(csv)?;
    }
    println!(
        "wrote {} ({} pairs, {} channels, sensor {})",
        out.display(),
        dataset.len(),
        dataset.channels(),
        dataset.sens_fingerprint()
    );
    Ok(())
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let out = required_out(cli)?;
    let dataset = TrainingDataset::load(&args.data)?;
    match args.method {
        Method::Wem | Method::DemuxWem => {
            let model = wiener_train(&dataset, args.ridge)?;
            model.save(&out)?;
            println!(
                "wrote {} (wiener, {}x{}, ridge {})",
                out.display(),
                model.grid().count(),
                model.channels(),
                model.ridge_epsilon()
            );
        }
        Method::DemuxRfm => {
            let n = dataset.grid().count();
            let config = ForestConfig {
                total_trees: args.trees.unwrap_or(30 * n),
                max_depth: args.depth,
                min_leaf_samples: args.min_leaf,
                bootstrap: !args.no_bootstrap,
                seed: cli.seed.unwrap_or(0),
            };
            let model = forest_train(&dataset, &config)?;
            model.save(&out)?;
            let stats = model.stats();
            println!(
                "wrote {} (forest, {} trees, {} nodes)",
                out.display(),
                stats.total_trees,
                stats.node_count
            );
        }
    }
    Ok(())
}

fn parse_inline_measurement(text: &str, model: &AnyModel) -> Result<Measurement> {
    let values = text
        .split(',')
        .map(|field| {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Usage(format!("'{}' is not a number in --measurement", field.trim()))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let names = match model {
        AnyModel::Wiener(m) => m.channel_names().to_vec(),
        AnyModel::Forest(m) => m.channel_names().to_vec(),
    };
    if values.len() != names.len() {
        return Err(Error::Dimension {
            context: "inline measurement",
            expected: names.len(),
            actual: values.len(),
        });
    }
    Measurement::new(values, Arc::new(names))
}

fn demux(cli: &Cli, args: &DemuxArgs) -> Result<()> {
    let model = load_any_model(&args.model)?;
    match (&args.measurement, &args.batch) {
        (Some(inline), None) => {
            let c = parse_inline_measurement(inline, &model)?;
            let spectrum = model.predict(&c, args.clamp)?;
            match &cli.out {
                Some(path) => {
                    save_spectrum_csv(&spectrum, path)?;
                    println!("wrote {}", path.display());
                }
                None => {
                    println!("wavelength_nm,value");
                    let grid = spectrum.grid();
                    for k in 0..grid.count() {
                        println!("{},{}", grid.wavelength(k), spectrum.value(k));
                    }
                }
            }
            Ok(())
        }
        (None, Some(batch)) => {
            let measurements = load_measurement_batch_csv(batch)?;
            let spectra = measurements
                .iter()
                .map(|c| model.predict(c, args.clamp))
                .collect::<Result<Vec<Spectrum>>>()?;
            let names: Vec<String> = (0..spectra.len()).map(|i| format!("m{i:05}")).collect();
            let table = SpectraTable::from_spectra(&names, &spectra)?;
            match &cli.out {
                Some(path) => {
                    save_spectra_table_csv(&table, path)?;
                    println!("wrote {} ({} spectra)", path.display(), spectra.len());
                }
                None => print!("{}", render_table(&table)),
            }
            Ok(())
        }
        _ => Err(Error::Usage(
            "demux needs exactly one of --measurement or --batch".into(),
        )),
    }
}

fn render_table(table: &SpectraTable) -> String {
    let mut out = String::from("wavelength_nm");
    for name in table.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let grid = table.grid();
    for k in 0..grid.count() {
        out.push_str(&grid.wavelength(k).to_string());
        for i in 0..table.len() {
            out.push(',');
            out.push_str(&table.column(i)[k].to_string());
        }
        out.push('\n');
    }
    out
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let model = load_any_model(&args.model)?;
    let dataset = TrainingDataset::load(&args.data)?;
    if dataset.grid() != model.grid() {
        return Err(Error::GridMismatch {
            context: "evaluate",
            expected: model.grid(),
            actual: dataset.grid(),
        });
    }
    let mut rows = Vec::with_capacity(dataset.len());
    let mut total = 0.0;
    for (i, (truth, c)) in dataset.pairs().iter().enumerate() {
        let pred = model.predict(c, false)?;
        let sse = spectrum_sse(truth, &pred)?;
        total += sse;
        rows.push((i, sse));
    }
    let value_count = dataset.len() * dataset.grid().count();
    let psnr = psnr_from_sse(total, value_count, args.peak);
    println!(
        "psnr_db: {}",
        if psnr.is_infinite() { "+inf".to_string() } else { format!("{psnr:.4}") }
    );
    println!("pairs: {}  mse: {:e}", dataset.len(), total / value_count as f64);
    if let Some(path) = &args.errors {
        let mut text = String::from("pair,sse\n");
        for (i, sse) in rows {
            text.push_str(&format!("{i},{sse}\n"));
        }
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn resolve_config(cli: &Cli, args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml_path(path)?,
        None => match args.preset {
            Preset::Desk => ExperimentConfig::desk(42),
            Preset::Paper => ExperimentConfig::paper(42),
        },
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(cli: &Cli, action: &ExperimentAction) -> Result<()> {
    let (args, icon) = match action {
        ExperimentAction::Run(args) => (args, false),
        ExperimentAction::Icon(args) => (args, true),
    };
    let cfg = resolve_config(cli, args)?;
    let run = run_experiment_full(&cfg, icon)?;
    print!("{}", run.report.to_text());
    println!("\nartifacts in {}", cfg.out_dir.display());
    Ok(())
}

fn plot_data(cli: &Cli, args: &PlotDataArgs) -> Result<()> {
    let out = required_out(cli)?;
    let dataset = TrainingDataset::load(&args.data)?;
    let wem = load_any_model(&args.wem)?;
    let demux_wem = load_any_model(&args.demux_wem)?;
    let demux_rfm = load_any_model(&args.demux_rfm)?;
    let rows = dataset
        .pairs()
        .iter()
        .take(args.count)
        .enumerate()
        .map(|(i, (truth, c))| {
            Ok(PlotSpectrum {
                id: format!("s{i:05}"),
                truth: truth.clone(),
                wem: wem.predict(c, false)?,
                demux_wem: demux_wem.predict(c, false)?,
                demux_rfm: demux_rfm.predict(c, false)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
    let written = emit_plot_data(&out, &rows)?;
    println!("wrote {} files to {}", written.len(), out.display());
    Ok(())
}

fn model_info(path: &PathBuf) -> Result<()> {
    match load_any_model(path)? {
        AnyModel::Wiener(m) => {
            println!("kind: wiener");
            println!("grid: {}", m.grid());
            println!("channels: {} ({})", m.channels(), m.channel_names().join(", "));
            println!("ridge_epsilon: {}", m.ridge_epsilon());
            println!("frobenius_norm: {:.6}", m.frobenius_norm());
            println!("training_fingerprint: {}", m.training_fingerprint());
        }
        AnyModel::Forest(m) => {
            println!("kind: forest");
            println!("grid: {}", m.grid());
            println!("channels: {} ({})", m.channels(), m.channel_names().join(", "));
            let cfg = m.config();
            println!(
                "config: {} trees, max depth {}, min leaf {}, bootstrap {}, seed {}",
                cfg.total_trees, cfg.max_depth, cfg.min_leaf_samples, cfg.bootstrap, cfg.seed
            );
            println!("training_fingerprint: {}", m.training_fingerprint());
            print!("{}", m.stats());
        }
    }
    Ok(())
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use raman_cnn::model::{predict, ArchConfig};
use raman_cnn::optim::{kfold_cv_with, train_with, TrainConfig};
use raman_cnn::preprocess::BaselineMode;
use raman_cnn::specgen::{
    gen_common_peak_dataset, gen_mixture_dataset, gen_pure_library, ItemMeta, LabeledDataset, LibraryConfig, PeakDatasetConfig,
    MIX_RATIO_RANGE,
};
use raman_cnn::viz::{contribution_map, MapKind};
use raman_cnn_cli::bundle::{read_label_file, Bundle};
use raman_cnn_cli::checkpoint::Checkpoint;
use raman_cnn_cli::experiments::{self, MixtureOptions, PeakRunConfig, SweepOptions};
use raman_cnn_cli::export::{export_map, method_name};
use raman_cnn_cli::ingest::{ingest_records, read_spectrum_csv};
use raman_cnn_cli::{fsio, Error};
use serde_json::json;

/// Train a 1D CNN on Raman-like spectra and export contribution maps.
#[derive(Parser)]
#[command(name = "raman-cnn", version, about)]
struct Cli {
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset bundle.
    Synth(SynthArgs),
    /// Preprocess measured spectra from CSV into a dataset bundle.
    Ingest(IngestArgs),
    /// Train a model on a dataset bundle.
    Train(TrainArgs),
    /// Export contribution maps as CSV and SVG.
    Visualize(VisualizeArgs),
    /// Run a complete experiment and write a report.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// One Lorentzian peak per class.
    Peaks,
    /// Class peak plus random distractor peaks.
    Common,
    /// One pure multi-peak spectrum per class.
    Library,
    /// Pairwise mixtures of a pure library.
    Mixture,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Output bundle directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Class peak channels.
    #[arg(long, value_delimiter = ',', default_value = "100,500,1000")]
    positions: Vec<f64>,
    /// Spectra per class [default: 20 for peaks, 100 for common].
    #[arg(long)]
    per_class: Option<usize>,
    /// Channels per spectrum [default: 1024 for peaks/common, 1451 otherwise].
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, default_value_t = 4.0)]
    fwhm: f64,
    /// Noise half-width relative to each spectrum's maximum.
    #[arg(long, default_value_t = 0.025)]
    noise: f64,
    /// Random peaks per spectrum for `common`.
    #[arg(long, default_value_t = 3)]
    random_peaks: usize,
    /// Pure spectra for `library` and `mixture`.
    #[arg(long, default_value_t = 20)]
    classes: usize,
    /// Mixtures per ordered class pair.
    #[arg(long, default_value_t = 5)]
    per_pair: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Chord,
    LeastSquares,
}

#[derive(Args)]
struct IngestArgs {
    /// CSV with `wavenumber,intensity[,spectrum_id]` rows.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "chord")]
    baseline: Baseline,
    /// Optional `id,class` file.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Class count recorded with the labels [default: largest label + 1].
    #[arg(long)]
    classes: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset bundle directory.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint path; histories and fold checkpoints are written beside it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cross-validation folds (0 trains one model on everything).
    #[arg(long, default_value_t = 0)]
    kfold: usize,
    #[arg(long, default_value_t = 64)]
    filters: usize,
    #[arg(long, default_value_t = 8)]
    filter_size: usize,
    /// Expected class count; must match the dataset.
    #[arg(long)]
    classes: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Gradcam,
    Fcmap,
}

#[derive(Args)]
struct VisualizeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset bundle directory or spectrum CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Target class [default: the predicted class of each spectrum].
    #[arg(long)]
    class: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentName {
    #[value(name = "filter_sweep")]
    FilterSweep,
    #[value(name = "common_peak")]
    CommonPeak,
    #[value(name = "mixture")]
    Mixture,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: ExperimentName,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Filter count (fixed count during the size sweep).
    #[arg(long)]
    filters: Option<usize>,
    /// Filter size (fixed size during the count sweep).
    #[arg(long)]
    filter_size: Option<usize>,
    /// Training spectra per class for peak experiments.
    #[arg(long)]
    per_class: Option<usize>,
    /// Filter sizes to sweep.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Filter counts to sweep.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    /// Pure spectra in the mixture experiment.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_pair: Option<usize>,
    #[arg(long)]
    kfold: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "warn",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(err) = e.downcast_ref::<Error>() {
        return err.exit_code() as u8;
    }
    match e.downcast_ref::<raman_cnn::Error>() {
        Some(raman_cnn::Error::NonFinite { .. }) => 3,
        _ => 2,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train(a),
        Command::Visualize(a) => visualize(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Error::Usage(message.into()).into()
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (kind, dataset, recipe) = match a.kind {
        SynthKind::Peaks | SynthKind::Common => {
            let common = matches!(a.kind, SynthKind::Common);
            let cfg = PeakDatasetConfig {
                positions: a.positions.clone(),
                per_class: a.per_class.unwrap_or(if common { 100 } else { 20 }),
                length: a.length.unwrap_or(1024),
                fwhm: a.fwhm,
                noise: a.noise,
                ..PeakDatasetConfig::three_peaks(0)
            }
            .with_random_peaks(if common { a.random_peaks } else { 0 });
            let ds = gen_common_peak_dataset(&cfg, &mut rng).map_err(|e| usage(e.to_string()))?;
            (if common { "common" } else { "peaks" }, ds, serde_json::to_value(&cfg)?)
        }
        SynthKind::Library | SynthKind::Mixture => {
            let cfg = LibraryConfig::new(a.classes, a.length.unwrap_or(raman_cnn::preprocess::GRID_LEN));
            let library = gen_pure_library(&cfg, &mut rng).map_err(|e| usage(e.to_string()))?;
            if matches!(a.kind, SynthKind::Library) {
                let n = library.len();
                let ds = LabeledDataset::new(library, (0..n).collect(), n, vec![ItemMeta::default(); n])?;
                ("library", ds, json!({ "library": cfg }))
            } else {
                let ds = gen_mixture_dataset(&library, a.per_pair, MIX_RATIO_RANGE, &mut rng).map_err(|e| usage(e.to_string()))?;
                let recipe = json!({ "library": cfg, "per_pair": a.per_pair, "ratio_range": MIX_RATIO_RANGE });
                ("mixture", ds, recipe)
            }
        }
    };
    Bundle::from_dataset(&dataset, kind, Some(a.seed), recipe)?.write(&a.out)?;
    log::info!("wrote {} spectra ({} classes) to {}", dataset.len(), dataset.n_classes, a.out.display());
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let records = read_spectrum_csv(&a.input)?;
    let baseline = match a.baseline {
        Baseline::Chord => BaselineMode::EndpointChord,
        Baseline::LeastSquares => BaselineMode::LeastSquares,
    };
    let mut bundle = ingest_records(&records, baseline)?;
    if let Some(path) = &a.labels {
        let labels = read_label_file(path, &bundle.ids, a.classes)?;
        bundle.meta.n_classes = Some(a.classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1)));
        bundle.labels = Some(labels);
    }
    bundle.write(&a.out)?;
    log::info!("wrote {} preprocessed spectra to {}", bundle.len(), a.out.display());
    Ok(())
}

/// `dir/name.ext` becomes `dir/name.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn train(a: TrainArgs) -> Result<()> {
    let bundle = Bundle::read(&a.data).with_context(|| format!("reading dataset {}", a.data.display()))?;
    let dataset = bundle.labeled(&a.data)?;
    if let Some(n) = a.classes {
        if n != dataset.n_classes {
            return Err(Error::format(&a.data, format!("dataset has {} classes, --classes says {n}", dataset.n_classes)).into());
        }
    }
    let arch = ArchConfig::new(dataset.input_length(), dataset.n_classes).with_filters(a.filters, a.filter_size);
    arch.validate().map_err(|e| usage(e.to_string()))?;
    let cfg = TrainConfig {
        batch_size: a.batch,
        kfold: a.kfold,
        ..TrainConfig::new(a.lr, a.epochs, a.seed)
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let log_epoch = |s: &raman_cnn::optim::EpochStats| {
        log::debug!("epoch {} loss {:.5} accuracy {:.3}", s.epoch + 1, s.loss, s.accuracy);
    };

    if a.kfold == 0 {
        let (params, history) = train_with(&arch, &dataset, &cfg, log_epoch)?;
        Checkpoint::new(params, a.seed, Some(cfg)).save(&a.out)?;
        fsio::write_json(&sibling(&a.out, "history.json"), &history)?;
        log::info!(
            "final loss {:.5}, training accuracy {:.3}; checkpoint {}",
            history.epoch_loss.last().copied().unwrap_or(f64::NAN),
            history.epoch_accuracy.last().copied().unwrap_or(f64::NAN),
            a.out.display()
        );
    } else {
        let mut save_error = None;
        let result = kfold_cv_with(&arch, &dataset, &cfg, |fold, params, _| {
            let path = sibling(&a.out, &format!("fold{}.json", fold + 1));
            let fold_cfg = TrainConfig {
                seed: cfg.seed.wrapping_add(fold as u64),
                ..cfg.clone()
            };
            if let Err(e) = Checkpoint::new(params.clone(), fold_cfg.seed, Some(fold_cfg)).save(&path) {
                let message = e.to_string();
                save_error = Some(e);
                return Err(raman_cnn::Error::Input(message));
            }
            Ok(())
        });
        let report = match (result, save_error) {
            (Ok(r), _) => r,
            (Err(_), Some(e)) => return Err(e.into()),
            (Err(e), None) => return Err(e.into()),
        };
        for f in &report.folds {
            log::info!("fold {}: accuracy {:.4} ({}/{})", f.fold + 1, f.accuracy, f.correct, f.total);
        }
        log::info!("mean fold accuracy {:.4}", report.mean_accuracy);
        fsio::write_json(&sibling(&a.out, "history.json"), &report)?;
    }
    Ok(())
}

fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn visualize(a: VisualizeArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let n_classes = ck.params.arch.n_classes;
    if let Some(c) = a.class {
        if c >= n_classes {
            return Err(usage(format!("--class {c} is out of range for a {n_classes}-class model")));
        }
    }
    let bundle = if a.data.is_dir() {
        Bundle::read(&a.data)?
    } else {
        ingest_records(&read_spectrum_csv(&a.data)?, BaselineMode::EndpointChord)?
    };
    if bundle.grid.len() != ck.params.arch.input_length {
        return Err(Error::format(
            &a.data,
            format!(
                "spectra have {} points but the model expects {}",
                bundle.grid.len(),
                ck.params.arch.input_length
            ),
        )
        .into());
    }
    let kind = match a.method {
        Method::Gradcam => MapKind::GradCam,
        Method::Fcmap => MapKind::FcMap,
    };
    for (id, input) in bundle.ids.iter().zip(&bundle.spectra) {
        let class = match a.class {
            Some(c) => c,
            None => predict(&ck.params, input)?.class,
        };
        let map = contribution_map(&ck.params, input, class, kind)?;
        let stem = format!("{}_{}", file_stem_for(id), method_name(kind));
        export_map(&a.out, &stem, &bundle.grid, input, &map)?;
    }
    log::info!("wrote {} maps to {}", bundle.len(), a.out.display());
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let report = match a.name {
        ExperimentName::FilterSweep => {
            let d = SweepOptions::default();
            let opts = SweepOptions {
                seed: a.seed,
                sizes: a.sizes.unwrap_or(d.sizes),
                counts: a.counts.unwrap_or(d.counts),
                base_filters: a.filters.unwrap_or(d.base_filters),
                base_size: a.filter_size.unwrap_or(d.base_size),
                epochs: a.epochs.unwrap_or(d.epochs),
                learning_rate: a.lr.unwrap_or(d.learning_rate),
                per_class_train: a.per_class.unwrap_or(d.per_class_train),
                per_class_test: d.per_class_test,
            };
            experiments::filter_sweep(&opts, Some(&a.out))?
        }
        ExperimentName::CommonPeak => {
            let d = PeakRunConfig::common_peak(a.seed);
            let cfg = PeakRunConfig {
                filters: a.filters.unwrap_or(d.filters),
                filter_size: a.filter_size.unwrap_or(d.filter_size),
                per_class_train: a.per_class.unwrap_or(d.per_class_train),
                epochs: a.epochs.unwrap_or(d.epochs),
                learning_rate: a.lr.unwrap_or(d.learning_rate),
                ..d
            };
            experiments::common_peak(&cfg, Some(&a.out))?.report
        }
        ExperimentName::Mixture => {
            let d = MixtureOptions::default();
            let opts = MixtureOptions {
                seed: a.seed,
                n_classes: a.classes.unwrap_or(d.n_classes),
                per_pair: a.per_pair.unwrap_or(d.per_pair),
                epochs: a.epochs.unwrap_or(d.epochs),
                learning_rate: a.lr.unwrap_or(d.learning_rate),
                kfold: a.kfold.unwrap_or(d.kfold),
                filters: a.filters.unwrap_or(d.filters),
                filter_size: a.filter_size.unwrap_or(d.filter_size),
                ..d
            };
            experiments::mixture(&opts, Some(&a.out))?.report
        }
    };
    for run in &report.runs {
        log::info!("{}: accuracy {:.4} {:?}", run.label, run.accuracy, run.metrics);
    }
    for (k, v) in &report.summary {
        log::info!("{k}: {v}");
    }
    log::info!("report written to {}", a.out.join(experiments::REPORT_FILE).display());
    Ok(())
}

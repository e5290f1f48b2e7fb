//! Experiment runners on synthetic data: filter sweeps on the three-peak
//! set, common-peak extraction with random distractor peaks, and the
//! pairwise mixture experiment with k-fold cross-validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use raman_cnn::model::{ArchConfig, ModelParams};
use raman_cnn::optim::{evaluate, kfold_cv_with, train_with, CvReport, TrainConfig, TrainHistory};
use raman_cnn::specgen::{
    gen_common_peak_dataset, gen_mixture_dataset, gen_pure_library, LabeledDataset, LibraryConfig, PeakDatasetConfig, Spectrum,
};
use raman_cnn::viz::{contribution_map, fc_contribution_map, gradcam_map, half_max_width, pearson, window_max, MapKind};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Result;
use crate::export::{export_map, method_name};
use crate::fsio;

/// Samples searched on each side of a peak channel when reading a map.
pub const PEAK_WINDOW: usize = 2;
/// Samples searched on each side of the target peak for the lobe maximum.
pub const SHARPNESS_RADIUS: usize = 5;

pub const SHARPNESS_DEFINITION: &str = "sharpness_hm_width: full width at half maximum, in channels, of the fc-map lobe \
     whose maximum lies within 5 channels of the class-1 peak (500 ch), on the first class-1 test spectrum with target \
     class 1; crossings linearly interpolated; absent when the lobe is not positive";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub label: String,
    pub config: Value,
    pub accuracy: f64,
    pub metrics: BTreeMap<String, f64>,
    /// Emitted files, relative to the report directory.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub description: String,
    pub runs: Vec<RunEntry>,
    pub summary: BTreeMap<String, Value>,
}

pub const REPORT_FILE: &str = "report.json";

impl ExperimentReport {
    fn new(experiment: &str, description: &str) -> Self {
        Self {
            experiment: experiment.into(),
            description: description.into(),
            runs: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(REPORT_FILE);
        fsio::write_json(&path, self)?;
        Ok(path)
    }

    /// Referenced files that do not exist under `dir`.
    pub fn missing_files(&self, dir: &Path) -> Vec<String> {
        self.runs
            .iter()
            .flat_map(|r| &r.files)
            .filter(|f| !dir.join(f).is_file())
            .cloned()
            .collect()
    }
}

/// One model trained on the three-peak recipe (optionally with random
/// distractor peaks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRunConfig {
    pub seed: u64,
    pub filters: usize,
    pub filter_size: usize,
    pub per_class_train: usize,
    pub per_class_test: usize,
    pub n_random_peaks: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl PeakRunConfig {
    /// 20 training spectra per class, lr 1e-4, 100 epochs.
    pub fn recognition(seed: u64) -> Self {
        Self {
            seed,
            filters: 64,
            filter_size: 8,
            per_class_train: 20,
            per_class_test: 10,
            n_random_peaks: 0,
            epochs: 100,
            learning_rate: 1e-4,
        }
    }

    /// 100 training spectra per class, each with 3 random peaks.
    pub fn common_peak(seed: u64) -> Self {
        Self {
            per_class_train: 100,
            n_random_peaks: 3,
            ..Self::recognition(seed)
        }
    }

    pub fn dataset_config(&self, per_class: usize) -> PeakDatasetConfig {
        PeakDatasetConfig::three_peaks(per_class).with_random_peaks(self.n_random_peaks)
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig::new(self.dataset_config(1).length, 3).with_filters(self.filters, self.filter_size)
    }

    fn label(&self) -> String {
        format!("f{}_s{}", self.filters, self.filter_size)
    }
}

#[derive(Debug, Clone)]
pub struct PeakRun {
    pub config: PeakRunConfig,
    pub params: ModelParams,
    pub history: TrainHistory,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub accuracy: f64,
}

fn log_epochs(tag: String) -> impl FnMut(&raman_cnn::optim::EpochStats) {
    move |s| log::debug!("{tag} epoch {} loss {:.5} acc {:.3}", s.epoch + 1, s.loss, s.accuracy)
}

/// Generates train and test sets from `config.seed`, trains and evaluates.
pub fn run_peak_model(config: &PeakRunConfig) -> Result<PeakRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let train = gen_common_peak_dataset(&config.dataset_config(config.per_class_train), &mut rng)?;
    let test = gen_common_peak_dataset(&config.dataset_config(config.per_class_test), &mut rng)?;
    let cfg = TrainConfig::new(config.learning_rate, config.epochs, config.seed);
    let (params, history) = train_with(&config.arch(), &train, &cfg, log_epochs(config.label()))?;
    let accuracy = evaluate(&params, &test)?;
    log::info!("{} seed {}: test accuracy {accuracy:.3}", config.label(), config.seed);
    Ok(PeakRun {
        config: config.clone(),
        params,
        history,
        train,
        test,
        accuracy,
    })
}

fn first_of_class(test: &LabeledDataset, class: usize) -> Option<usize> {
    test.labels.iter().position(|&l| l == class)
}

/// Half-maximum lobe width of the fc map around a class's defined peak.
pub fn sharpness(run: &PeakRun, class: usize) -> Result<Option<f64>> {
    let Some(i) = first_of_class(&run.test, class) else {
        return Ok(None);
    };
    let center = run.config.dataset_config(1).positions[class].round() as usize;
    let map = fc_contribution_map(&run.params, &run.test.spectra[i].intensity, class)?;
    Ok(half_max_width(&map.values, center, SHARPNESS_RADIUS))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStats {
    /// (spectrum, random peak) pairs examined.
    pub pairs: usize,
    /// Pairs where the fc map at the defined peak beats the random peak.
    pub passed: usize,
    /// Per spectrum: Grad-CAM maximum near any random peak over its global maximum.
    pub gradcam_ratios: Vec<f64>,
}

impl LocalizationStats {
    pub fn pass_rate(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.passed as f64 / self.pairs as f64
        }
    }

    pub fn median_gradcam_ratio(&self) -> f64 {
        median(&self.gradcam_ratios)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Compares both maps at the recorded defined and random peak channels of
/// every test spectrum, each map computed for the spectrum's true class.
pub fn localization(params: &ModelParams, test: &LabeledDataset) -> Result<LocalizationStats> {
    let mut stats = LocalizationStats {
        pairs: 0,
        passed: 0,
        gradcam_ratios: Vec::new(),
    };
    for ((s, &class), meta) in test.spectra.iter().zip(&test.labels).zip(&test.meta) {
        let Some(defined) = meta.peaks.first() else {
            continue;
        };
        let fc = fc_contribution_map(params, &s.intensity, class)?.values;
        let gc = gradcam_map(params, &s.intensity, class)?.values;
        let at_defined = window_max(&fc, defined.position.round() as usize, PEAK_WINDOW);
        let gc_max = gc.iter().copied().fold(0.0, f64::max);
        let mut gc_random: f64 = 0.0;
        for r in &meta.random_peaks {
            let x = r.position.round() as usize;
            stats.pairs += 1;
            if at_defined > window_max(&fc, x, PEAK_WINDOW) {
                stats.passed += 1;
            }
            gc_random = gc_random.max(window_max(&gc, x, PEAK_WINDOW));
        }
        if !meta.random_peaks.is_empty() {
            stats.gradcam_ratios.push(if gc_max > 0.0 { gc_random / gc_max } else { 0.0 });
        }
    }
    Ok(stats)
}

fn emit_both_maps(dir: &Path, stem: &str, params: &ModelParams, s: &Spectrum, class: usize) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for kind in [MapKind::FcMap, MapKind::GradCam] {
        let map = contribution_map(params, &s.intensity, class, kind)?;
        files.extend(export_map(dir, &format!("{stem}_{}", method_name(kind)), &s.grid, &s.intensity, &map)?);
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub counts: Vec<usize>,
    /// Filter count used while sweeping sizes.
    pub base_filters: usize,
    /// Filter size used while sweeping counts.
    pub base_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub per_class_train: usize,
    pub per_class_test: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        let r = PeakRunConfig::recognition(0);
        Self {
            seed: 0,
            sizes: vec![8, 16, 32, 64, 128],
            counts: vec![8, 16, 64, 256],
            base_filters: r.filters,
            base_size: r.filter_size,
            epochs: r.epochs,
            learning_rate: r.learning_rate,
            per_class_train: r.per_class_train,
            per_class_test: r.per_class_test,
        }
    }
}

/// Trains one model per filter size (at `base_filters`) and per filter count
/// (at `base_size`), exporting class-1 maps and the sharpness metric.
pub fn filter_sweep(opts: &SweepOptions, out: Option<&Path>) -> Result<ExperimentReport> {
    let mut configs: Vec<(usize, usize)> = opts.sizes.iter().map(|&s| (opts.base_filters, s)).collect();
    for &c in &opts.counts {
        if !configs.contains(&(c, opts.base_size)) {
            configs.push((c, opts.base_size));
        }
    }
    let mut report = ExperimentReport::new(
        "filter_sweep",
        &format!("Three-peak recognition across filter sizes and counts. {SHARPNESS_DEFINITION}."),
    );
    let mut width_by_size = BTreeMap::new();
    for (filters, size) in configs {
        let config = PeakRunConfig {
            seed: opts.seed,
            filters,
            filter_size: size,
            per_class_train: opts.per_class_train,
            per_class_test: opts.per_class_test,
            epochs: opts.epochs,
            learning_rate: opts.learning_rate,
            ..PeakRunConfig::recognition(opts.seed)
        };
        let run = run_peak_model(&config)?;
        let width = sharpness(&run, 1)?;
        if filters == opts.base_filters {
            width_by_size.insert(size, width);
        }
        let mut metrics = BTreeMap::new();
        metrics.insert("final_loss".to_string(), *run.history.epoch_loss.last().expect("epochs >= 1"));
        if let Some(w) = width {
            metrics.insert("sharpness_hm_width".to_string(), w);
        }
        let mut files = Vec::new();
        if let (Some(dir), Some(i)) = (out, first_of_class(&run.test, 1)) {
            files = emit_both_maps(dir, &config.label(), &run.params, &run.test.spectra[i], 1)?;
        }
        report.runs.push(RunEntry {
            label: config.label(),
            config: serde_json::to_value(&config).expect("config serializes"),
            accuracy: run.accuracy,
            metrics,
            files,
        });
    }
    if let (Some((&smallest, &w_small)), Some((&largest, &w_large))) = (width_by_size.first_key_value(), width_by_size.last_key_value()) {
        let focused = match (w_small, w_large) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) => true,
            _ => false,
        };
        report.summary.insert(
            "narrower_lobe_for_smaller_filters".into(),
            json!({ "smallest_size": smallest, "largest_size": largest, "holds": focused }),
        );
    }
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct CommonPeakOutcome {
    pub run: PeakRun,
    pub localization: LocalizationStats,
    pub report: ExperimentReport,
}

pub fn common_peak(config: &PeakRunConfig, out: Option<&Path>) -> Result<CommonPeakOutcome> {
    let run = run_peak_model(config)?;
    let loc = localization(&run.params, &run.test)?;
    let mut report = ExperimentReport::new(
        "common_peak",
        "Three-peak classes with random distractor peaks. localization_pass_rate: fraction of (test spectrum, random \
         peak) pairs where the fc map near the defined peak (+-2 ch) exceeds the fc map near the random peak; \
         gradcam_random_ratio_median: median over test spectra of the Grad-CAM maximum near any random peak divided \
         by its global maximum.",
    );
    let mut files = Vec::new();
    if let Some(dir) = out {
        for class in 0..run.test.n_classes {
            if let Some(i) = first_of_class(&run.test, class) {
                files.extend(emit_both_maps(dir, &format!("class{class}"), &run.params, &run.test.spectra[i], class)?);
            }
        }
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("localization_pass_rate".to_string(), loc.pass_rate());
    metrics.insert("gradcam_random_ratio_median".to_string(), loc.median_gradcam_ratio());
    report.runs.push(RunEntry {
        label: config.label(),
        config: serde_json::to_value(config).expect("config serializes"),
        accuracy: run.accuracy,
        metrics,
        files,
    });
    report
        .summary
        .insert("pairs".into(), json!({ "passed": loc.passed, "total": loc.pairs }));
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(CommonPeakOutcome {
        run,
        localization: loc,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureOptions {
    pub seed: u64,
    pub n_classes: usize,
    pub per_pair: usize,
    pub ratio_range: (f64, f64),
    pub epochs: usize,
    pub learning_rate: f64,
    pub kfold: usize,
    pub filters: usize,
    pub filter_size: usize,
    pub length: usize,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            n_classes: 8,
            per_pair: 5,
            ratio_range: raman_cnn::specgen::MIX_RATIO_RANGE,
            epochs: 30,
            learning_rate: 1e-3,
            kfold: 5,
            filters: 64,
            filter_size: 8,
            length: raman_cnn::preprocess::GRID_LEN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixtureOutcome {
    pub cv: CvReport,
    pub library: Vec<Spectrum>,
    /// Trained model of each fold.
    pub models: Vec<ModelParams>,
    /// Test mixtures whose base-class fc map correlates more with the base
    /// pure spectrum than with the contaminant.
    pub correlation_passed: usize,
    pub evaluated: usize,
    /// Test mixtures with a negative fc map at the contaminant's strongest peak.
    pub negative_at_contaminant: usize,
    pub report: ExperimentReport,
}

pub fn mixture(opts: &MixtureOptions, out: Option<&Path>) -> Result<MixtureOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let library = gen_pure_library(&LibraryConfig::new(opts.n_classes, opts.length), &mut rng)?;
    let dataset = gen_mixture_dataset(&library, opts.per_pair, opts.ratio_range, &mut rng)?;
    let arch = ArchConfig::new(opts.length, opts.n_classes).with_filters(opts.filters, opts.filter_size);
    let cfg = TrainConfig {
        kfold: opts.kfold,
        ..TrainConfig::new(opts.learning_rate, opts.epochs, opts.seed)
    };
    let (mut passed, mut evaluated, mut negative) = (0, 0, 0);
    let mut models = Vec::new();
    let mut fold_files: Vec<Vec<String>> = Vec::new();
    let mut export_error = None;
    let cv = kfold_cv_with(&arch, &dataset, &cfg, |fold, params, test| {
        log::info!("mixture fold {} trained", fold + 1);
        for (s, meta) in test.spectra.iter().zip(&test.meta) {
            let Some(mix) = meta.mixture else { continue };
            let map = fc_contribution_map(params, &s.intensity, mix.base_class)?.values;
            let base = pearson(&map, &library[mix.base_class].intensity);
            let other = pearson(&map, &library[mix.other_class].intensity);
            evaluated += 1;
            if let (Some(b), Some(o)) = (base, other) {
                if b > o {
                    passed += 1;
                }
            }
            if map[library[mix.other_class].argmax()] < 0.0 {
                negative += 1;
            }
        }
        let mut files = Vec::new();
        if let (Some(dir), Some(s)) = (out, test.spectra.first()) {
            let mix = test.meta[0].mixture.expect("mixture metadata");
            let map = fc_contribution_map(params, &s.intensity, mix.base_class)?;
            let stem = format!("fold{}_base{}_other{}_fcmap", fold + 1, mix.base_class, mix.other_class);
            match export_map(dir, &stem, &s.grid, &s.intensity, &map) {
                Ok(f) => files = f,
                Err(e) => {
                    let message = e.to_string();
                    export_error = Some(e);
                    return Err(raman_cnn::Error::Input(message));
                }
            }
        }
        fold_files.push(files);
        models.push(params.clone());
        Ok(())
    });
    let cv = match (cv, export_error) {
        (Ok(cv), _) => cv,
        (Err(_), Some(e)) => return Err(e),
        (Err(e), None) => return Err(e.into()),
    };

    let mut report = ExperimentReport::new(
        "mixture",
        "Pairwise mixtures of synthetic pure spectra with one-hot base-class labels, k-fold cross-validation. \
         correlation_pass_rate: fraction of test mixtures whose base-class fc map has a higher Pearson correlation \
         with the base pure spectrum than with the contaminant; negative_at_contaminant: test mixtures whose \
         fc map is negative at the contaminant's strongest channel.",
    );
    for (fold, files) in cv.folds.iter().zip(fold_files) {
        report.runs.push(RunEntry {
            label: format!("fold{}", fold.fold + 1),
            config: serde_json::to_value(opts).expect("options serialize"),
            accuracy: fold.accuracy,
            metrics: BTreeMap::from([("final_loss".to_string(), *fold.history.epoch_loss.last().expect("epochs >= 1"))]),
            files,
        });
    }
    report.summary.insert("mean_accuracy".into(), json!(cv.mean_accuracy));
    report.summary.insert("pooled_accuracy".into(), json!(cv.pooled_accuracy));
    report.summary.insert(
        "correlation".into(),
        json!({ "passed": passed, "total": evaluated, "rate": passed as f64 / evaluated.max(1) as f64 }),
    );
    report.summary.insert("negative_at_contaminant".into(), json!(negative));
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(MixtureOutcome {
        cv,
        library,
        models,
        correlation_passed: passed,
        evaluated,
        negative_at_contaminant: negative,
        report,
    })
}

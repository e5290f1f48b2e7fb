//! Adam, mini-batch training with softmax cross-entropy, evaluation and
//! stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{argmax, backward_batch, forward_batch, init_model, predict_batch, ArchConfig, Gradients, ModelParams};
use crate::ndcore::{softmax_cross_entropy, Mode};
use crate::specgen::LabeledDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Number of cross-validation folds; 0 disables cross-validation.
    pub kfold: usize,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, epochs: usize, seed: u64) -> Self {
        Self {
            learning_rate,
            epochs,
            batch_size: 32,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed,
            kfold: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_eps > 0.0) {
            return Err(Error::Config("invalid Adam hyperparameters".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let shapes: Vec<usize> = params.named_tensors().iter().map(|t| t.data.len()).collect();
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    let g = grads.tensors();
    let mut p = params.tensors_mut();
    check_dim("adam tensors", p.len(), g.len())?;
    check_dim("adam state tensors", p.len(), state.m.len())?;
    for ((pt, gt), (mt, vt)) in p.iter().zip(&g).zip(state.m.iter().zip(&state.v)) {
        check_dim("adam tensor length", pt.len(), gt.len())?;
        check_dim("adam moment length", pt.len(), mt.len())?;
        check_dim("adam moment length", pt.len(), vt.len())?;
    }
    state.t += 1;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    let lr = cfg.learning_rate;
    for (((pt, gt), mt), vt) in p.iter_mut().zip(g).zip(&mut state.m).zip(&mut state.v) {
        for (((w, &gi), m), v) in pt.iter_mut().zip(gt).zip(mt.iter_mut()).zip(vt.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * gi;
            *v = b2 * *v + (1.0 - b2) * gi * gi;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean per-sample loss of each epoch.
    pub epoch_loss: Vec<f64>,
    /// Training accuracy of each epoch, from the train-mode forward passes.
    pub epoch_accuracy: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

fn check_dataset(arch: &ArchConfig, dataset: &LabeledDataset) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim("dataset spectrum length", arch.input_length, dataset.input_length())?;
    check_dim("dataset class count", arch.n_classes, dataset.n_classes)?;
    Ok(())
}

pub fn train(arch: &ArchConfig, dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainHistory)> {
    train_with(arch, dataset, cfg, |_| {})
}

/// Trains from a fresh seeded initialization, reporting each finished epoch
/// to `on_epoch`.
///
/// Each epoch shuffles the dataset, then for every mini-batch runs a
/// train-mode forward pass, averages the cross-entropy gradient over the
/// batch and applies one Adam step.
pub fn train_with(
    arch: &ArchConfig,
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(ModelParams, TrainHistory)> {
    cfg.validate()?;
    arch.validate()?;
    check_dataset(arch, dataset)?;
    let mut params = init_model(arch, cfg.seed)?;
    let mut state = AdamState::new(&params);
    // Shuffling and dropout draw from one stream, separate from init.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = TrainHistory::default();
    let n_classes = arch.n_classes;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let inputs: Vec<&[f64]> = chunk.iter().map(|&i| dataset.spectra[i].intensity.as_slice()).collect();
            let caches = forward_batch(&params, &inputs, Mode::Train, &mut rng)?;
            let scale = 1.0 / chunk.len() as f64;
            let mut grad_logits = Vec::with_capacity(chunk.len() * n_classes);
            for (cache, &i) in caches.iter().zip(chunk) {
                let sce = softmax_cross_entropy(&cache.logits, &dataset.one_hot(i))?;
                if !sce.loss.is_finite() {
                    return Err(Error::NonFinite {
                        epoch,
                        batch: batch_idx,
                    });
                }
                loss_sum += sce.loss;
                if argmax(&cache.logits) == dataset.labels[i] {
                    correct += 1;
                }
                grad_logits.extend(sce.grad_logits.iter().map(|g| g * scale));
            }
            let grads = backward_batch(&params, &caches, &grad_logits)?;
            adam_step(&mut params, &grads, &mut state, cfg)?;
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / dataset.len() as f64,
            accuracy: correct as f64 / dataset.len() as f64,
        };
        history.epoch_loss.push(stats.loss);
        history.epoch_accuracy.push(stats.accuracy);
        on_epoch(&stats);
    }
    Ok((params, history))
}

/// Per-spectrum predicted classes, computed in inference mode.
pub fn predict_classes(params: &ModelParams, dataset: &LabeledDataset) -> Result<Vec<usize>> {
    check_dataset(&params.arch, dataset)?;
    let mut out = Vec::with_capacity(dataset.len());
    for chunk in dataset.spectra.chunks(32) {
        let inputs: Vec<&[f64]> = chunk.iter().map(|s| s.intensity.as_slice()).collect();
        out.extend(predict_batch(params, &inputs)?.into_iter().map(|p| p.class));
    }
    Ok(out)
}

/// Fraction of spectra whose predicted class equals their label.
pub fn evaluate(params: &ModelParams, dataset: &LabeledDataset) -> Result<f64> {
    let predicted = predict_classes(params, dataset)?;
    let correct = predicted.iter().zip(&dataset.labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / dataset.len() as f64)
}

/// Stratified fold assignment: each class is shuffled with `seed`, then dealt
/// round-robin across folds. The dealing position carries over between
/// classes so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Config(format!("{} samples cannot fill {k} folds", labels.len())));
    }
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(Error::InvalidClass { class: l, n_classes });
        }
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (class, members) in by_class.iter_mut().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::Config(format!(
                "class {class} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    /// Mean of the per-fold accuracies.
    pub mean_accuracy: f64,
    /// Correct predictions over all folds divided by the dataset size.
    pub pooled_accuracy: f64,
}

impl CvReport {
    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.accuracy).collect()
    }
}

pub fn kfold_cv(arch: &ArchConfig, dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<CvReport> {
    kfold_cv_with(arch, dataset, cfg, |_, _, _| Ok(()))
}

/// Trains one model per fold (seed `cfg.seed + fold`) and evaluates it on
/// the held-out fold. `on_fold` sees each trained model with its test split.
pub fn kfold_cv_with(
    arch: &ArchConfig,
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
    mut on_fold: impl FnMut(usize, &ModelParams, &LabeledDataset) -> Result<()>,
) -> Result<CvReport> {
    check_dataset(arch, dataset)?;
    let folds = stratified_folds(&dataset.labels, dataset.n_classes, cfg.kfold, cfg.seed)?;
    let mut results = Vec::with_capacity(folds.len());
    for (f, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let train_set = dataset.subset(&train_idx);
        let test_set = dataset.subset(test_idx);
        let fold_cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(f as u64),
            ..cfg.clone()
        };
        let (params, mut history) = train(arch, &train_set, &fold_cfg)?;
        let predicted = predict_classes(&params, &test_set)?;
        let correct = predicted.iter().zip(&test_set.labels).filter(|(p, l)| p == l).count();
        let accuracy = correct as f64 / test_set.len() as f64;
        history.test_accuracy = Some(accuracy);
        on_fold(f, &params, &test_set)?;
        results.push(FoldResult {
            fold: f,
            accuracy,
            correct,
            total: test_set.len(),
            history,
        });
    }
    let mean_accuracy = results.iter().map(|r| r.accuracy).sum::<f64>() / results.len() as f64;
    let pooled_accuracy = results.iter().map(|r| r.correct).sum::<usize>() as f64 / dataset.len() as f64;
    Ok(CvReport {
        folds: results,
        mean_accuracy,
        pooled_accuracy,
    })
}

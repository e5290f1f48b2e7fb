use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raman_cnn::model::{forward_infer, predict, ArchConfig};
use raman_cnn::optim::{evaluate, train, TrainConfig};
use raman_cnn::preprocess::{model_grid, preprocess_pipeline, RawSpectrum, GRID_LEN};
use raman_cnn::specgen::{ItemMeta, LabeledDataset, Spectrum};
use raman_cnn::viz::{contribution_map, fc_beta, MapKind};

const CENTERS: [f64; 3] = [600.0, 1000.0, 1500.0];

/// A measured-looking spectrum: sloped offset plus one Gaussian band,
/// sampled every 2 cm^-1 over a wider window than the model grid.
fn raw(center: f64, rng: &mut ChaCha8Rng) -> RawSpectrum {
    let x: Vec<f64> = (0..901).map(|i| 200.0 + 2.0 * i as f64).collect();
    let offset = rng.random_range(50.0..150.0);
    let y = x
        .iter()
        .map(|&w| offset + 0.03 * w + 60.0 * (-((w - center) / 8.0).powi(2)).exp() + rng.random_range(-0.5..0.5))
        .collect();
    RawSpectrum::new(x, y).unwrap()
}

fn dataset(per_class: usize, rng: &mut ChaCha8Rng) -> LabeledDataset {
    let mut spectra = Vec::new();
    let mut labels = Vec::new();
    for (c, &center) in CENTERS.iter().enumerate() {
        for _ in 0..per_class {
            let p = preprocess_pipeline(&raw(center + rng.random_range(-4.0..4.0), rng)).unwrap();
            spectra.push(Spectrum::new(model_grid(), p.input.intensity).unwrap());
            labels.push(c);
        }
    }
    let meta = vec![ItemMeta::default(); labels.len()];
    LabeledDataset::new(spectra, labels, CENTERS.len(), meta).unwrap()
}

#[test]
fn measured_spectra_train_and_explain() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let train_set = dataset(8, &mut rng);
    let test_set = dataset(3, &mut rng);
    assert!(train_set.spectra.iter().all(|s| s.len() == GRID_LEN && (s.max() - 1.0).abs() < 1e-12));

    let arch = ArchConfig::new(GRID_LEN, 3).with_filters(4, 8);
    let mut cfg = TrainConfig::new(1e-3, 25, 2);
    cfg.batch_size = 8;
    let (params, history) = train(&arch, &train_set, &cfg).unwrap();
    assert_eq!(history.epoch_loss.len(), 25);
    assert!(history.epoch_loss.last().unwrap() < history.epoch_loss.first().unwrap());
    assert_eq!(evaluate(&params, &test_set).unwrap(), 1.0);

    for (s, &label) in test_set.spectra.iter().zip(&test_set.labels) {
        let x = &s.intensity;
        assert_eq!(predict(&params, x).unwrap().class, label);
        let gc = contribution_map(&params, x, label, MapKind::GradCam).unwrap();
        let fc = contribution_map(&params, x, label, MapKind::FcMap).unwrap();
        assert_eq!((gc.values.len(), fc.values.len()), (GRID_LEN, GRID_LEN));
        assert!(gc.values.iter().all(|v| *v >= 0.0));

        let cache = forward_infer(&params, x).unwrap();
        let total: f64 = cache.pooled().as_slice().iter().sum();
        for (l, b) in fc_beta(&params, &cache, label).unwrap().iter().enumerate() {
            let closed = params.fc2.weight(l, label) * total;
            assert!((b - closed).abs() <= 1e-9 * closed.abs().max(1e-300));
        }
    }
}

#[test]
fn preprocessing_rejects_bad_axes() {
    assert!(RawSpectrum::new(vec![1.0, 2.0, 2.0, 3.0], vec![0.0; 4]).is_err());
    assert!(RawSpectrum::new(vec![1.0, 2.0, 3.0], vec![0.0; 3]).is_err());
    assert!(RawSpectrum::new(vec![1.0, 2.0, 3.0, f64::NAN], vec![0.0; 4]).is_err());
}

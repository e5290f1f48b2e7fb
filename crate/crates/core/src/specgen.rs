//! Synthetic spectra: Lorentzian peaks with bounded white noise, random-peak
//! backgrounds, a library of pure multi-peak spectra and their pairwise
//! mixtures.
//!
//! Every generator takes an explicit RNG, so datasets are reproducible from
//! a seed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// An intensity trace on an explicit, strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: Vec<f64>, intensity: Vec<f64>) -> Result<Self> {
        check_dim("Spectrum grid/intensity", grid.len(), intensity.len())?;
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("spectrum grid must be strictly increasing".into()));
        }
        if intensity.iter().chain(&grid).any(|v| !v.is_finite()) {
            return Err(Error::Input("spectrum holds non-finite values".into()));
        }
        Ok(Self { grid, intensity })
    }

    /// Intensities on the channel grid `0, 1, ..., n - 1`.
    pub fn on_channels(intensity: Vec<f64>) -> Self {
        Self {
            grid: channel_grid(intensity.len()),
            intensity,
        }
    }

    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.intensity.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Channel of the largest intensity (lowest index on ties).
    pub fn argmax(&self) -> usize {
        crate::model::argmax(&self.intensity)
    }
}

pub fn channel_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSpec {
    pub position: f64,
    pub fwhm: f64,
    pub amplitude: f64,
}

impl PeakSpec {
    pub fn new(position: f64, fwhm: f64, amplitude: f64) -> Result<Self> {
        if !(fwhm > 0.0) || !(amplitude > 0.0) || !position.is_finite() {
            return Err(Error::Input(format!(
                "invalid peak at {position} (fwhm {fwhm}, amplitude {amplitude})"
            )));
        }
        Ok(Self {
            position,
            fwhm,
            amplitude,
        })
    }

    #[inline]
    pub fn value_at(&self, x: f64) -> f64 {
        let u = (x - self.position) / (self.fwhm / 2.0);
        self.amplitude / (1.0 + u * u)
    }
}

/// A noise-free Lorentzian on the channel grid `0..length`.
pub fn lorentzian(peak: &PeakSpec, length: usize) -> Spectrum {
    Spectrum::on_channels((0..length).map(|x| peak.value_at(x as f64)).collect())
}

fn add_peaks(intensity: &mut [f64], peaks: &[PeakSpec]) {
    for (x, v) in intensity.iter_mut().enumerate() {
        *v += peaks.iter().map(|p| p.value_at(x as f64)).sum::<f64>();
    }
}

/// Adds independent uniform noise in `+-fraction * max(intensity)` per channel.
pub fn add_white_noise<R: Rng + ?Sized>(s: &Spectrum, fraction: f64, rng: &mut R) -> Result<Spectrum> {
    if !(fraction >= 0.0) {
        return Err(Error::Config(format!("noise fraction {fraction} must be >= 0")));
    }
    let bound = fraction * s.max();
    let mut out = s.clone();
    if bound > 0.0 {
        for v in &mut out.intensity {
            *v += rng.random_range(-bound..=bound);
        }
    }
    Ok(out)
}

/// Provenance of one generated spectrum.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ItemMeta {
    /// Class-defining peaks.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub peaks: Vec<PeakSpec>,
    /// Distractor peaks shared by no particular class.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub random_peaks: Vec<PeakSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureRecipe>,
}

/// Spectra with class labels. Labels are stored as class indices; the one-hot
/// form is produced by [`LabeledDataset::one_hot`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub spectra: Vec<Spectrum>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub meta: Vec<ItemMeta>,
}

impl LabeledDataset {
    pub fn new(spectra: Vec<Spectrum>, labels: Vec<usize>, n_classes: usize, meta: Vec<ItemMeta>) -> Result<Self> {
        check_dim("dataset labels", spectra.len(), labels.len())?;
        check_dim("dataset meta", spectra.len(), meta.len())?;
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidClass {
                class: bad,
                n_classes,
            });
        }
        if let Some(first) = spectra.first() {
            if spectra.iter().any(|s| s.len() != first.len()) {
                return Err(Error::Input("dataset spectra differ in length".into()));
            }
        }
        Ok(Self {
            spectra,
            labels,
            n_classes,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    /// Length of every spectrum (0 when empty).
    pub fn input_length(&self) -> usize {
        self.spectra.first().map_or(0, Spectrum::len)
    }

    pub fn one_hot(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_classes];
        v[self.labels[i]] = 1.0;
        v
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Items at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            spectra: indices.iter().map(|&i| self.spectra[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            meta: indices.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }

    /// Appends `other`, which must have the same class count.
    pub fn extend(&mut self, other: LabeledDataset) -> Result<()> {
        check_dim("dataset class count", self.n_classes, other.n_classes)?;
        self.spectra.extend(other.spectra);
        self.labels.extend(other.labels);
        self.meta.extend(other.meta);
        Ok(())
    }
}

fn check_positions(positions: &[f64], length: usize) -> Result<()> {
    if positions.len() < 2 {
        return Err(Error::Config("need at least two peak positions".into()));
    }
    for (i, &p) in positions.iter().enumerate() {
        if !(p >= 0.0 && p < length as f64) {
            return Err(Error::Config(format!("peak position {p} outside [0, {length})")));
        }
        if positions[..i].contains(&p) {
            return Err(Error::Config(format!("duplicate peak position {p}")));
        }
    }
    Ok(())
}

/// Recipe shared by the single-peak and common-peak generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakDatasetConfig {
    /// Class-defining peak positions, class `i` at `positions[i]`.
    pub positions: Vec<f64>,
    pub per_class: usize,
    pub length: usize,
    pub fwhm: f64,
    /// Noise half-width as a fraction of each spectrum's maximum.
    pub noise: f64,
    pub n_random_peaks: usize,
    pub random_amplitude: (f64, f64),
    /// Random peaks avoid `+- exclusion_fwhms * fwhm` around every defined peak.
    pub exclusion_fwhms: f64,
}

impl PeakDatasetConfig {
    /// Three classes at channels 100, 500 and 1000 on a 1024-channel grid,
    /// FWHM 4 and noise within 2.5% of the maximum.
    pub fn three_peaks(per_class: usize) -> Self {
        Self {
            positions: vec![100.0, 500.0, 1000.0],
            per_class,
            length: 1024,
            fwhm: 4.0,
            noise: 0.025,
            n_random_peaks: 0,
            random_amplitude: (0.5, 1.0),
            exclusion_fwhms: 3.0,
        }
    }

    pub fn with_random_peaks(mut self, n: usize) -> Self {
        self.n_random_peaks = n;
        self
    }
}

/// One noisy single-Lorentzian spectrum per draw; the label is the index of
/// the peak position.
pub fn gen_peak_dataset<R: Rng + ?Sized>(
    positions: &[f64],
    per_class: usize,
    length: usize,
    fwhm: f64,
    noise: f64,
    rng: &mut R,
) -> Result<LabeledDataset> {
    let cfg = PeakDatasetConfig {
        positions: positions.to_vec(),
        per_class,
        length,
        fwhm,
        noise,
        ..PeakDatasetConfig::three_peaks(per_class)
    };
    gen_common_peak_dataset(&cfg, rng)
}

/// Each spectrum carries its class's peak plus `n_random_peaks` distractors
/// drawn uniformly over the grid outside the exclusion zones.
pub fn gen_common_peak_dataset<R: Rng + ?Sized>(cfg: &PeakDatasetConfig, rng: &mut R) -> Result<LabeledDataset> {
    check_positions(&cfg.positions, cfg.length)?;
    let (lo, hi) = cfg.random_amplitude;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::Config(format!("invalid random amplitude range {lo}..{hi}")));
    }
    let exclusion = cfg.exclusion_fwhms * cfg.fwhm;
    let allowed: Vec<usize> = (0..cfg.length)
        .filter(|&x| cfg.positions.iter().all(|&p| (x as f64 - p).abs() > exclusion))
        .collect();
    if cfg.n_random_peaks > 0 && allowed.is_empty() {
        return Err(Error::Config("exclusion zones cover the whole grid".into()));
    }
    let n_classes = cfg.positions.len();
    let mut spectra = Vec::with_capacity(n_classes * cfg.per_class);
    let mut labels = Vec::with_capacity(spectra.capacity());
    let mut meta = Vec::with_capacity(spectra.capacity());
    for (class, &pos) in cfg.positions.iter().enumerate() {
        let defined = PeakSpec::new(pos, cfg.fwhm, 1.0)?;
        for _ in 0..cfg.per_class {
            let random_peaks: Vec<PeakSpec> = (0..cfg.n_random_peaks)
                .map(|_| PeakSpec {
                    position: allowed[rng.random_range(0..allowed.len())] as f64,
                    fwhm: cfg.fwhm,
                    amplitude: rng.random_range(lo..=hi),
                })
                .collect();
            let mut intensity = vec![0.0; cfg.length];
            add_peaks(&mut intensity, std::slice::from_ref(&defined));
            add_peaks(&mut intensity, &random_peaks);
            let clean = Spectrum::on_channels(intensity);
            spectra.push(add_white_noise(&clean, cfg.noise, rng)?);
            labels.push(class);
            meta.push(ItemMeta {
                peaks: vec![defined],
                random_peaks,
                mixture: None,
            });
        }
    }
    LabeledDataset::new(spectra, labels, n_classes, meta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryConfig {
    pub n_classes: usize,
    pub length: usize,
    /// Inclusive range of peaks per class.
    pub peaks_per_class: (usize, usize),
    pub amplitude: (f64, f64),
    pub fwhm: (f64, f64),
    /// Minimum distance between two classes' strongest peaks.
    pub min_separation: f64,
    /// Peaks stay this many channels away from the grid ends.
    pub margin: usize,
}

impl LibraryConfig {
    pub fn new(n_classes: usize, length: usize) -> Self {
        Self {
            n_classes,
            length,
            peaks_per_class: (4, 8),
            amplitude: (0.2, 1.0),
            fwhm: (4.0, 12.0),
            min_separation: 24.0,
            margin: 20,
        }
    }
}

/// A library of max-normalized pure spectra with pairwise distinct strongest
/// peaks. Class `i` owns a dominant peak at a position no other class uses;
/// its remaining peaks are scattered freely.
pub fn gen_pure_library<R: Rng + ?Sized>(cfg: &LibraryConfig, rng: &mut R) -> Result<Vec<Spectrum>> {
    if cfg.n_classes < 2 {
        return Err(Error::Config("a library needs at least two classes".into()));
    }
    let (pmin, pmax) = cfg.peaks_per_class;
    if pmin == 0 || pmax < pmin {
        return Err(Error::Config(format!("invalid peaks-per-class range {pmin}..={pmax}")));
    }
    let (amin, amax) = cfg.amplitude;
    let (wmin, wmax) = cfg.fwhm;
    if !(amin > 0.0 && amax >= amin && wmin > 0.0 && wmax >= wmin) {
        return Err(Error::Config("invalid amplitude or FWHM range".into()));
    }
    let lo = cfg.margin as f64;
    let hi = cfg.length as f64 - 1.0 - cfg.margin as f64;
    let span = hi - lo;
    if span <= 0.0 || span < cfg.min_separation * cfg.n_classes as f64 {
        return Err(Error::Config(format!(
            "{} classes do not fit on {} channels with separation {}",
            cfg.n_classes, cfg.length, cfg.min_separation
        )));
    }

    // Dominant positions by rejection sampling with a minimum spacing.
    let mut dominant: Vec<f64> = Vec::with_capacity(cfg.n_classes);
    let mut attempts = 0usize;
    while dominant.len() < cfg.n_classes {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Config("could not place dominant peaks".into()));
        }
        let p = rng.random_range(lo..=hi).round();
        if dominant.iter().all(|&q| (p - q).abs() >= cfg.min_separation) {
            dominant.push(p);
        }
    }

    let mut library = Vec::with_capacity(cfg.n_classes);
    for &main in &dominant {
        // Resample the minor peaks until the dominant one is the maximum.
        loop {
            let n_peaks = rng.random_range(pmin..=pmax);
            let mut peaks = vec![PeakSpec {
                position: main,
                fwhm: rng.random_range(wmin..=wmax),
                amplitude: amax,
            }];
            for _ in 1..n_peaks {
                peaks.push(PeakSpec {
                    position: rng.random_range(lo..=hi).round(),
                    fwhm: rng.random_range(wmin..=wmax),
                    amplitude: rng.random_range(amin..=amax),
                });
            }
            let mut intensity = vec![0.0; cfg.length];
            add_peaks(&mut intensity, &peaks);
            let s = Spectrum::on_channels(normalize_max(intensity));
            if s.argmax() == main as usize {
                library.push(s);
                break;
            }
        }
    }
    Ok(library)
}

fn normalize_max(mut v: Vec<f64>) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecipe {
    pub base_class: usize,
    pub other_class: usize,
    pub ratio: f64,
}

/// `base + ratio * other`, max-normalized.
pub fn mix_spectra(base: &Spectrum, other: &Spectrum, ratio: f64) -> Result<Spectrum> {
    if base.grid != other.grid {
        return Err(Error::Input("cannot mix spectra on different grids".into()));
    }
    if !(ratio > 0.0) {
        return Err(Error::Config(format!("mix ratio {ratio} must be positive")));
    }
    let sum = base
        .intensity
        .iter()
        .zip(&other.intensity)
        .map(|(b, o)| b + ratio * o)
        .collect();
    Ok(Spectrum {
        grid: base.grid.clone(),
        intensity: normalize_max(sum),
    })
}

/// Mixes every class with every other class `mixes_per_pair` times using
/// ratios drawn uniformly from `ratio_range`. Labels name only the base
/// class; the ratio lives in the metadata.
pub fn gen_mixture_dataset<R: Rng + ?Sized>(
    library: &[Spectrum],
    mixes_per_pair: usize,
    ratio_range: (f64, f64),
    rng: &mut R,
) -> Result<LabeledDataset> {
    let n = library.len();
    if n < 2 {
        return Err(Error::Config("mixtures need at least two pure spectra".into()));
    }
    let (rlo, rhi) = ratio_range;
    if !(rlo > 0.0 && rhi >= rlo) {
        return Err(Error::Config(format!("invalid ratio range {rlo}..{rhi}")));
    }
    let total = n * (n - 1) * mixes_per_pair;
    let mut spectra = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut meta = Vec::with_capacity(total);
    for base in 0..n {
        for other in (0..n).filter(|&o| o != base) {
            for _ in 0..mixes_per_pair {
                let ratio = rng.random_range(rlo..=rhi);
                spectra.push(mix_spectra(&library[base], &library[other], ratio)?);
                labels.push(base);
                meta.push(ItemMeta {
                    mixture: Some(MixtureRecipe {
                        base_class: base,
                        other_class: other,
                        ratio,
                    }),
                    ..ItemMeta::default()
                });
            }
        }
    }
    LabeledDataset::new(spectra, labels, n, meta)
}

/// Ratio range used for mixture datasets.
pub const MIX_RATIO_RANGE: (f64, f64) = (0.1, 0.5);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn lorentzian_peak_and_half_max() {
        let p = PeakSpec::new(500.0, 4.0, 1.0).unwrap();
        let s = lorentzian(&p, 1024);
        assert_eq!(s.intensity[500], 1.0);
        assert_eq!(s.intensity[498], 0.5);
        assert_eq!(s.intensity[502], 0.5);
        assert_eq!(s.intensity[498], s.intensity[502]);
        let q = PeakSpec::new(10.0, 6.0, 2.5).unwrap();
        assert_eq!(q.value_at(13.0), 1.25);
        assert_eq!(q.value_at(7.0), 1.25);
    }

    #[test]
    fn invalid_peaks_rejected() {
        assert!(PeakSpec::new(1.0, 0.0, 1.0).is_err());
        assert!(PeakSpec::new(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn noise_bounds_and_determinism() {
        let s = lorentzian(&PeakSpec::new(50.0, 4.0, 1.0).unwrap(), 128);
        assert_eq!(add_white_noise(&s, 0.0, &mut rng(1)).unwrap(), s);
        let a = add_white_noise(&s, 0.025, &mut rng(1)).unwrap();
        let b = add_white_noise(&s, 0.025, &mut rng(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.intensity.iter().zip(&s.intensity).all(|(n, c)| (n - c).abs() <= 0.025));
        assert!(add_white_noise(&s, -0.1, &mut rng(1)).is_err());
    }

    #[test]
    fn three_peak_dataset_shape() {
        let d = gen_peak_dataset(&[100.0, 500.0, 1000.0], 20, 1024, 4.0, 0.025, &mut rng(0)).unwrap();
        assert_eq!(d.len(), 60);
        assert_eq!(d.n_classes, 3);
        assert_eq!(d.class_counts(), vec![20, 20, 20]);
        for i in 0..d.len() {
            let oh = d.one_hot(i);
            assert_eq!(oh.len(), 3);
            assert_eq!(oh.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(oh.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn noise_free_single_draw_is_pure_lorentzian() {
        let d = gen_peak_dataset(&[10.0, 40.0], 1, 64, 4.0, 0.0, &mut rng(0)).unwrap();
        assert_eq!(d.spectra[0], lorentzian(&PeakSpec::new(10.0, 4.0, 1.0).unwrap(), 64));
        assert_eq!(d.spectra[1], lorentzian(&PeakSpec::new(40.0, 4.0, 1.0).unwrap(), 64));
    }

    #[test]
    fn bad_positions_rejected() {
        assert!(gen_peak_dataset(&[10.0, 10.0], 1, 64, 4.0, 0.0, &mut rng(0)).is_err());
        assert!(gen_peak_dataset(&[10.0, 64.0], 1, 64, 4.0, 0.0, &mut rng(0)).is_err());
    }

    #[test]
    fn common_peak_meta_matches_spectra() {
        let cfg = PeakDatasetConfig::three_peaks(100).with_random_peaks(3);
        let d = gen_common_peak_dataset(&cfg, &mut rng(3)).unwrap();
        assert_eq!(d.len(), 300);
        for (i, m) in d.meta.iter().enumerate() {
            assert_eq!(m.random_peaks.len(), 3);
            assert_eq!(m.peaks[0].position, cfg.positions[d.labels[i]]);
            for rp in &m.random_peaks {
                assert!(cfg.positions.iter().all(|&p| (rp.position - p).abs() > 12.0));
                assert!((0.5..=1.0).contains(&rp.amplitude));
                assert_eq!(rp.fwhm, 4.0);
            }
            // Reconstruct the clean trace from the recorded peaks; the
            // residual must be within the noise bound.
            let mut clean = vec![0.0; 1024];
            add_peaks(&mut clean, &m.peaks);
            add_peaks(&mut clean, &m.random_peaks);
            let bound = 0.025 * clean.iter().copied().fold(0.0, f64::max);
            assert!(d.spectra[i].intensity.iter().zip(&clean).all(|(a, b)| (a - b).abs() <= bound + 1e-12));
        }
    }

    #[test]
    fn zero_random_peaks_matches_plain_generator() {
        let cfg = PeakDatasetConfig::three_peaks(4);
        let a = gen_common_peak_dataset(&cfg, &mut rng(9)).unwrap();
        let b = gen_peak_dataset(&cfg.positions, 4, 1024, 4.0, 0.025, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn library_properties() {
        let cfg = LibraryConfig::new(20, 1451);
        let lib = gen_pure_library(&cfg, &mut rng(5)).unwrap();
        assert_eq!(lib.len(), 20);
        assert_eq!(lib, gen_pure_library(&cfg, &mut rng(5)).unwrap());
        let mut tops: Vec<usize> = lib.iter().map(|s| s.argmax()).collect();
        for s in &lib {
            assert_eq!(s.max(), 1.0);
        }
        tops.sort_unstable();
        tops.dedup();
        assert_eq!(tops.len(), 20);
    }

    #[test]
    fn self_mix_is_idempotent_after_normalization() {
        let lib = gen_pure_library(&LibraryConfig::new(2, 300), &mut rng(1)).unwrap();
        let m = mix_spectra(&lib[0], &lib[0], 0.3).unwrap();
        for (a, b) in m.intensity.iter().zip(&lib[0].intensity) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(mix_spectra(&lib[0], &lib[1], 0.0).is_err());
        let short = Spectrum::on_channels(vec![1.0; 10]);
        assert!(mix_spectra(&lib[0], &short, 0.2).is_err());
    }

    #[test]
    fn mixture_dataset_counts_and_ratios() {
        let lib = gen_pure_library(&LibraryConfig::new(20, 1451), &mut rng(2)).unwrap();
        let d = gen_mixture_dataset(&lib, 5, MIX_RATIO_RANGE, &mut rng(2)).unwrap();
        assert_eq!(d.len(), 1900);
        assert!(d.class_counts().iter().all(|&c| c == 95));
        for (m, &l) in d.meta.iter().zip(&d.labels) {
            let r = m.mixture.unwrap();
            assert_eq!(r.base_class, l);
            assert_ne!(r.other_class, l);
            assert!((0.1..=0.5).contains(&r.ratio));
        }
        let tiny = gen_mixture_dataset(&lib[..2], 1, MIX_RATIO_RANGE, &mut rng(0)).unwrap();
        assert_eq!(tiny.len(), 2);
        assert!(gen_mixture_dataset(&lib[..1], 1, MIX_RATIO_RANGE, &mut rng(0)).is_err());
    }
}

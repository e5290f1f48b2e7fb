//! Contribution maps: Grad-CAM on the last pooling layer and the
//! fully-connected weight map, both upsampled back to the input grid.
//!
//! Both maps differentiate the pre-softmax logit of the target class and are
//! computed from inference-mode forward passes (dropout off).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{dense_backward, forward_infer, ActivationCache, ModelParams};
use crate::ndcore::{ChannelMap, DenseGrads, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapKind {
    #[serde(rename = "gradcam")]
    GradCam,
    #[serde(rename = "fc_map")]
    FcMap,
}

impl std::fmt::Display for MapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MapKind::GradCam => "gradcam",
            MapKind::FcMap => "fc_map",
        })
    }
}

/// A per-channel importance trace aligned to the model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionMap {
    pub values: Vec<f64>,
    pub kind: MapKind,
    pub target_class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceWeights {
    /// One weight per channel of the last pooled map.
    pub alpha: Vec<f64>,
    /// One weight per hidden fully-connected feature.
    pub beta: Vec<f64>,
}

fn check_request(params: &ModelParams, cache: &ActivationCache, class: usize) -> Result<()> {
    let n_classes = params.fc2.outputs;
    if class >= n_classes {
        return Err(Error::InvalidClass { class, n_classes });
    }
    if cache.mode != Mode::Infer {
        return Err(Error::Input("contribution maps need an inference-mode forward pass".into()));
    }
    check_dim("cache flat length", params.fc1.inputs, cache.flat.len())
}

fn one_hot(n: usize, class: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[class] = 1.0;
    v
}

/// Backpropagates a one-hot logit cotangent through the dense head, giving
/// the flat feature gradient and the dense weight gradients.
fn logit_backward(params: &ModelParams, cache: &ActivationCache, class: usize) -> Result<(Vec<f64>, DenseGrads)> {
    check_request(params, cache, class)?;
    let mut fc1 = DenseGrads::zeros_like(&params.fc1);
    let mut fc2 = DenseGrads::zeros_like(&params.fc2);
    let grad_flat = dense_backward(params, &[cache], &one_hot(params.fc2.outputs, class), &mut fc1, &mut fc2)?;
    Ok((grad_flat, fc1))
}

/// `alpha_k = sum_x d y^c / d X[k, x]` over the last pooled map `X`.
pub fn gradcam_alpha(params: &ModelParams, cache: &ActivationCache, class: usize) -> Result<Vec<f64>> {
    let (grad_flat, _) = logit_backward(params, cache, class)?;
    let pooled = cache.pooled();
    let grad = ChannelMap::unflatten(&grad_flat, pooled.channels(), pooled.length())?;
    Ok((0..grad.channels()).map(|k| grad.channel(k).iter().sum()).collect())
}

/// Grad-CAM on the pooled grid: `ReLU(sum_k alpha_k X[k, x])`.
pub fn gradcam_pooled(params: &ModelParams, cache: &ActivationCache, class: usize) -> Result<Vec<f64>> {
    let alpha = gradcam_alpha(params, cache, class)?;
    let pooled = cache.pooled();
    let mut out = vec![0.0; pooled.length()];
    for (k, a) in alpha.iter().enumerate() {
        for (o, x) in out.iter_mut().zip(pooled.channel(k)) {
            *o += a * x;
        }
    }
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(out)
}

pub fn gradcam_map(params: &ModelParams, input: &[f64], class: usize) -> Result<ContributionMap> {
    let cache = forward_infer(params, input)?;
    Ok(ContributionMap {
        values: upsample_linear(&gradcam_pooled(params, &cache, class)?, input.len())?,
        kind: MapKind::GradCam,
        target_class: class,
    })
}

/// `beta_l = sum_i d y^c / d W1[i, l]`, summed over every flattened input `i`.
pub fn fc_beta(params: &ModelParams, cache: &ActivationCache, class: usize) -> Result<Vec<f64>> {
    let (_, fc1) = logit_backward(params, cache, class)?;
    let width = params.fc1.outputs;
    let mut beta = vec![0.0; width];
    for row in fc1.weights.chunks_exact(width) {
        for (b, g) in beta.iter_mut().zip(row) {
            *b += g;
        }
    }
    Ok(beta)
}

pub fn importance_weights(params: &ModelParams, cache: &ActivationCache, class: usize) -> Result<ImportanceWeights> {
    Ok(ImportanceWeights {
        alpha: gradcam_alpha(params, cache, class)?,
        beta: fc_beta(params, cache, class)?,
    })
}

/// FC map on the pooled grid: `M_x = sum_k A[x,k] sum_l beta_l W1[(x,k), l]`,
/// left signed.
pub fn fc_map_pooled(params: &ModelParams, cache: &ActivationCache, class: usize) -> Result<Vec<f64>> {
    let beta = fc_beta(params, cache, class)?;
    let pooled = cache.pooled();
    let channels = pooled.channels();
    let mut out = vec![0.0; pooled.length()];
    let rows = params.fc1.weights.chunks_exact(params.fc1.outputs);
    for (i, (a, row)) in cache.flat.iter().zip(rows).enumerate() {
        let projected: f64 = row.iter().zip(&beta).map(|(w, b)| w * b).sum();
        out[i / channels] += a * projected;
    }
    Ok(out)
}

pub fn fc_contribution_map(params: &ModelParams, input: &[f64], class: usize) -> Result<ContributionMap> {
    let cache = forward_infer(params, input)?;
    Ok(ContributionMap {
        values: upsample_linear(&fc_map_pooled(params, &cache, class)?, input.len())?,
        kind: MapKind::FcMap,
        target_class: class,
    })
}

pub fn contribution_map(params: &ModelParams, input: &[f64], class: usize, kind: MapKind) -> Result<ContributionMap> {
    match kind {
        MapKind::GradCam => gradcam_map(params, input, class),
        MapKind::FcMap => fc_contribution_map(params, input, class),
    }
}

/// Linear interpolation that stretches the source so its first and last
/// samples land on the first and last target samples.
pub fn upsample_linear(source: &[f64], target_len: usize) -> Result<Vec<f64>> {
    if source.len() < 2 {
        return Err(Error::Input(format!(
            "upsampling needs at least 2 source samples, got {}",
            source.len()
        )));
    }
    if target_len < 2 {
        return Err(Error::Input(format!("upsampling target length {target_len} is below 2")));
    }
    let last = source.len() - 1;
    let span = (target_len - 1) as f64;
    Ok((0..target_len)
        .map(|j| {
            if j == target_len - 1 {
                return source[last];
            }
            let pos = (j * last) as f64 / span;
            let i = (pos.floor() as usize).min(last - 1);
            let f = pos - i as f64;
            let (a, b) = (source[i], source[i + 1]);
            a + f * (b - a)
        })
        .collect())
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Largest value within `radius` samples of `center`.
pub fn window_max(values: &[f64], center: usize, radius: usize) -> f64 {
    let lo = center.saturating_sub(radius);
    let hi = (center + radius).min(values.len().saturating_sub(1));
    values[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Full width at half maximum, in samples, of the lobe around the largest
/// value within `radius` of `center`. Crossings are linearly interpolated.
/// `None` if the lobe is not positive or runs off either end.
pub fn half_max_width(values: &[f64], center: usize, radius: usize) -> Option<f64> {
    if values.is_empty() || center >= values.len() {
        return None;
    }
    let lo = center.saturating_sub(radius);
    let hi = (center + radius).min(values.len() - 1);
    let peak = (lo..=hi).fold(lo, |best, i| if values[i] > values[best] { i } else { best });
    let top = values[peak];
    if !(top > 0.0) {
        return None;
    }
    let half = top / 2.0;
    let crossing = |inside: usize, outside: usize| {
        let (a, b) = (values[inside], values[outside]);
        inside as f64 + (outside as f64 - inside as f64) * (a - half) / (a - b)
    };
    let mut l = peak;
    while values[l] >= half {
        l = l.checked_sub(1)?;
    }
    let mut r = peak;
    while values[r] >= half {
        r += 1;
        if r == values.len() {
            return None;
        }
    }
    Some(crossing(r - 1, r) - crossing(l + 1, l))
}

//! The spectrum classifier: `(conv -> leaky ReLU -> max pool) x n`, flatten,
//! a linear dense layer, dropout, and a dense output layer producing logits.
//!
//! Softmax is applied only by [`predict`] and by the training loss; every
//! other entry point works on raw logits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::ndcore::{
    conv1d_backward_accumulate, conv1d_forward, dropout, fc_backward_batch_accumulate, fc_forward_batch,
    leaky_relu_backward_in_place, leaky_relu_in_place, maxpool2_backward, maxpool2_forward, pooled_length,
    softmax, ChannelMap, ConvFilterBank, ConvGrads, DenseGrads, DenseWeights, Mode, PoolRecord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlock {
    pub filters: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub input_length: usize,
    pub conv_blocks: Vec<ConvBlock>,
    pub fc1_width: usize,
    pub dropout_keep: f64,
    pub n_classes: usize,
    pub leaky_alpha: f64,
}

impl ArchConfig {
    /// Two blocks of 64 filters of size 8, a 128-wide hidden layer,
    /// dropout 0.5 and leaky slope 0.2.
    pub fn new(input_length: usize, n_classes: usize) -> Self {
        Self {
            input_length,
            conv_blocks: vec![ConvBlock { filters: 64, size: 8 }; 2],
            fc1_width: 128,
            dropout_keep: 0.5,
            n_classes,
            leaky_alpha: 0.2,
        }
    }

    /// Replaces every block's filter count and size.
    pub fn with_filters(mut self, filters: usize, size: usize) -> Self {
        for b in &mut self.conv_blocks {
            *b = ConvBlock { filters, size };
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.input_length == 0 {
            return bad("input_length must be positive".into());
        }
        if self.conv_blocks.is_empty() {
            return bad("at least one convolution block is required".into());
        }
        if let Some(b) = self.conv_blocks.iter().find(|b| b.filters == 0 || b.size == 0) {
            return bad(format!("invalid convolution block {b:?}"));
        }
        if self.fc1_width == 0 {
            return bad("fc1_width must be positive".into());
        }
        if self.n_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.n_classes));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return bad(format!("dropout_keep {} not in (0, 1]", self.dropout_keep));
        }
        if !(self.leaky_alpha >= 0.0 && self.leaky_alpha < 1.0) {
            return bad(format!("leaky_alpha {} not in [0, 1)", self.leaky_alpha));
        }
        Ok(())
    }

    /// Length of the last pooled feature map.
    pub fn pooled_length(&self) -> usize {
        self.conv_blocks.iter().fold(self.input_length, |len, _| pooled_length(len))
    }

    /// Channel count of the last pooled feature map.
    pub fn pooled_channels(&self) -> usize {
        self.conv_blocks.last().map_or(0, |b| b.filters)
    }

    pub fn flat_length(&self) -> usize {
        self.pooled_length() * self.pooled_channels()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub arch: ArchConfig,
    pub conv: Vec<ConvFilterBank>,
    pub fc1: DenseWeights,
    pub fc2: DenseWeights,
}

/// A parameter tensor with a stable name and declared shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

impl ModelParams {
    /// All-zero parameters of the right shapes.
    pub fn zeros(arch: &ArchConfig) -> Result<Self> {
        arch.validate()?;
        let mut conv = Vec::with_capacity(arch.conv_blocks.len());
        let mut in_ch = 1;
        for b in &arch.conv_blocks {
            conv.push(ConvFilterBank::zeros(b.filters, in_ch, b.size));
            in_ch = b.filters;
        }
        Ok(Self {
            arch: arch.clone(),
            conv,
            fc1: DenseWeights::zeros(arch.flat_length(), arch.fc1_width),
            fc2: DenseWeights::zeros(arch.fc1_width, arch.n_classes),
        })
    }

    /// Tensors in canonical order: per block weight and bias, then
    /// `fc1.weight`, `fc1.bias`, `fc2.weight`, `fc2.bias`.
    pub fn named_tensors(&self) -> Vec<NamedTensor<'_>> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter().enumerate() {
            out.push(NamedTensor {
                name: format!("conv{i}.weight"),
                shape: vec![c.out_channels, c.in_channels, c.size],
                data: &c.weights,
            });
            out.push(NamedTensor {
                name: format!("conv{i}.bias"),
                shape: vec![c.out_channels],
                data: &c.bias,
            });
        }
        for (name, d) in [("fc1", &self.fc1), ("fc2", &self.fc2)] {
            out.push(NamedTensor {
                name: format!("{name}.weight"),
                shape: vec![d.inputs, d.outputs],
                data: &d.weights,
            });
            out.push(NamedTensor {
                name: format!("{name}.bias"),
                shape: vec![d.outputs],
                data: &d.bias,
            });
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for c in &mut self.conv {
            out.push(&mut c.weights);
            out.push(&mut c.bias);
        }
        out.push(&mut self.fc1.weights);
        out.push(&mut self.fc1.bias);
        out.push(&mut self.fc2.weights);
        out.push(&mut self.fc2.bias);
        out
    }

    /// Rebuilds parameters from tensors listed in [`ModelParams::named_tensors`]
    /// order. Names and shapes must match the architecture exactly.
    pub fn from_tensors(arch: &ArchConfig, tensors: Vec<(String, Vec<usize>, Vec<f64>)>) -> Result<Self> {
        let mut params = Self::zeros(arch)?;
        let expected: Vec<(String, Vec<usize>)> =
            params.named_tensors().into_iter().map(|t| (t.name, t.shape)).collect();
        check_dim("tensor count", expected.len(), tensors.len())?;
        for ((name, shape), (got_name, got_shape, _)) in expected.iter().zip(&tensors) {
            if name != got_name || shape != got_shape {
                return Err(Error::Input(format!(
                    "expected tensor {name} {shape:?}, found {got_name} {got_shape:?}"
                )));
            }
        }
        for (slot, (name, _, data)) in params.tensors_mut().into_iter().zip(tensors) {
            check_dim("tensor length", slot.len(), data.len())?;
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("tensor {name} holds non-finite values")));
            }
            *slot = data;
        }
        Ok(params)
    }

    pub fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|t| t.data.len()).sum()
    }
}

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
pub fn init_model(arch: &ArchConfig, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(arch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fill = |w: &mut [f64], fan_in: usize, fan_out: usize| {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in w {
            *v = rng.random_range(-limit..limit);
        }
    };
    for c in &mut params.conv {
        fill(&mut c.weights, c.in_channels * c.size, c.out_channels * c.size);
    }
    fill(&mut params.fc1.weights, params.fc1.inputs, params.fc1.outputs);
    fill(&mut params.fc2.weights, params.fc2.inputs, params.fc2.outputs);
    Ok(params)
}

/// Gradients with the same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv: Vec<ConvGrads>,
    pub fc1: DenseGrads,
    pub fc2: DenseGrads,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            conv: params.conv.iter().map(ConvGrads::zeros_like).collect(),
            fc1: DenseGrads::zeros_like(&params.fc1),
            fc2: DenseGrads::zeros_like(&params.fc2),
        }
    }

    /// Same order as [`ModelParams::tensors_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for c in &self.conv {
            out.push(&c.weights);
            out.push(&c.bias);
        }
        out.push(&self.fc1.weights);
        out.push(&self.fc1.bias);
        out.push(&self.fc2.weights);
        out.push(&self.fc2.bias);
        out
    }

    pub fn scale(&mut self, factor: f64) {
        let all = self
            .conv
            .iter_mut()
            .flat_map(|c| [&mut c.weights, &mut c.bias])
            .chain([&mut self.fc1.weights, &mut self.fc1.bias, &mut self.fc2.weights, &mut self.fc2.bias]);
        for t in all {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCache {
    /// Convolution output before the activation.
    pub pre_activation: ChannelMap,
    pub pool: PoolRecord,
}

/// Everything a backward pass or a contribution map needs from a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCache {
    pub input: ChannelMap,
    pub blocks: Vec<BlockCache>,
    /// Last pooled map flattened position-major.
    pub flat: Vec<f64>,
    pub fc1_out: Vec<f64>,
    pub dropout_mask: Vec<f64>,
    pub logits: Vec<f64>,
    pub mode: Mode,
}

impl ActivationCache {
    /// The last pooled feature map (channels x pooled positions).
    pub fn pooled(&self) -> &ChannelMap {
        &self.blocks.last().expect("at least one block").pool.output
    }

    /// Input of the `i`-th convolution.
    pub fn block_input(&self, i: usize) -> &ChannelMap {
        if i == 0 {
            &self.input
        } else {
            &self.blocks[i - 1].pool.output
        }
    }

    pub fn dropout_output(&self) -> Vec<f64> {
        self.fc1_out.iter().zip(&self.dropout_mask).map(|(h, m)| h * m).collect()
    }
}

fn check_input(params: &ModelParams, input: &[f64]) -> Result<()> {
    check_dim("model input length", params.arch.input_length, input.len())?;
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("spectrum contains non-finite intensities".into()));
    }
    Ok(())
}

fn check_shapes(params: &ModelParams) -> Result<()> {
    let arch = &params.arch;
    check_dim("conv block count", arch.conv_blocks.len(), params.conv.len())?;
    check_dim("fc1 inputs", arch.flat_length(), params.fc1.inputs)?;
    check_dim("fc2 inputs", params.fc1.outputs, params.fc2.inputs)?;
    check_dim("fc2 outputs", arch.n_classes, params.fc2.outputs)?;
    Ok(())
}

fn conv_stack(params: &ModelParams, input: &[f64]) -> Result<(ChannelMap, Vec<BlockCache>)> {
    let alpha = params.arch.leaky_alpha;
    let x = ChannelMap::from_signal(input.to_vec())?;
    let mut blocks: Vec<BlockCache> = Vec::with_capacity(params.conv.len());
    for filters in &params.conv {
        let block_in = blocks.last().map_or(&x, |b| &b.pool.output);
        let pre = conv1d_forward(block_in, filters)?;
        let mut act = pre.clone();
        leaky_relu_in_place(act.as_mut_slice(), alpha);
        let pool = maxpool2_forward(&act);
        blocks.push(BlockCache {
            pre_activation: pre,
            pool,
        });
    }
    Ok((x, blocks))
}

/// Forward pass over several spectra. The dense layers run as one matrix
/// product per batch; dropout masks are drawn in sample order.
pub fn forward_batch<R: Rng + ?Sized>(
    params: &ModelParams,
    inputs: &[&[f64]],
    mode: Mode,
    rng: &mut R,
) -> Result<Vec<ActivationCache>> {
    check_shapes(params)?;
    let batch = inputs.len();
    let flat_len = params.fc1.inputs;
    let mut flats = vec![0.0; batch * flat_len];
    let mut stacks = Vec::with_capacity(batch);
    for (input, flat) in inputs.iter().zip(flats.chunks_exact_mut(flat_len)) {
        check_input(params, input)?;
        let (x, blocks) = conv_stack(params, input)?;
        blocks.last().expect("validated arch has blocks").pool.output.flatten_into(flat);
        stacks.push((x, blocks));
    }
    let hidden = fc_forward_batch(&flats, batch, &params.fc1)?;
    let width = params.fc1.outputs;
    let mut dropped = vec![0.0; batch * width];
    let mut masks = Vec::with_capacity(batch);
    for (h, d) in hidden.chunks_exact(width).zip(dropped.chunks_exact_mut(width)) {
        let (out, mask) = dropout(h, params.arch.dropout_keep, mode, rng);
        d.copy_from_slice(&out);
        masks.push(mask);
    }
    let logits = fc_forward_batch(&dropped, batch, &params.fc2)?;
    let n = params.fc2.outputs;
    Ok(stacks
        .into_iter()
        .zip(masks)
        .enumerate()
        .map(|(i, ((input, blocks), dropout_mask))| ActivationCache {
            input,
            blocks,
            flat: flats[i * flat_len..(i + 1) * flat_len].to_vec(),
            fc1_out: hidden[i * width..(i + 1) * width].to_vec(),
            dropout_mask,
            logits: logits[i * n..(i + 1) * n].to_vec(),
            mode,
        })
        .collect())
}

/// Single-spectrum forward pass returning logits and the activation cache.
pub fn forward<R: Rng + ?Sized>(
    params: &ModelParams,
    input: &[f64],
    mode: Mode,
    rng: &mut R,
) -> Result<(Vec<f64>, ActivationCache)> {
    let cache = forward_batch(params, &[input], mode, rng)?.pop().expect("one sample");
    Ok((cache.logits.clone(), cache))
}

/// Inference-mode forward pass; no RNG is consumed.
pub fn forward_infer(params: &ModelParams, input: &[f64]) -> Result<ActivationCache> {
    let mut unused = NoRng;
    Ok(forward(params, input, Mode::Infer, &mut unused)?.1)
}

/// Gradient of the flattened pooled features given a logit cotangent, with
/// dropout masks taken from the caches. Dense parameter gradients are
/// accumulated into `fc1` and `fc2`.
pub(crate) fn dense_backward(
    params: &ModelParams,
    caches: &[&ActivationCache],
    grad_logits: &[f64],
    fc1: &mut DenseGrads,
    fc2: &mut DenseGrads,
) -> Result<Vec<f64>> {
    let batch = caches.len();
    let width = params.fc1.outputs;
    check_dim("grad_logits length", batch * params.fc2.outputs, grad_logits.len())?;
    let mut dropped = Vec::with_capacity(batch * width);
    let mut flats = Vec::with_capacity(batch * params.fc1.inputs);
    for c in caches {
        check_dim("cache logits", params.fc2.outputs, c.logits.len())?;
        check_dim("cache flat length", params.fc1.inputs, c.flat.len())?;
        dropped.extend(c.dropout_output());
        flats.extend_from_slice(&c.flat);
    }
    let mut grad_hidden = fc_backward_batch_accumulate(grad_logits, &dropped, batch, &params.fc2, fc2, true)?
        .expect("input gradient requested");
    for (g, c) in grad_hidden.chunks_exact_mut(width).zip(caches) {
        for (gv, m) in g.iter_mut().zip(&c.dropout_mask) {
            *gv *= m;
        }
    }
    Ok(fc_backward_batch_accumulate(&grad_hidden, &flats, batch, &params.fc1, fc1, true)?
        .expect("input gradient requested"))
}

/// Backpropagates `grad_logits` (batch x classes, row-major) through every
/// cached sample and returns gradients summed over the batch.
pub fn backward_batch(params: &ModelParams, caches: &[ActivationCache], grad_logits: &[f64]) -> Result<Gradients> {
    check_shapes(params)?;
    let mut grads = Gradients::zeros_like(params);
    let refs: Vec<&ActivationCache> = caches.iter().collect();
    let grad_flat = dense_backward(params, &refs, grad_logits, &mut grads.fc1, &mut grads.fc2)?;
    let flat_len = params.fc1.inputs;
    let alpha = params.arch.leaky_alpha;
    for (cache, gf) in caches.iter().zip(grad_flat.chunks_exact(flat_len)) {
        check_dim("cache block count", params.conv.len(), cache.blocks.len())?;
        let pooled = cache.pooled();
        let mut grad = ChannelMap::unflatten(gf, pooled.channels(), pooled.length())?;
        for (i, (filters, block)) in params.conv.iter().zip(&cache.blocks).enumerate().rev() {
            let mut g = maxpool2_backward(&grad, &block.pool)?;
            leaky_relu_backward_in_place(g.as_mut_slice(), block.pre_activation.as_slice(), alpha);
            match conv1d_backward_accumulate(&g, cache.block_input(i), filters, &mut grads.conv[i], i > 0)? {
                Some(gi) => grad = gi,
                None => break,
            }
        }
    }
    Ok(grads)
}

/// Parameter gradients for one cached forward pass.
pub fn backward(params: &ModelParams, cache: &ActivationCache, grad_logits: &[f64]) -> Result<Gradients> {
    backward_batch(params, std::slice::from_ref(cache), grad_logits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub class: usize,
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict(params: &ModelParams, input: &[f64]) -> Result<Prediction> {
    Ok(predict_batch(params, &[input])?.pop().expect("one sample"))
}

pub fn predict_batch(params: &ModelParams, inputs: &[&[f64]]) -> Result<Vec<Prediction>> {
    let caches = forward_batch(params, inputs, Mode::Infer, &mut NoRng)?;
    Ok(caches
        .iter()
        .map(|c| {
            let probs = softmax(&c.logits);
            let class = argmax(&probs);
            Prediction { probs, class }
        })
        .collect())
}

/// RNG stand-in for inference passes, which never draw.
pub(crate) struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("inference does not consume randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("inference does not consume randomness")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("inference does not consume randomness")
    }
}

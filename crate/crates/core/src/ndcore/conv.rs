use serde::{Deserialize, Serialize};

use super::gemm::{gemm, View};
use super::ChannelMap;
use crate::error::{check_dim, Error, Result};

/// Stride-1 filters with same-length zero padding.
///
/// `weights` is laid out `[out][in][tap]`, which doubles as a row-major
/// `out x (in * size)` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvFilterBank {
    pub out_channels: usize,
    pub in_channels: usize,
    pub size: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvFilterBank {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        size: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 || size == 0 {
            return Err(Error::Config(format!(
                "filter bank needs positive shape, got {out_channels}x{in_channels}x{size}"
            )));
        }
        check_dim("ConvFilterBank weights", out_channels * in_channels * size, weights.len())?;
        check_dim("ConvFilterBank bias", out_channels, bias.len())?;
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite filter parameter".into()));
        }
        Ok(Self {
            out_channels,
            in_channels,
            size,
            weights,
            bias,
        })
    }

    pub fn zeros(out_channels: usize, in_channels: usize, size: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            size,
            weights: vec![0.0; out_channels * in_channels * size],
            bias: vec![0.0; out_channels],
        }
    }

    #[inline]
    pub fn weight(&self, out: usize, inp: usize, tap: usize) -> f64 {
        self.weights[(out * self.in_channels + inp) * self.size + tap]
    }

    /// Zero padding on the left; the right side gets the remainder.
    pub fn left_pad(&self) -> usize {
        (self.size - 1) / 2
    }
}

/// Parameter gradients of one filter bank, same layout as [`ConvFilterBank`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvGrads {
    pub fn zeros_like(filters: &ConvFilterBank) -> Self {
        Self {
            weights: vec![0.0; filters.weights.len()],
            bias: vec![0.0; filters.bias.len()],
        }
    }
}

fn padded(input: &ChannelMap, size: usize, left: usize) -> (Vec<f64>, usize) {
    let len = input.length();
    let padded_len = len + size - 1;
    let mut buf = vec![0.0; input.channels() * padded_len];
    for k in 0..input.channels() {
        buf[k * padded_len + left..k * padded_len + left + len].copy_from_slice(input.channel(k));
    }
    (buf, padded_len)
}

/// `out[k'][x] = b[k'] + sum_k sum_t w[k'][k][t] * x_pad[k][x + t - left]`.
pub fn conv1d_forward(input: &ChannelMap, filters: &ConvFilterBank) -> Result<ChannelMap> {
    check_dim("conv1d_forward input channels", filters.in_channels, input.channels())?;
    let len = input.length();
    let (cin, cout, size) = (filters.in_channels, filters.out_channels, filters.size);
    let (pad, plen) = padded(input, size, filters.left_pad());

    let mut out = vec![0.0; cout * len];
    for (k, row) in out.chunks_exact_mut(len).enumerate() {
        row.fill(filters.bias[k]);
    }
    // One GEMM per tap: out += W[:, :, t] * pad[:, t..t + len]
    for t in 0..size {
        let w_t = View {
            offset: t,
            rows: cout,
            cols: cin,
            row_stride: cin * size,
            col_stride: size,
        };
        let x_t = View {
            offset: t,
            rows: cin,
            cols: len,
            row_stride: plen,
            col_stride: 1,
        };
        gemm(1.0, &filters.weights, w_t, &pad, x_t, 1.0, &mut out, View::row_major(cout, len));
    }
    Ok(ChannelMap::from_raw(cout, len, out))
}

/// Exact gradients of [`conv1d_forward`] with respect to its input, weights
/// and bias.
pub fn conv1d_backward(
    grad_output: &ChannelMap,
    input: &ChannelMap,
    filters: &ConvFilterBank,
) -> Result<(ChannelMap, ConvGrads)> {
    let mut grads = ConvGrads::zeros_like(filters);
    let grad_input = conv1d_backward_accumulate(grad_output, input, filters, &mut grads, true)?;
    Ok((grad_input.expect("input gradient requested"), grads))
}

/// Adds this sample's parameter gradients into `grads`; the input gradient
/// is computed only when `want_input` is set.
pub(crate) fn conv1d_backward_accumulate(
    grad_output: &ChannelMap,
    input: &ChannelMap,
    filters: &ConvFilterBank,
    grads: &mut ConvGrads,
    want_input: bool,
) -> Result<Option<ChannelMap>> {
    check_dim("conv1d_backward input channels", filters.in_channels, input.channels())?;
    check_dim("conv1d_backward output channels", filters.out_channels, grad_output.channels())?;
    check_dim("conv1d_backward length", input.length(), grad_output.length())?;
    check_dim("conv1d_backward weight grads", filters.weights.len(), grads.weights.len())?;
    check_dim("conv1d_backward bias grads", filters.bias.len(), grads.bias.len())?;
    let len = input.length();
    let (cin, cout, size) = (filters.in_channels, filters.out_channels, filters.size);
    let left = filters.left_pad();
    let (pad, plen) = padded(input, size, left);
    let g = grad_output.as_slice();

    for (k, gb) in grads.bias.iter_mut().enumerate() {
        *gb += grad_output.channel(k).iter().sum::<f64>();
    }

    // dW[:, :, t] += g * pad[:, t..t + len]^T
    for t in 0..size {
        let x_t_transposed = View {
            offset: t,
            rows: len,
            cols: cin,
            row_stride: 1,
            col_stride: plen,
        };
        let dw_t = View {
            offset: t,
            rows: cout,
            cols: cin,
            row_stride: cin * size,
            col_stride: size,
        };
        gemm(1.0, g, View::row_major(cout, len), &pad, x_t_transposed, 1.0, &mut grads.weights, dw_t);
    }

    if !want_input {
        return Ok(None);
    }

    // dpad[:, t..t + len] += W[:, :, t]^T * g
    let mut dpad = vec![0.0; cin * plen];
    for t in 0..size {
        let w_t_transposed = View {
            offset: t,
            rows: cin,
            cols: cout,
            row_stride: size,
            col_stride: cin * size,
        };
        let dx_t = View {
            offset: t,
            rows: cin,
            cols: len,
            row_stride: plen,
            col_stride: 1,
        };
        gemm(1.0, &filters.weights, w_t_transposed, g, View::row_major(cout, len), 1.0, &mut dpad, dx_t);
    }
    let mut grad_input = vec![0.0; cin * len];
    for k in 0..cin {
        grad_input[k * len..(k + 1) * len].copy_from_slice(&dpad[k * plen + left..k * plen + left + len]);
    }
    Ok(Some(ChannelMap::from_raw(cin, len, grad_input)))
}

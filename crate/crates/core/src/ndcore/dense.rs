use serde::{Deserialize, Serialize};

use super::gemm::{gemm, View};
use crate::error::{check_dim, Error, Result};

/// Fully-connected weights stored `[input][output]` row-major, so a batch of
/// row vectors multiplies as `Y = X W + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseWeights {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseWeights {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Config(format!("dense layer needs positive shape, got {inputs}x{outputs}")));
        }
        check_dim("DenseWeights weights", inputs * outputs, weights.len())?;
        check_dim("DenseWeights bias", outputs, bias.len())?;
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite dense parameter".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn weight(&self, input: usize, output: usize) -> f64 {
        self.weights[input * self.outputs + output]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseGrads {
    pub fn zeros_like(dense: &DenseWeights) -> Self {
        Self {
            weights: vec![0.0; dense.weights.len()],
            bias: vec![0.0; dense.bias.len()],
        }
    }
}

pub fn fc_forward(input: &[f64], dense: &DenseWeights) -> Result<Vec<f64>> {
    fc_forward_batch(input, 1, dense)
}

/// Batched forward over `batch` row vectors stored back to back.
pub fn fc_forward_batch(inputs: &[f64], batch: usize, dense: &DenseWeights) -> Result<Vec<f64>> {
    check_dim("fc_forward input", batch * dense.inputs, inputs.len())?;
    let mut out = Vec::with_capacity(batch * dense.outputs);
    for _ in 0..batch {
        out.extend_from_slice(&dense.bias);
    }
    gemm(
        1.0,
        inputs,
        View::row_major(batch, dense.inputs),
        &dense.weights,
        View::row_major(dense.inputs, dense.outputs),
        1.0,
        &mut out,
        View::row_major(batch, dense.outputs),
    );
    Ok(out)
}

pub fn fc_backward(grad_output: &[f64], input: &[f64], dense: &DenseWeights) -> Result<(Vec<f64>, DenseGrads)> {
    fc_backward_batch(grad_output, input, 1, dense)
}

pub fn fc_backward_batch(
    grad_output: &[f64],
    inputs: &[f64],
    batch: usize,
    dense: &DenseWeights,
) -> Result<(Vec<f64>, DenseGrads)> {
    let mut grads = DenseGrads::zeros_like(dense);
    let gi = fc_backward_batch_accumulate(grad_output, inputs, batch, dense, &mut grads, true)?;
    Ok((gi.expect("input gradient requested"), grads))
}

/// Sums the batch's parameter gradients into `grads`.
pub(crate) fn fc_backward_batch_accumulate(
    grad_output: &[f64],
    inputs: &[f64],
    batch: usize,
    dense: &DenseWeights,
    grads: &mut DenseGrads,
    want_input: bool,
) -> Result<Option<Vec<f64>>> {
    check_dim("fc_backward grad_output", batch * dense.outputs, grad_output.len())?;
    check_dim("fc_backward input", batch * dense.inputs, inputs.len())?;
    check_dim("fc_backward weight grads", dense.weights.len(), grads.weights.len())?;
    check_dim("fc_backward bias grads", dense.bias.len(), grads.bias.len())?;
    for row in grad_output.chunks_exact(dense.outputs) {
        for (gb, g) in grads.bias.iter_mut().zip(row) {
            *gb += g;
        }
    }
    // dW += X^T G
    gemm(
        1.0,
        inputs,
        View::row_major(batch, dense.inputs).transposed(),
        grad_output,
        View::row_major(batch, dense.outputs),
        1.0,
        &mut grads.weights,
        View::row_major(dense.inputs, dense.outputs),
    );
    if !want_input {
        return Ok(None);
    }
    // dX = G W^T
    let mut grad_input = vec![0.0; batch * dense.inputs];
    gemm(
        1.0,
        grad_output,
        View::row_major(batch, dense.outputs),
        &dense.weights,
        View::row_major(dense.inputs, dense.outputs).transposed(),
        0.0,
        &mut grad_input,
        View::row_major(batch, dense.inputs),
    );
    Ok(Some(grad_input))
}

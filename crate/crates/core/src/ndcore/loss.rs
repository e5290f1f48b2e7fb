use crate::error::{check_dim, Error, Result};

/// Softmax shifted by the max logit.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxCrossEntropy {
    pub loss: f64,
    pub probs: Vec<f64>,
    /// `probs - onehot`
    pub grad_logits: Vec<f64>,
}

/// Cross-entropy `-sum_n t_n log p_n` of the softmax of `logits` against a
/// one-hot target.
pub fn softmax_cross_entropy(logits: &[f64], onehot: &[f64]) -> Result<SoftmaxCrossEntropy> {
    check_dim("softmax_cross_entropy", logits.len(), onehot.len())?;
    let ones = onehot.iter().filter(|&&v| v == 1.0).count();
    if ones != 1 || onehot.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Input("target is not a one-hot vector".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let mut loss = 0.0;
    for (z, t) in logits.iter().zip(onehot) {
        if *t == 1.0 {
            loss -= z - max - log_total;
        }
    }
    let probs = softmax(logits);
    let grad_logits = probs.iter().zip(onehot).map(|(p, t)| p - t).collect();
    Ok(SoftmaxCrossEntropy {
        loss,
        probs,
        grad_logits,
    })
}

/// `x` for `x >= 0`, `alpha * x` otherwise.
pub fn leaky_relu(x: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    leaky_relu_in_place(&mut out, alpha);
    out
}

pub fn leaky_relu_in_place(x: &mut [f64], alpha: f64) {
    for v in x {
        if *v < 0.0 {
            *v *= alpha;
        }
    }
}

/// The derivative at exactly zero is taken as 1.
pub fn leaky_relu_backward(grad_output: &[f64], input: &[f64], alpha: f64) -> Vec<f64> {
    let mut grad = grad_output.to_vec();
    leaky_relu_backward_in_place(&mut grad, input, alpha);
    grad
}

pub fn leaky_relu_backward_in_place(grad: &mut [f64], input: &[f64], alpha: f64) {
    assert_eq!(grad.len(), input.len(), "leaky_relu_backward shape");
    for (g, &x) in grad.iter_mut().zip(input) {
        if x < 0.0 {
            *g *= alpha;
        }
    }
}

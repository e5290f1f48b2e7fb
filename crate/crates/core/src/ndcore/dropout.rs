use rand::Rng;

use super::Mode;

/// Inverted dropout.
///
/// Returns the output and the multiplicative mask that produced it. In
/// training, each entry is kept with probability `keep_prob` and scaled by
/// `1 / keep_prob`, so the mask holds `0` or `1 / keep_prob`. In inference
/// the mask is all ones and the output equals the input.
pub fn dropout<R: Rng + ?Sized>(input: &[f64], keep_prob: f64, mode: Mode, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    assert!(keep_prob > 0.0 && keep_prob <= 1.0, "keep_prob must lie in (0, 1]");
    let mask: Vec<f64> = match mode {
        Mode::Infer => vec![1.0; input.len()],
        Mode::Train if keep_prob == 1.0 => vec![1.0; input.len()],
        Mode::Train => {
            let scale = 1.0 / keep_prob;
            (0..input.len())
                .map(|_| if rng.random::<f64>() < keep_prob { scale } else { 0.0 })
                .collect()
        }
    };
    let out = input.iter().zip(&mask).map(|(x, m)| x * m).collect();
    (out, mask)
}

pub fn dropout_backward(grad_output: &[f64], mask: &[f64]) -> Vec<f64> {
    assert_eq!(grad_output.len(), mask.len(), "dropout_backward shape");
    grad_output.iter().zip(mask).map(|(g, m)| g * m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inference_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = [1.0, -2.0, 3.5];
        let (y, m) = dropout(&x, 0.5, Mode::Infer, &mut rng);
        assert_eq!(y, x.to_vec());
        assert_eq!(m, vec![1.0; 3]);
    }

    #[test]
    fn keep_all_in_training_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = [1.0, -2.0, 3.5];
        assert_eq!(dropout(&x, 1.0, Mode::Train, &mut rng).0, x.to_vec());
    }

    #[test]
    fn training_preserves_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = [1.0, -2.0, 0.5, 4.0];
        let draws = 10_000;
        let mut sums = [0.0; 4];
        for _ in 0..draws {
            let (y, _) = dropout(&x, 0.5, Mode::Train, &mut rng);
            for (s, v) in sums.iter_mut().zip(y) {
                *s += v;
            }
        }
        for (s, want) in sums.iter().zip(x) {
            let mean = s / draws as f64;
            assert!((mean - want).abs() <= 0.05 * want.abs(), "mean {mean} vs {want}");
        }
    }

    #[test]
    fn backward_applies_mask() {
        assert_eq!(dropout_backward(&[1.0, 1.0], &[0.0, 2.0]), vec![0.0, 2.0]);
    }
}

use super::ChannelMap;
use crate::error::{check_dim, Result};

/// Output of a width-2, stride-2 max pool together with the winning input
/// position of every output cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolRecord {
    pub output: ChannelMap,
    /// Channel-major `[k][p]`, each entry is an index into the input row.
    pub argmax: Vec<usize>,
    pub input_length: usize,
}

/// `ceil(len / 2)`: odd inputs are padded on the right with `-inf`.
pub fn pooled_length(len: usize) -> usize {
    len.div_ceil(2)
}

/// Non-overlapping max pooling with window 2. Ties go to the left element.
pub fn maxpool2_forward(input: &ChannelMap) -> PoolRecord {
    let len = input.length();
    let out_len = pooled_length(len);
    let c = input.channels();
    let mut out = Vec::with_capacity(c * out_len);
    let mut argmax = Vec::with_capacity(c * out_len);
    for k in 0..c {
        let row = input.channel(k);
        for p in 0..out_len {
            let i = 2 * p;
            // A missing right neighbour behaves like -inf and never wins.
            let win = if i + 1 < len && row[i + 1] > row[i] { i + 1 } else { i };
            out.push(row[win]);
            argmax.push(win);
        }
    }
    PoolRecord {
        output: ChannelMap::from_raw(c, out_len, out),
        argmax,
        input_length: len,
    }
}

/// Routes each output gradient to the input position that won the max.
pub fn maxpool2_backward(grad_output: &ChannelMap, record: &PoolRecord) -> Result<ChannelMap> {
    let c = record.output.channels();
    let out_len = record.output.length();
    check_dim("maxpool2_backward channels", c, grad_output.channels())?;
    check_dim("maxpool2_backward length", out_len, grad_output.length())?;
    let len = record.input_length;
    let mut grad = vec![0.0; c * len];
    for k in 0..c {
        let g = grad_output.channel(k);
        for p in 0..out_len {
            grad[k * len + record.argmax[k * out_len + p]] += g[p];
        }
    }
    Ok(ChannelMap::from_raw(c, len, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::fdcheck::{dot, max_rel_err, numeric_grad};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_case() {
        let r = maxpool2_forward(&ChannelMap::from_signal(vec![1.0, 3.0, 2.0, 0.0]).unwrap());
        assert_eq!(r.output.as_slice(), &[3.0, 2.0]);
        assert_eq!(r.argmax, vec![1, 2]);
        let g = maxpool2_backward(&ChannelMap::from_signal(vec![1.0, 1.0]).unwrap(), &r).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        let z = maxpool2_backward(&ChannelMap::zeros(1, 2), &r).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn odd_length_chain_1451_726_363() {
        let x = ChannelMap::from_signal((0..1451).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let p1 = maxpool2_forward(&x);
        assert_eq!(p1.output.length(), 726);
        let p2 = maxpool2_forward(&p1.output);
        assert_eq!(p2.output.length(), 363);
        // The lone trailing element is its own window.
        assert_eq!(p1.argmax[725], 1450);
        assert_eq!(p1.output.get(0, 725), x.get(0, 1450));
    }

    #[test]
    fn constant_input_breaks_ties_left() {
        let r = maxpool2_forward(&ChannelMap::new(2, 5, vec![4.0; 10]).unwrap());
        assert!(r.output.as_slice().iter().all(|&v| v == 4.0));
        assert_eq!(r.argmax, vec![0, 2, 4, 0, 2, 4]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Distinct values spaced well beyond the FD step, so no ties.
        let mut vals: Vec<f64> = (0..33).map(|i| i as f64 * 0.1).collect();
        for i in (1..vals.len()).rev() {
            let j = rng.random_range(0..=i);
            vals.swap(i, j);
        }
        let x = ChannelMap::new(3, 11, vals).unwrap();
        let rec = maxpool2_forward(&x);
        let proj: Vec<f64> = (0..3 * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = maxpool2_backward(&ChannelMap::new(3, 6, proj.clone()).unwrap(), &rec).unwrap();
        let fd = numeric_grad(x.as_slice(), |v| {
            dot(maxpool2_forward(&ChannelMap::new(3, 11, v.to_vec()).unwrap()).output.as_slice(), &proj)
        });
        assert!(max_rel_err(g.as_slice(), &fd) < 1e-5);
    }

    proptest! {
        #[test]
        fn length_law_and_argmax_in_window(len in 1usize..200, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = ChannelMap::from_signal((0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let r = maxpool2_forward(&x);
            prop_assert_eq!(r.output.length(), len.div_ceil(2));
            for (p, &a) in r.argmax.iter().enumerate() {
                prop_assert!(a == 2 * p || a == 2 * p + 1);
                prop_assert!(a < len);
            }
        }
    }
}

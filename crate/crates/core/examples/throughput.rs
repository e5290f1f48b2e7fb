//! Times batched training passes for a few architectures.
//!
//! `cargo run --release -p raman-cnn --example throughput`

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raman_cnn::model::{backward_batch, forward_batch, init_model, ArchConfig};
use raman_cnn::ndcore::Mode;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (len, filters, size) in [(1024, 64, 8), (1451, 64, 8), (1024, 16, 8), (1024, 8, 128), (1024, 64, 128)] {
        let arch = ArchConfig::new(len, 3).with_filters(filters, size);
        let params = init_model(&arch, 0).unwrap();
        let batch: Vec<Vec<f64>> = (0..32).map(|_| (0..len).map(|_| rng.random::<f64>()).collect()).collect();
        let refs: Vec<&[f64]> = batch.iter().map(|v| v.as_slice()).collect();
        let start = Instant::now();
        let caches = forward_batch(&params, &refs, Mode::Train, &mut rng).unwrap();
        let grad = vec![0.01; 32 * 3];
        let _ = backward_batch(&params, &caches, &grad).unwrap();
        let per = start.elapsed().as_secs_f64() / 32.0;
        println!("len {len:5} filters {filters:3} size {size:3}: {:.2} ms per sample", per * 1e3);
    }
}

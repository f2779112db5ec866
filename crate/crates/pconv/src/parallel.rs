//! Optional multi-threaded batch gradients.
//!
//! The batch is split into contiguous sample chunks, each chunk's loss and
//! gradient sums are computed sequentially on its own thread, and the
//! partial results are reduced in chunk order. Results are deterministic
//! for a fixed thread count, and a single thread reproduces the sequential
//! path bit for bit.

use pconv_core::net::{grad_sums, Gradients, ModelState, NetError, Tensor};

pub fn batch_grads_threaded(
    model: &ModelState,
    batch: &Tensor,
    labels: &[usize],
    threads: usize,
) -> Result<(f64, Gradients), NetError> {
    let bs = batch.shape()[0];
    if threads <= 1 || bs < 2 {
        return grad_sums(model, batch, labels);
    }
    let workers = threads.min(bs);
    let chunk = bs.div_ceil(workers);
    let sample_len: usize = batch.shape()[1..].iter().product();
    let sample_shape = &batch.shape()[1..];

    let results: Vec<Result<(f64, Gradients), NetError>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for lo in (0..bs).step_by(chunk) {
            let hi = (lo + chunk).min(bs);
            let labels = &labels[lo..hi];
            let data = &batch.data()[lo * sample_len..hi * sample_len];
            handles.push(scope.spawn(move || {
                let mut shape = vec![hi - lo];
                shape.extend_from_slice(sample_shape);
                let sub = Tensor::from_vec(&shape, data.to_vec());
                grad_sums(model, &sub, labels)
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut iter = results.into_iter();
    let (mut loss, mut grads) = iter.next().unwrap()?;
    for r in iter {
        let (l, g) = r?;
        loss += l;
        grads.add_assign(&g);
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pconv_core::net::{init_weights, ArchConfig};
    use pconv_core::rng::Xoshiro256;

    #[test]
    fn one_thread_matches_sequential_bitwise() {
        let arch = ArchConfig::new(6, 12, vec![2], vec![3], 3).unwrap();
        let model = init_weights(&arch, 5).unwrap();
        let mut rng = Xoshiro256::from_seed(8);
        let mut batch = Tensor::zeros(&[6, 1, 6, 12]);
        for v in batch.data_mut() {
            *v = rng.below(4) as f64;
        }
        let labels = [0usize, 1, 2, 0, 1, 2];
        let (l0, g0) = grad_sums(&model, &batch, &labels).unwrap();
        let (l1, g1) = batch_grads_threaded(&model, &batch, &labels, 1).unwrap();
        assert_eq!(l0.to_bits(), l1.to_bits());
        assert_eq!(g0, g1);
    }

    #[test]
    fn many_threads_agree_within_reassociation_noise() {
        let arch = ArchConfig::new(6, 12, vec![2], vec![3], 3).unwrap();
        let model = init_weights(&arch, 5).unwrap();
        let mut rng = Xoshiro256::from_seed(8);
        let mut batch = Tensor::zeros(&[7, 1, 6, 12]);
        for v in batch.data_mut() {
            *v = rng.below(4) as f64;
        }
        let labels = [0usize, 1, 2, 0, 1, 2, 0];
        let (l0, _) = grad_sums(&model, &batch, &labels).unwrap();
        let (l2, _) = batch_grads_threaded(&model, &batch, &labels, 3).unwrap();
        assert!((l0 - l2).abs() < 1e-9 * l0.abs().max(1.0));
        // Same thread count twice is bit-identical.
        let (l3, g3) = batch_grads_threaded(&model, &batch, &labels, 3).unwrap();
        let (l4, g4) = batch_grads_threaded(&model, &batch, &labels, 3).unwrap();
        assert_eq!(l3.to_bits(), l4.to_bits());
        assert_eq!(g3, g4);
    }
}

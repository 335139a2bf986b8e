//! Weight initialization. One seeded generator per run drives every
//! stochastic choice (init, dropout, teacher forcing, augmentation,
//! Bernoulli mixing) so runs reproduce exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub type RunRng = ChaCha8Rng;

/// Kaiming fan-in normal: std = sqrt(2 / fan_in). Used for conv and linear
/// weights feeding ReLU stacks.
pub fn kaiming<E: Scalar>(rng: &mut RunRng, shape: &[usize], fan_in: usize) -> Tensor<E> {
    let std = (2.0 / fan_in as f64).sqrt();
    let numel: usize = shape.iter().product();
    let data: Vec<E> = (0..numel)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            E::from_f64(z * std)
        })
        .collect();
    Tensor::new(shape, data)
}

/// Uniform in [-1/sqrt(dim), 1/sqrt(dim)]; recurrent weights and embeddings.
pub fn uniform_scaled<E: Scalar>(rng: &mut RunRng, shape: &[usize], dim: usize) -> Tensor<E> {
    let bound = 1.0 / (dim as f64).sqrt();
    let numel: usize = shape.iter().product();
    let data: Vec<E> = (0..numel)
        .map(|_| E::from_f64(rng.random_range(-bound..bound)))
        .collect();
    Tensor::new(shape, data)
}

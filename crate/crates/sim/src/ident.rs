//! Synthetic identities on the unit sphere, standing in for the real
//! feature extractors. Everything is seeded, so identical seeds give
//! identical embeddings and the hub state they produce is reproducible.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vigil_core::embedding::Embedding;

#[derive(Debug, Clone)]
pub struct SyntheticIdentity {
    pub seed: u64,
    pub dims: usize,
    pub base: Embedding,
}

fn gaussian_unit_vector(rng: &mut ChaCha8Rng, dims: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Base embedding drawn uniformly from the unit sphere. Each identity uses
/// its own stream, so adding identities never perturbs existing ones.
pub fn gen_identity(seed: u64, dims: usize) -> SyntheticIdentity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = gaussian_unit_vector(&mut rng, dims);
    let base = Embedding::normalize(&values, dims).expect("unit vector normalizes");
    SyntheticIdentity { seed, dims, base }
}

/// A noisy observation of the identity: base plus an isotropic unit
/// direction scaled by `sigma`, renormalized. Expected cosine to the base
/// decreases monotonically in sigma (roughly 1/sqrt(1 + sigma^2)).
pub fn gen_probe(identity: &SyntheticIdentity, sigma: f64, noise_seed: u64) -> Embedding {
    if sigma == 0.0 {
        return identity.base.clone();
    }
    // separate stream per (identity, probe) pair
    let mut rng = ChaCha8Rng::seed_from_u64(identity.seed ^ noise_seed.rotate_left(17));
    let noise = gaussian_unit_vector(&mut rng, identity.dims);
    let values: Vec<f64> = identity
        .base
        .values()
        .iter()
        .zip(noise.iter())
        .map(|(b, n)| b + sigma * n)
        .collect();
    Embedding::normalize(&values, identity.dims).expect("perturbed vector normalizes")
}

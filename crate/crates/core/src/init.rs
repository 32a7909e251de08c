//! Seeded parameter initialization: uniform on (-1/sqrt(fan_in), +1/sqrt(fan_in)),
//! with fan_in taken as the first dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

pub fn init_params(shape: &[usize], seed: u64) -> Tensor {
    let numel: usize = shape.iter().product();
    let bound = 1.0 / (shape[0] as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(numel);
    for _ in 0..numel {
        // random_range is half-open at the low end; resample the (measure
        // zero) exact -bound draw to keep the interval strictly open
        let mut v = rng.random_range(-bound..bound);
        while v <= -bound {
            v = rng.random_range(-bound..bound);
        }
        data.push(v);
    }
    Tensor::new(shape.to_vec(), data).expect("shape/data length match by construction")
}

/// Derives a per-parameter seed from a base seed and the parameter name, so
/// adding or reordering other parameters does not change this one's draw.
pub fn derive_seed(base: u64, name: &str) -> u64 {
    splitmix64(base ^ fnv1a(name.as_bytes()))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

#![allow(dead_code)]

pub mod cli;
pub mod gradcheck;
pub mod linear_oracle;
pub mod reference;
pub mod texture_oracle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gestational age at HC = 1, 100 and 175 mm, evaluated at 40 significant
/// digits with an arbitrary-precision library.
#[allow(clippy::excessive_precision)]
pub const GA_ORACLE: [(f64, f64); 3] = [
    (1.0, 27.82124691794239016222859),
    (100.0, 99.3155613038783377066603),
    (175.0, 141.5490895471541902674177),
];

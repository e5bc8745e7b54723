pub mod error;
pub mod eval;
pub mod forests;
pub mod matrix;
pub mod modelstore;
pub mod neural;
pub mod pca;
pub mod pipeline;
pub mod preprocess;
pub mod schema;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// SplitMix64 mix of `(seed, stream)`; gives independent seeds for derived RNGs.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

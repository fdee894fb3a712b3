//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by
//! `derive_seed(user_seed, stream)`, where `stream` is a fixed tag for the
//! consumer (init, per-epoch shuffle, per-solve minibatches, ...). This
//! keeps streams independent while staying bit-reproducible across
//! platforms and worker counts.

/// splitmix64 finalizer over `base ^ (stream * golden ratio)`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags. Indexed streams get a 2^32-wide band each so epoch or
/// validation-sample indices can never collide with another consumer.
pub(crate) mod streams {
    pub const INIT: u64 = 1;
    pub const BLOB_CENTERS: u64 = 2;
    pub const BLOB_SAMPLES: u64 = 3;
    pub const LABEL_FLIPS: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const SHUFFLE_BASE: u64 = 1 << 32;
    pub const LISSA_BASE: u64 = 2 << 32;
    pub const SCORE_SOLVE_BASE: u64 = 3 << 32;
}

//! Seed derivation and random streams.
//!
//! Every random stream in the crate is a ChaCha8 generator whose 256-bit key
//! is the little-endian concatenation of four successive SplitMix64 outputs
//! started from a 64-bit seed. Child seeds are derived from a parent seed, a
//! component label and a list of indices:
//!
//! ```text
//! h = splitmix64(seed)
//! for byte in label:   h = splitmix64(h ^ byte)
//! h = splitmix64(h ^ 0xff)            // label terminator
//! for index in indices: h = splitmix64(h ^ index)
//! ```
//!
//! so `(seed, label, indices)` fully determines a stream independent of
//! evaluation order or thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step: advances by the golden gamma and applies the finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for b in label.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h = splitmix64(h ^ 0xff);
    for &i in indices {
        h = splitmix64(h ^ i);
    }
    h
}

pub fn stream(seed: u64) -> Stream {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn derived_stream(seed: u64, label: &str, indices: &[u64]) -> Stream {
    stream(derive_seed(seed, label, indices))
}

/// Uniform integer in `0..n` by rejection on the top of the 64-bit range.
pub fn below<R: RngCore>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0, "below(0)");
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let r = rng.next_u64();
        if r < zone {
            return r % n;
        }
    }
}

/// In-place Fisher–Yates shuffle (descending swap positions).
pub fn shuffle<T, R: RngCore>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(&mut stream(seed), &mut idx);
    idx
}

/// Uniform real in `[0, 1)` with 53 random bits.
pub fn unit<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

//! Deterministic seeding and sampling helpers.
//!
//! All randomness in the pipeline flows from one root seed through
//! [`derive_seed`], so every scene, instance, and epoch gets a stable,
//! named sub-stream that reproduces bit-for-bit across runs.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Derives a named sub-seed from a root seed via FNV-1a over the labels.
pub fn derive_seed(root: u64, labels: &[&str]) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = FNV_OFFSET;
    for byte in root.to_le_bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    for label in labels {
        for byte in label.as_bytes() {
            hash ^= *byte as u64;
            hash = hash.wrapping_mul(FNV_PRIME);
        }
        // Separator so ["ab","c"] != ["a","bc"].
        hash ^= 0xff;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// A seeded RNG for one named sub-stream.
pub fn rng_for(root: u64, labels: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, labels))
}

/// Samples `k` distinct indices from `0..n` via a partial Fisher-Yates
/// shuffle. When `k >= n` all indices are returned in ascending order.
pub fn sample_indices(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    if items.len() < 2 {
        return;
    }
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Decimal rendering of an integer id, used when composing seed labels.
pub fn id_label(id: impl Into<u64>) -> String {
    let mut value = id.into();
    if value == 0 {
        return String::from("0");
    }
    let mut digits = Vec::new();
    while value > 0 {
        digits.push(b'0' + (value % 10) as u8);
        value /= 10;
    }
    digits.reverse();
    String::from_utf8(digits).expect("digits are ascii")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_is_stable_and_label_sensitive() {
        let a = derive_seed(42, &["scene", "alpha"]);
        let b = derive_seed(42, &["scene", "alpha"]);
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(42, &["scene", "beta"]));
        assert_ne!(a, derive_seed(43, &["scene", "alpha"]));
        assert_ne!(derive_seed(1, &["ab", "c"]), derive_seed(1, &["a", "bc"]));
    }

    #[test]
    fn sample_indices_distinct_and_deterministic() {
        let mut rng = rng_for(7, &["test"]);
        let picks = sample_indices(100, 10, &mut rng);
        assert_eq!(picks.len(), 10);
        let mut sorted = picks.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);

        let mut rng2 = rng_for(7, &["test"]);
        assert_eq!(picks, sample_indices(100, 10, &mut rng2));
    }

    #[test]
    fn sample_indices_saturates() {
        let mut rng = rng_for(1, &[]);
        assert_eq!(sample_indices(4, 100, &mut rng), vec![0, 1, 2, 3]);
    }

    #[test]
    fn id_label_renders_decimal() {
        assert_eq!(id_label(0u16), "0");
        assert_eq!(id_label(12345u16), "12345");
    }
}

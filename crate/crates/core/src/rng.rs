//! Keyed random substreams.
//!
//! A substream is a ChaCha8 generator whose 256-bit seed is derived from a
//! global seed plus string keys. Two substreams with different keys are
//! independent; the same keys always give the same stream regardless of
//! the order in which work is scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a generator for `(seed, keys...)`.
///
/// Keys are length-prefixed before hashing so `["ab", "c"]` and `["a", "bc"]`
/// map to different streams.
pub fn substream(seed: u64, keys: &[&str]) -> ChaCha8Rng {
    let mut hash = fnv1a(&seed.to_le_bytes(), FNV_OFFSET);
    for key in keys {
        hash = fnv1a(&(key.len() as u64).to_le_bytes(), hash);
        hash = fnv1a(key.as_bytes(), hash);
    }
    let mut state = hash ^ seed.rotate_left(32);
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
///
/// Panics if `bound` is zero.
pub fn below<R: RngCore>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "below() needs a positive bound");
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let product = u128::from(rng.next_u64()) * u128::from(bound);
        if (product as u64) >= threshold {
            return (product >> 64) as u64;
        }
    }
}

/// Draw `k` distinct indices from `0..n`, in draw order (partial Fisher-Yates).
pub fn sample_indices<R: RngCore>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot sample {k} of {n}");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + below(rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// In-place uniform shuffle.
pub fn shuffle<R: RngCore, T>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, (i + 1) as u64) as usize;
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_keys_same_stream() {
        let mut a = substream(7, &["Dup", "ex1"]);
        let mut b = substream(7, &["Dup", "ex1"]);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn keys_are_length_prefixed() {
        let mut a = substream(7, &["ab", "c"]);
        let mut b = substream(7, &["a", "bc"]);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn seed_changes_stream() {
        let mut a = substream(1, &["x"]);
        let mut b = substream(2, &["x"]);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut rng = substream(3, &["uniform"]);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[below(&mut rng, 5) as usize] += 1;
        }
        for c in counts {
            assert!((9_000..11_000).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn sample_indices_are_distinct() {
        let mut rng = substream(9, &["sample"]);
        let mut picked = sample_indices(&mut rng, 100, 30);
        picked.sort_unstable();
        picked.dedup();
        assert_eq!(picked.len(), 30);
        assert!(picked.iter().all(|&i| i < 100));
    }
}

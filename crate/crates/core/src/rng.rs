//! Deterministic randomness.
//!
//! Environment values come from a stateless counter-based hash of the site,
//! so the value at a site never depends on visit order. Replica streams are
//! ChaCha8 streams keyed by a hashed path `master -> command -> seed index`
//! with the replica index as the stream id.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::site::Site;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Absorbs 64-bit words one at a time. Each word is the little-endian
/// two's-complement encoding of a seed or a coordinate.
#[derive(Clone, Copy, Debug)]
pub struct WordHasher {
    state: u64,
    len: u64,
}

impl WordHasher {
    pub fn new() -> WordHasher {
        WordHasher { state: GOLDEN, len: 0 }
    }

    #[inline]
    pub fn push(mut self, w: u64) -> WordHasher {
        self.state = mix64(self.state ^ w).wrapping_add(GOLDEN);
        self.len += 1;
        self
    }

    #[inline]
    pub fn finish(self) -> u64 {
        mix64(self.state ^ self.len.wrapping_mul(GOLDEN))
    }
}

impl Default for WordHasher {
    fn default() -> Self {
        WordHasher::new()
    }
}

/// Top 53 bits as a uniform in [0, 1).
#[inline]
pub fn unit_from_bits(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn site_hash(seed: u64, site: &Site, d: usize) -> u64 {
    let mut h = WordHasher::new().push(seed);
    for &c in &site.0[..d] {
        h = h.push(c as i64 as u64);
    }
    h.finish()
}

/// Uniform in [0, 1) attached to `(seed, site)`.
#[inline]
pub fn site_uniform(seed: u64, site: &Site, d: usize) -> f64 {
    unit_from_bits(site_hash(seed, site, d))
}

/// Key for a named sub-stream of a master seed.
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(WordHasher::new().push(master), |h, &w| h.push(w))
        .finish()
}

/// Independent stream for replica `replica` under `key`.
pub fn replica_rng(key: u64, replica: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        let w = mix64(key ^ (i as u64).wrapping_mul(GOLDEN));
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(replica);
    rng
}

#[inline]
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    unit_from_bits(rng.next_u64())
}

/// Stream tags for the commands, so two commands sharing a master seed
/// never share replica streams.
pub mod tags {
    pub const ANNEALED: u64 = 1;
    pub const QUENCHED: u64 = 2;
    pub const RETURN: u64 = 3;
    pub const HIT: u64 = 4;
    pub const VISITS: u64 = 5;
    pub const RANGE: u64 = 6;
    pub const HEALTHY: u64 = 7;
    pub const GENERIC: u64 = 8;
    pub const EVENTS: u64 = 9;
    pub const PERCO: u64 = 10;
    pub const ENVIRONMENT: u64 = 11;
}

/// Uniform draws from `{0, .., k-1}` packed several to a 64-bit word by
/// repeated multiply-high. Eight digits per word keeps the bias below
/// `k * 2^-40`.
#[derive(Clone, Debug)]
pub struct Digits {
    k: u64,
    word: u64,
    left: u32,
}

impl Digits {
    pub const PER_WORD: u32 = 8;

    pub fn new(k: u64) -> Digits {
        assert!((1..=64).contains(&k));
        Digits { k, word: 0, left: 0 }
    }

    #[inline]
    pub fn next<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> usize {
        if self.left == 0 {
            self.word = rng.next_u64();
            self.left = Self::PER_WORD;
        }
        self.left -= 1;
        let p = (self.word as u128) * (self.k as u128);
        self.word = p as u64;
        (p >> 64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    #[test]
    fn site_values_are_pure_functions() {
        let a = Site::new(&[3, -4, 5]);
        assert_eq!(site_uniform(7, &a, 3), site_uniform(7, &a, 3));
        assert_ne!(site_uniform(7, &a, 3), site_uniform(8, &a, 3));
        assert_ne!(site_uniform(7, &a, 3), site_uniform(7, &Site::new(&[3, -4, 6]), 3));
    }

    #[test]
    fn frozen_hash_values() {
        assert_eq!(mix64(0), 0);
        assert_eq!(mix64(1), 0x5692_161D_100B_05E5);
        let h = site_hash(42, &Site::new(&[1, 2, 3]), 3);
        assert_eq!(h, site_hash(42, &Site::new(&[1, 2, 3]), 3));
        let u = site_uniform(42, &Site::ORIGIN, 1);
        assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn replica_streams_differ() {
        let mut a = replica_rng(5, 0);
        let mut b = replica_rng(5, 1);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        assert_ne!(xa, xb);
        let mut c = replica_rng(5, 0);
        assert_eq!(xa[0], c.next_u64());
    }

    #[test]
    fn digits_are_uniform() {
        let mut rng = replica_rng(1, 0);
        let mut dg = Digits::new(6);
        let mut counts = [0u32; 6];
        let n = 600_000;
        for _ in 0..n {
            counts[dg.next(&mut rng)] += 1;
        }
        let e = n as f64 / 6.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 5 degrees of freedom, 99.9% quantile 20.5
        assert!(chi2 < 20.5, "chi2 {chi2}");
    }
}

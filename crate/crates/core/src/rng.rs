//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha::ChaCha8Rng`), whose
//! output for a given 64-bit seed is fixed by the algorithm and does not
//! depend on platform or word size. Independent sub-streams (one per robot,
//! per decision cycle, per purpose) are derived by hashing the parent seed
//! with a tag through SplitMix64.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose tags used when deriving sub-streams.
pub mod purpose {
    pub const INIT_POPULATION: u64 = 1;
    pub const OPTIMIZER: u64 = 2;
    pub const SENSOR: u64 = 3;
    pub const ROBOT: u64 = 4;
}

/// A deterministic random stream identified by its seed.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent stream from this stream's seed.
    ///
    /// Derivation only looks at the seed, never at how many values have been
    /// drawn, so `derive(p, i)` is stable regardless of prior use.
    pub fn derive(&self, purpose: u64, index: u64) -> RngStream {
        let mixed = splitmix64(splitmix64(self.seed ^ splitmix64(purpose)) ^ index);
        RngStream::new(mixed)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(25);
        let mut b = RngStream::new(25);
        let xs: Vec<u64> = (0..32).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..32).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn derive_ignores_consumption() {
        let a = RngStream::new(7);
        let mut b = RngStream::new(7);
        let _: f64 = b.random();
        let mut da = a.derive(purpose::SENSOR, 3);
        let mut db = b.derive(purpose::SENSOR, 3);
        assert_eq!(da.next_u64(), db.next_u64());
    }

    #[test]
    fn derived_streams_differ() {
        let root = RngStream::new(25);
        let mut x = root.derive(purpose::ROBOT, 0);
        let mut y = root.derive(purpose::ROBOT, 1);
        let mut z = root.derive(purpose::SENSOR, 0);
        let (a, b, c) = (x.next_u64(), y.next_u64(), z.next_u64());
        assert!(a != b && b != c && a != c);
    }

    #[test]
    fn chacha8_known_answer() {
        // Pins the generator: changing the algorithm would break reproducibility.
        assert_eq!(RngStream::new(25).next_u64(), 3191308822954602858);
        assert_eq!(RngStream::new(25).derive(2, 7).next_u64(), 2892456429979876756);
    }
}

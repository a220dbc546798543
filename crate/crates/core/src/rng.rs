//! Portable seeded randomness.
//!
//! All shuffles and draws use xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Bounded integers are drawn with the
//! multiply-high reduction `(next_u64() as u128 * bound as u128) >> 64`, and
//! shuffles are the descending Fisher-Yates walk below. Both are fixed here
//! rather than delegated to `rand`, whose sampling algorithms change between
//! releases, so that another implementation can reproduce every split.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub struct PortableRng(Xoshiro256PlusPlus);

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform-ish integer in `0..bound`. `bound` must be non-zero.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be positive");
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    /// Fisher-Yates: for i = n-1 down to 1, swap items[i] with items[below(i+1)].
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

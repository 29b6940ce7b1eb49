//! Portable experiment RNG.
//!
//! xoshiro256** seeded from a `u64` through SplitMix64. Bounded integers
//! use Lemire's multiply-shift with rejection, so a draw from `[0, n)`
//! consumes one or more `next_u64` outputs and is unbiased. The stream
//! depends only on the seed and the order of calls, which makes query
//! traces reproducible across implementations that follow the same recipe.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct ExperimentRng(Xoshiro256StarStar);

impl ExperimentRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        ExperimentRng(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(n);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Forward Fisher-Yates: for `i` in `0..k`, swap `i` with
    /// `i + below(len - i)`. Returns the first `k` elements.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], k: usize) {
        let n = items.len();
        for i in 0..k.min(n) {
            let j = i + self.below((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        self.partial_shuffle(items, n.saturating_sub(1));
    }

    /// `k` distinct items drawn uniformly without replacement, in draw order.
    pub fn sample<T: Clone>(&mut self, items: &[T], k: usize) -> Vec<T> {
        let mut pool = items.to_vec();
        let k = k.min(pool.len());
        self.partial_shuffle(&mut pool, k);
        pool.truncate(k);
        pool
    }
}

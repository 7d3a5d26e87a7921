//! Counter-based randomness: every draw is a pure hash of its key, so a
//! value never depends on which thread produced it or in what order.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of a sequence of words, absorbing one word per round.
pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(GOLDEN, |h, &w| mix(h.wrapping_add(GOLDEN) ^ mix(w.wrapping_add(GOLDEN))))
}

/// Key for the innovation of node `(gen, index)` in a given replicate.
pub fn node_key(seed: u64, replicate: u64, gen: u64, index: u64) -> u64 {
    hash_words(&[seed, replicate, gen, index])
}

/// Uniform on `[0, 1)` from the top 53 bits.
pub fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on the open interval `(−1, 1)`, symmetric about 0. Uses 52
/// bits so that every `x + 0.5` is exact.
pub fn symmetric(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (2.0 / (1u64 << 52) as f64) - 1.0
}

/// Sequential stream over a counter, for small auxiliary draws.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng { key: hash_words(&[seed, stream]), counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix(self.key ^ mix(self.counter.wrapping_mul(GOLDEN)))
    }

    pub fn next_f64(&mut self) -> f64 {
        unit(self.next_u64())
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        let span = hi - lo + 1;
        lo + ((self.next_u64() as u128 * span as u128) >> 64) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_stays_open_and_centered() {
        assert!(symmetric(0) > -1.0 && symmetric(u64::MAX) < 1.0);
        assert_eq!(symmetric(0), -symmetric(u64::MAX));
        let n = 200_000;
        let mean: f64 = (0..n).map(|i| symmetric(node_key(1, i, 3, 4))).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (3.0 * n as f64).sqrt());
    }

    #[test]
    fn keys_separate_coordinates() {
        assert_ne!(node_key(1, 2, 3, 4), node_key(1, 2, 4, 3));
        assert_ne!(node_key(1, 0, 0, 1), node_key(0, 1, 0, 1));
        assert_eq!(node_key(9, 9, 9, 9), node_key(9, 9, 9, 9));
    }

    #[test]
    fn range_is_inclusive() {
        let mut r = CounterRng::new(5, 0);
        let draws: Vec<u64> = (0..2000).map(|_| r.range(3, 5)).collect();
        assert!(draws.iter().all(|d| (3..=5).contains(d)));
        assert!([3, 4, 5].iter().all(|v| draws.contains(v)));
    }
}

//! Seedable, splittable pseudo-random generator with a pinned algorithm.
//!
//! Batch plans and weight initializations must reproduce bit-for-bit across
//! platforms and dependency upgrades, so the generator is implemented here
//! rather than pulled from a crate: xoshiro256** (Blackman & Vigna), seeded
//! through SplitMix64. Independent streams for the same seed are derived by
//! feeding a stream index through the SplitMix64 seeding chain.

/// Identifier recorded in cache headers for the generator below.
pub const RNG_ALGORITHM_ID: u32 = 1;

/// SplitMix64 stepper, used for seeding and stream derivation.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

/// xoshiro256** generator.
#[derive(Debug, Clone)]
pub struct Xoshiro256 {
    s: [u64; 4],
}

impl Xoshiro256 {
    /// Seeds from a single 64-bit value via SplitMix64, as recommended by
    /// the reference implementation.
    pub fn from_seed(seed: u64) -> Self {
        Self::from_seed_stream(seed, 0)
    }

    /// Derives an independent stream for the same seed.
    pub fn from_seed_stream(seed: u64, stream: u64) -> Self {
        let mut mix = SplitMix64::new(seed);
        let base = mix.next_u64() ^ stream.wrapping_mul(0xd605_bbb5_8c8a_bc2d);
        let mut mix = SplitMix64::new(base);
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = mix.next_u64();
        }
        // The all-zero state is a fixed point; SplitMix64 cannot emit four
        // consecutive zeros, but guard anyway.
        if s == [0, 0, 0, 0] {
            s[0] = 1;
        }
        Xoshiro256 { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, bound)` without modulo bias (rejection sampling).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        if bound.is_power_of_two() {
            return self.next_u64() & (bound - 1);
        }
        let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Fisher-Yates shuffle of the first `k` slots against the whole slice.
    ///
    /// After the call, `xs[..k]` is a uniform sample without replacement.
    pub fn shuffle_prefix<T>(&mut self, xs: &mut [T], k: usize) {
        assert!(k <= xs.len());
        let n = xs.len();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            xs.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xoshiro_matches_reference_vector() {
        // Outputs of the published xoshiro256** update rule for state
        // {1, 2, 3, 4}; the first four were verified by hand against the
        // reference C code.
        let mut rng = Xoshiro256 { s: [1, 2, 3, 4] };
        let expected: [u64; 6] = [
            11520,
            0,
            1509978240,
            1215971899390074240,
            1216172134540287360,
            607988272756665600,
        ];
        for &e in &expected {
            assert_eq!(rng.next_u64(), e);
        }
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let mut a = Xoshiro256::from_seed_stream(7, 0);
        let mut b = Xoshiro256::from_seed_stream(7, 0);
        let mut c = Xoshiro256::from_seed_stream(7, 1);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn below_is_in_range_and_hits_all_values() {
        let mut rng = Xoshiro256::from_seed(99);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let v = rng.below(7) as usize;
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn next_f64_is_in_unit_interval() {
        let mut rng = Xoshiro256::from_seed(3);
        for _ in 0..10_000 {
            let v = rng.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn shuffle_prefix_is_a_sample_without_replacement() {
        let mut rng = Xoshiro256::from_seed(5);
        let mut xs: Vec<u64> = (0..100).collect();
        rng.shuffle_prefix(&mut xs, 40);
        let mut taken = xs[..40].to_vec();
        taken.sort_unstable();
        taken.dedup();
        assert_eq!(taken.len(), 40);
        let mut all = xs.clone();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }
}

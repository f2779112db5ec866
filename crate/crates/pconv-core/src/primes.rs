//! Exact integer arithmetic over a truncated prime basis.
//!
//! Everything here is deterministic trial division and sieving; no
//! probabilistic primality anywhere. This module is the ground-truth oracle
//! the rest of the crate builds on.

use alloc::vec;
use alloc::vec::Vec;

/// The first `N` primes in ascending order; the coordinate system of the
/// prime grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeBasis {
    primes: Vec<u64>,
}

impl PrimeBasis {
    /// Basis of the first `n` primes (`n >= 1`).
    pub fn first_n(n: usize) -> Self {
        assert!(n >= 1, "a prime basis needs at least one prime");
        // p_n < n (ln n + ln ln n) for n >= 6; below that 13 covers it.
        let mut bound = if n < 6 {
            13
        } else {
            let nf = n as f64;
            let ln = libm::log(nf);
            (nf * (ln + libm::log(ln))) as u64 + 2
        };
        loop {
            let primes = sieve_primes(bound);
            if primes.len() >= n {
                return PrimeBasis {
                    primes: primes[..n].to_vec(),
                };
            }
            bound *= 2;
        }
    }

    /// Basis size `N`.
    pub fn size(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// The `N`-th prime, i.e. the largest member.
    pub fn largest(&self) -> u64 {
        *self.primes.last().unwrap()
    }

    /// Index of `p` in the basis, if present.
    pub fn index_of(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok()
    }
}

/// All primes strictly below `limit`, ascending. `limit < 2` gives an empty
/// list.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n];
    let mut primes = Vec::new();
    for p in 2..n {
        if !composite[p] {
            primes.push(p as u64);
            let mut q = p * p;
            while q < n {
                composite[q] = true;
                q += p;
            }
        }
    }
    primes
}

/// Truncated prime signature of a number: exponents over the basis plus the
/// cofactor left after dividing all basis primes out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridVector {
    /// Exponent of `basis.primes()[i]`, for each `i`.
    pub exponents: Vec<u32>,
    /// Remaining cofactor; `1` exactly when the number is basis-smooth.
    pub residual: u64,
}

/// Factorizes `n >= 1` over the basis by trial division in basis order.
pub fn signature(n: u64, basis: &PrimeBasis) -> GridVector {
    assert!(n >= 1, "signature is defined for n >= 1");
    let mut exponents = vec![0u32; basis.size()];
    let mut v = n;
    for (i, &p) in basis.primes().iter().enumerate() {
        if v == 1 {
            break;
        }
        if p > v / p {
            // p*p > v, so v is prime: either a basis member or the residual.
            if let Some(j) = basis.index_of(v) {
                exponents[j] += 1;
                v = 1;
            }
            break;
        }
        while v % p == 0 {
            v /= p;
            exponents[i] += 1;
        }
    }
    GridVector {
        exponents,
        residual: v,
    }
}

/// Residual of `n >= 1` after dividing out every basis prime.
pub fn residual(n: u64, basis: &PrimeBasis) -> u64 {
    assert!(n >= 1);
    let mut v = n;
    for &p in basis.primes() {
        if v == 1 {
            return 1;
        }
        if p > v / p {
            return if basis.index_of(v).is_some() { 1 } else { v };
        }
        while v % p == 0 {
            v /= p;
        }
    }
    v
}

/// Whether `n >= 1` factors completely over the basis.
pub fn is_smooth(n: u64, basis: &PrimeBasis) -> bool {
    residual(n, basis) == 1
}

/// The congruence class of `n` modulo `m >= 2`.
pub fn congruence_label(n: u64, m: u64) -> u64 {
    assert!(m >= 2, "congruence classes need a modulus >= 2");
    n % m
}

/// Deterministic trial-division primality for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d <= n / d {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization of `n >= 1` as ascending `(prime, exponent)` pairs.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    let mut v = n;
    let mut out = Vec::new();
    let mut push = |p: u64, v: &mut u64| {
        let mut e = 0u32;
        while *v % p == 0 {
            *v /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut v);
    let mut d = 3u64;
    while d <= v / d {
        push(d, &mut v);
        d += 2;
    }
    if v > 1 {
        out.push((v, 1));
    }
    out
}

/// Smoothness flags for every `n` in `[0, limit)`, computed by a residual
/// sieve (divide each basis prime out of all of its multiples).
///
/// `0` is flagged smooth by convention: it belongs to the dataset with the
/// all-zero grid vector.
pub fn smooth_flags(limit: u64, basis: &PrimeBasis) -> Vec<bool> {
    assert!(limit >= 1);
    let n = limit as usize;
    let mut vals: Vec<u64> = (0..limit).collect();
    for &p in basis.primes() {
        let p = p as usize;
        if p >= n {
            break;
        }
        let mut q = p;
        while q < n {
            let mut v = vals[q];
            while v % p as u64 == 0 {
                v /= p as u64;
            }
            vals[q] = v;
            q += p;
        }
    }
    let mut flags: Vec<bool> = vals.iter().map(|&v| v == 1).collect();
    flags[0] = true;
    flags
}

/// Number of basis-smooth `n` in `[0, limit)`, with `0` counted smooth.
pub fn smooth_count(limit: u64, basis: &PrimeBasis) -> u64 {
    smooth_flags(limit, basis)
        .iter()
        .filter(|&&f| f)
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent primality check for cross-validation.
    fn is_prime_trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    /// Independent segmented sieve: count primes below `limit` and return the
    /// largest one seen, touching memory one 64k window at a time.
    fn segmented_count_and_max(limit: u64) -> (usize, u64) {
        let seg = 1usize << 16;
        let root = (libm::sqrt(limit as f64) as u64) + 1;
        let small = sieve_primes(root + 1);
        let mut count = 0usize;
        let mut largest = 0u64;
        let mut lo = 2u64;
        let mut mark = vec![false; seg];
        while lo < limit {
            let hi = (lo + seg as u64).min(limit);
            let len = (hi - lo) as usize;
            for m in mark.iter_mut().take(len) {
                *m = false;
            }
            for &p in &small {
                if p * p >= hi {
                    break;
                }
                let mut q = (lo + p - 1) / p * p;
                if q < p * p {
                    q = p * p;
                }
                while q < hi {
                    mark[(q - lo) as usize] = true;
                    q += p;
                }
            }
            for i in 0..len {
                if !mark[i] {
                    count += 1;
                    largest = lo + i as u64;
                }
            }
            lo = hi;
        }
        (count, largest)
    }

    #[test]
    fn sieve_small_ranges() {
        assert_eq!(sieve_primes(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(sieve_primes(2), Vec::<u64>::new());
        assert_eq!(sieve_primes(3), vec![2]);
    }

    #[test]
    fn sieve_agrees_with_trial_division_below_ten_thousand() {
        let primes = sieve_primes(10_000);
        let expected: Vec<u64> = (0..10_000).filter(|&n| is_prime_trial(n)).collect();
        assert_eq!(primes, expected);
    }

    #[test]
    fn sieve_count_below_one_million() {
        assert_eq!(sieve_primes(1_000_000).len(), 78_498);
    }

    #[test]
    fn first_n_small() {
        assert_eq!(PrimeBasis::first_n(4).primes(), &[2, 3, 5, 7]);
        assert_eq!(PrimeBasis::first_n(1).primes(), &[2]);
    }

    #[test]
    fn five_thousandth_prime_cross_checked_by_segmented_sieve() {
        let basis = PrimeBasis::first_n(5000);
        assert_eq!(basis.size(), 5000);
        let largest = basis.largest();
        // Independent route: a segmented sieve over [2, largest+1] must see
        // exactly 5000 primes with the same maximum.
        let (count, max) = segmented_count_and_max(largest + 1);
        assert_eq!(count, 5000);
        assert_eq!(max, largest);
        assert_eq!(largest, 48_611);
    }

    #[test]
    fn signature_examples() {
        let basis = PrimeBasis::first_n(5000);
        let sig = signature(20, &basis);
        assert_eq!(sig.residual, 1);
        assert_eq!(sig.exponents[0], 2); // 2^2
        assert_eq!(sig.exponents[1], 0);
        assert_eq!(sig.exponents[2], 1); // 5^1
        assert!(sig.exponents[3..].iter().all(|&e| e == 0));

        let sig = signature(126, &basis); // 2 * 3^2 * 7
        assert_eq!(sig.residual, 1);
        assert_eq!(sig.exponents[0], 1);
        assert_eq!(sig.exponents[1], 2);
        assert_eq!(sig.exponents[2], 0);
        assert_eq!(sig.exponents[3], 1);
        assert!(sig.exponents[4..].iter().all(|&e| e == 0));

        let sig = signature(1, &basis);
        assert_eq!(sig.residual, 1);
        assert!(sig.exponents.iter().all(|&e| e == 0));
    }

    #[test]
    fn signature_reconstructs_over_random_inputs() {
        let mut rng = crate::rng::Xoshiro256::from_seed(0xF00D);
        let basis = PrimeBasis::first_n(200);
        for _ in 0..10_000 {
            let n = 1 + rng.below(1_000_000);
            let sig = signature(n, &basis);
            let mut back = sig.residual;
            for (i, &e) in sig.exponents.iter().enumerate() {
                for _ in 0..e {
                    back = back.checked_mul(basis.primes()[i]).unwrap();
                }
            }
            assert_eq!(back, n, "reconstruction failed for {n}");
            // Residual must have no factor inside the basis.
            if sig.residual > 1 {
                for &p in basis.primes() {
                    assert_ne!(sig.residual % p, 0);
                }
            }
        }
    }

    #[test]
    fn smoothness_examples() {
        assert!(is_smooth(20, &PrimeBasis::first_n(3)));
        assert!(!is_smooth(22, &PrimeBasis::first_n(4)));
        assert!(is_smooth(1, &PrimeBasis::first_n(1)));
    }

    #[test]
    fn smoothness_is_monotone_in_basis_size() {
        let mut rng = crate::rng::Xoshiro256::from_seed(0xBEEF);
        let small = PrimeBasis::first_n(20);
        let large = PrimeBasis::first_n(60);
        for _ in 0..2_000 {
            let n = 1 + rng.below(500_000);
            if is_smooth(n, &small) {
                assert!(is_smooth(n, &large));
            }
        }
    }

    #[test]
    fn congruence_label_examples() {
        assert_eq!(congruence_label(15, 7), 1);
        assert_eq!(congruence_label(0, 29), 0);
        assert_eq!(congruence_label(999_999, 10), 9);
    }

    #[test]
    fn factorize_round_trips_and_agrees_with_primality() {
        let mut rng = crate::rng::Xoshiro256::from_seed(21);
        for _ in 0..2000 {
            let n = 1 + rng.below(1_000_000);
            let factors = factorize(n);
            let mut back = 1u64;
            for &(p, e) in &factors {
                assert!(is_prime_trial(p));
                for _ in 0..e {
                    back *= p;
                }
            }
            assert_eq!(back, n);
            assert_eq!(is_prime(n), is_prime_trial(n));
        }
        assert_eq!(factorize(1), Vec::new());
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
    }

    #[test]
    fn smooth_count_tiny_basis() {
        // Powers of two below 10, plus 0 and 1: {0, 1, 2, 4, 8}.
        assert_eq!(smooth_count(10, &PrimeBasis::first_n(1)), 5);
    }

    #[test]
    fn smooth_count_matches_per_number_scan() {
        for &(limit, n) in &[(10_000u64, 5usize), (50_000, 25), (100_000, 100)] {
            let basis = PrimeBasis::first_n(n);
            let scan = 1 + (1..limit).filter(|&v| is_smooth(v, &basis)).count() as u64;
            assert_eq!(smooth_count(limit, &basis), scan, "limit={limit} n={n}");
        }
    }

    #[test]
    fn smooth_count_full_scale() {
        // Exact count of 48611-smooth numbers in [0, 10^6), 0 included.
        // Verified by three independent routes: the residual sieve here, a
        // per-number trial-division scan, and the complement sum
        // sum_{p > 48611} floor(999999/p).
        let basis = PrimeBasis::first_n(5000);
        assert_eq!(smooth_count(1_000_000, &basis), 784_348);
    }

    #[test]
    fn smooth_count_with_full_prime_range_loses_nothing() {
        // With every prime below 10^6 in the basis, all numbers are smooth.
        let basis = PrimeBasis::first_n(78_498);
        assert_eq!(basis.largest(), 999_983);
        assert_eq!(smooth_count(1_000_000, &basis), 1_000_000);
    }
}

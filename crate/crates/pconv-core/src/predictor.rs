//! Arithmetic model of the classifier's behavior.
//!
//! From `(m, B)` alone this module decides whether the congruence task is
//! solvable, which classes end up confused when it is not, and what
//! validation accuracy to expect. The solvability rule works per prime-power
//! component of `m`: the classes modulo `p^a` are identified exactly when
//! `a <= j(p, B)`, where `j` is the closed-form index of
//! [`max_power_index`]. [`verify_theorem`] cross-checks that closed form
//! against the underlying recursive characterization by brute force.

use alloc::vec;
use alloc::vec::Vec;

use crate::partition::Partition;
use crate::primes::{factorize, is_prime, sieve_primes};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictorError {
    NotPrime(u64),
    BadModulus(u64),
    BadContext(u64),
}

impl core::fmt::Display for PredictorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PredictorError::NotPrime(p) => write!(f, "{p} is not prime"),
            PredictorError::BadModulus(m) => write!(f, "modulus must be >= 2, got {m}"),
            PredictorError::BadContext(b) => write!(f, "context length must be >= 2, got {b}"),
        }
    }
}

impl core::error::Error for PredictorError {}

/// The pivot exponent: the unique `i0 >= 0` with `p^i0 < B+2 <= p^(i0+1)`.
fn pivot_exponent(p: u64, context_len: u64) -> (u32, u64) {
    let bound = context_len + 2;
    let mut i0 = 0u32;
    let mut power = 1u64; // p^i0
    while power.saturating_mul(p) < bound {
        power *= p;
        i0 += 1;
    }
    (i0, power)
}

/// Largest exponent `j` such that the classes modulo `p^j` are identified
/// with context length `B`: `j = i0 + 1` when `p^(i0+1) - p^i0 - 1 <= B`,
/// else `j = i0`.
pub fn max_power_index(p: u64, context_len: u64) -> Result<u32, PredictorError> {
    if context_len < 2 {
        return Err(PredictorError::BadContext(context_len));
    }
    if !is_prime(p) {
        return Err(PredictorError::NotPrime(p));
    }
    let (i0, power) = pivot_exponent(p, context_len);
    let next = match power.checked_mul(p) {
        Some(v) => v,
        // p^(i0+1) overflows u64, so its gap certainly exceeds B.
        None => return Ok(i0),
    };
    if next - power - 1 <= context_len {
        Ok(i0 + 1)
    } else {
        Ok(i0)
    }
}

/// Whether the task modulo `m` is solvable with context length `B`: every
/// prime-power component `p^a` of `m` must satisfy `a <= max_power_index`.
pub fn solvable(m: u64, context_len: u64) -> bool {
    assert!(m >= 2 && context_len >= 2);
    factorize(m)
        .into_iter()
        .all(|(p, a)| max_power_index(p, context_len).unwrap() >= a)
}

/// One prime-power component of the modulus and its solvable sub-exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentReport {
    pub prime: u64,
    pub exponent: u32,
    /// Largest `j <= exponent` with the classes modulo `prime^j` identified.
    pub solvable_exponent: u32,
}

impl ComponentReport {
    pub fn solved(&self) -> bool {
        self.solvable_exponent == self.exponent
    }
}

/// Exact expected accuracy as a fraction (kept unreduced: group count over
/// class count).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub numer: u64,
    pub denom: u64,
}

impl Ratio {
    pub fn to_f64(self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl core::fmt::Display for Ratio {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

/// The theoretical verdict for a `(m, B)` query.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub modulus: u64,
    pub context_len: u64,
    pub solvable: bool,
    pub components: Vec<ComponentReport>,
    /// Predicted confusability partition of the classes.
    pub partition: Partition,
    pub expected_accuracy: Ratio,
}

/// Predicted partition of `{0, .., m-1}` into mutually confused groups.
///
/// Within each unsolved component `p^a`, the middle residues
/// `1 .. p^a - B - 1` are confusable exactly when congruent modulo `p^j`;
/// residue 0 and the last `B` residues are pinned. Components combine by the
/// Chinese remainder theorem, and the globally pinned classes (0 and the
/// last `B`) are split out afterwards.
pub fn confusability_partition(m: u64, context_len: u64) -> Partition {
    assert!(m >= 2 && context_len >= 2);
    if m <= context_len + 2 {
        return Partition::singletons(m as usize);
    }
    let components: Vec<(u64, u64)> = factorize(m)
        .into_iter()
        .map(|(p, a)| {
            let j = max_power_index(p, context_len).unwrap().min(a);
            (p.pow(a), p.pow(j))
        })
        .collect();

    // Key per class: for each component, either the exact residue (pinned or
    // solved) or the residue modulo the solvable sub-power (confusable).
    let mut keys: Vec<Vec<u64>> = Vec::with_capacity(m as usize);
    for x in 0..m {
        let mut key = Vec::with_capacity(2 * components.len());
        for &(q, pj) in &components {
            let r = x % q;
            let solved = pj == q;
            let middle = !solved && r >= 1 && r + context_len + 1 <= q;
            if middle {
                key.push(1);
                key.push(r % pj);
            } else {
                key.push(0);
                key.push(r);
            }
        }
        keys.push(key);
    }
    let mut ids: Vec<usize> = vec![0; m as usize];
    let mut seen: Vec<(&[u64], usize)> = Vec::new();
    for (x, key) in keys.iter().enumerate() {
        let id = match seen.iter().find(|(k, _)| *k == key.as_slice()) {
            Some(&(_, id)) => id,
            None => {
                let id = seen.len();
                seen.push((key.as_slice(), id));
                id
            }
        };
        ids[x] = id;
    }
    // Pin class 0 and the last B classes globally (a no-op for the CRT rule
    // above, kept as an explicit guarantee).
    let mut next = seen.len();
    ids[0] = next;
    next += 1;
    for x in (m - context_len)..m {
        ids[x as usize] = next;
        next += 1;
    }
    Partition::from_group_ids(&ids)
}

/// Expected accuracy under uniform confusion within each group: one correct
/// answer per group, uniformly weighted classes.
pub fn expected_accuracy(m: u64, context_len: u64) -> Ratio {
    let partition = confusability_partition(m, context_len);
    Ratio {
        numer: partition.group_count() as u64,
        denom: m,
    }
}

/// Full theoretical verdict for `(m, B)`.
pub fn predict(m: u64, context_len: u64) -> Result<PredictionReport, PredictorError> {
    if m < 2 {
        return Err(PredictorError::BadModulus(m));
    }
    if context_len < 2 {
        return Err(PredictorError::BadContext(context_len));
    }
    let components: Vec<ComponentReport> = factorize(m)
        .into_iter()
        .map(|(p, a)| ComponentReport {
            prime: p,
            exponent: a,
            solvable_exponent: max_power_index(p, context_len).unwrap().min(a),
        })
        .collect();
    let solvable = components.iter().all(|c| c.solved());
    let partition = confusability_partition(m, context_len);
    let expected_accuracy = Ratio {
        numer: partition.group_count() as u64,
        denom: m,
    };
    Ok(PredictionReport {
        modulus: m,
        context_len,
        solvable,
        components,
        partition,
        expected_accuracy,
    })
}

/// A disagreement between the closed-form rule and the recursive
/// characterization it was derived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremCounterexample {
    pub prime: u64,
    pub context_len: u64,
    pub closed_form: u32,
    pub recursive: u32,
    /// Set when the recursion solves some `p^i` with `i >= i0 + 2`, which
    /// the closed form rules out.
    pub high_power_solvable: Option<u32>,
}

/// Brute-force comparison of [`max_power_index`] against the recursive rule
/// (`p^a` solvable iff `p^a <= B+2` or `p^a - B - 1 <= p^j` with `j` the
/// largest previously solvable exponent), for all primes `p <= p_max` and
/// context lengths `2..=b_max`. Returns every disagreement; an empty vector
/// means the two formulations coincide on the whole range.
pub fn verify_theorem(p_max: u64, b_max: u64) -> Vec<TheoremCounterexample> {
    let mut counterexamples = Vec::new();
    for p in sieve_primes(p_max + 1) {
        for b in 2..=b_max {
            let closed = max_power_index(p, b).unwrap();
            let (i0, _) = pivot_exponent(p, b);

            let mut j_rec = 0u32;
            let mut high_power_solvable = None;
            let mut a = 1u32;
            loop {
                let q = match p.checked_pow(a) {
                    Some(q) => q,
                    None => break,
                };
                let prev_power = p.pow(a - 1);
                let solvable_a = q <= b + 2 || q - b - 1 <= p.pow(j_rec);
                if solvable_a {
                    if a >= i0 + 2 && high_power_solvable.is_none() {
                        high_power_solvable = Some(a);
                    }
                    j_rec = a;
                }
                // Once p^a - p^(a-1) > B + 1 the condition can never hold
                // again (the gap only grows), so the recursion has converged.
                if q > b + 2 && prev_power.saturating_mul(p - 1) > b + 1 {
                    break;
                }
                a += 1;
            }

            if closed != j_rec || high_power_solvable.is_some() {
                counterexamples.push(TheoremCounterexample {
                    prime: p,
                    context_len: b,
                    closed_form: closed,
                    recursive: j_rec,
                    high_power_solvable,
                });
            }
        }
    }
    counterexamples
}

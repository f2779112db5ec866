//! Smooth-number input sets, context matrices, and reproducible batch plans.
//!
//! A [`Dataset`] holds every basis-smooth anchor in `[0, limit)` whose whole
//! context window stays in range. Consecutive numbers inside a window need
//! not be smooth themselves; their rows are the truncated signature with the
//! residual dropped. Batch sampling is a partial Fisher-Yates over the
//! anchor list driven by the pinned [`crate::rng`] generator, so a seed
//! fully determines the plan.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::primes::{self, PrimeBasis};
use crate::rng::{Xoshiro256, RNG_ALGORITHM_ID};

/// Stream index used to derive the sampling generator from a seed.
const SAMPLE_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetError {
    /// The anchor pool cannot satisfy a request.
    Capacity { available: usize, requested: usize },
    /// An anchor was passed that is not part of the dataset.
    UnknownAnchor(u64),
    /// Structurally impossible dataset parameters.
    BadConfig(String),
}

impl core::fmt::Display for DatasetError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DatasetError::Capacity {
                available,
                requested,
            } => write!(
                f,
                "anchor pool holds {available} anchors but {requested} are required"
            ),
            DatasetError::UnknownAnchor(a) => write!(f, "anchor {a} is not in the dataset"),
            DatasetError::BadConfig(msg) => write!(f, "invalid dataset parameters: {msg}"),
        }
    }
}

impl core::error::Error for DatasetError {}

/// The smooth anchor set for one `(limit, basis, B)` configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    limit: u64,
    basis: PrimeBasis,
    anchors: Vec<u64>,
    context_len: u32,
}

impl Dataset {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    /// All valid anchors, strictly increasing.
    pub fn anchors(&self) -> &[u64] {
        &self.anchors
    }

    /// Context window length `B`.
    pub fn context_len(&self) -> u32 {
        self.context_len
    }

    pub fn contains_anchor(&self, anchor: u64) -> bool {
        self.anchors.binary_search(&anchor).is_ok()
    }

    /// The `B x N` exponent matrix for the window starting at `anchor`.
    pub fn context_matrix(&self, anchor: u64) -> Result<ContextMatrix, DatasetError> {
        if !self.contains_anchor(anchor) {
            return Err(DatasetError::UnknownAnchor(anchor));
        }
        let b = self.context_len as usize;
        let n = self.basis.size();
        let mut exponents = vec![0u32; b * n];
        for i in 0..b {
            let row = &mut exponents[i * n..(i + 1) * n];
            for (idx, e) in sparse_row(anchor + i as u64, &self.basis) {
                row[idx as usize] = e;
            }
        }
        Ok(ContextMatrix {
            anchor,
            rows: b,
            cols: n,
            exponents,
        })
    }

    /// Anchor counts per congruence class modulo `m`.
    pub fn class_histogram(&self, m: u64) -> Vec<u64> {
        let mut counts = vec![0u64; m as usize];
        for &a in &self.anchors {
            counts[(a % m) as usize] += 1;
        }
        counts
    }
}

/// Truncated signature of `n` as `(basis index, exponent)` pairs, residual
/// dropped. `0` maps to the empty (all-zero) row by convention.
pub fn sparse_row(n: u64, basis: &PrimeBasis) -> Vec<(u32, u32)> {
    if n == 0 {
        return Vec::new();
    }
    let sig = primes::signature(n, basis);
    sig.exponents
        .iter()
        .enumerate()
        .filter(|&(_, &e)| e > 0)
        .map(|(i, &e)| (i as u32, e))
        .collect()
}

/// Builds the dataset: every basis-smooth `n` in `[0, limit)` with
/// `n + B - 1 < limit`.
pub fn build_dataset(limit: u64, basis: PrimeBasis, context_len: u32) -> Result<Dataset, DatasetError> {
    let flags = primes::smooth_flags(limit, &basis);
    build_from_flags(limit, basis, context_len, &flags)
}

/// Same as [`build_dataset`] when the smoothness flags are already at hand.
pub fn build_from_flags(
    limit: u64,
    basis: PrimeBasis,
    context_len: u32,
    flags: &[bool],
) -> Result<Dataset, DatasetError> {
    if context_len == 0 {
        return Err(DatasetError::BadConfig("context length must be >= 1".into()));
    }
    if limit < context_len as u64 + 2 {
        return Err(DatasetError::BadConfig(format!(
            "limit {limit} leaves no room for context windows of length {context_len}"
        )));
    }
    if flags.len() != limit as usize {
        return Err(DatasetError::BadConfig(format!(
            "smoothness flags cover {} numbers, limit is {limit}",
            flags.len()
        )));
    }
    // Anchors near the top are excluded so every window stays in range.
    let top = limit - context_len as u64 + 1;
    let anchors: Vec<u64> = (0..top).filter(|&n| flags[n as usize]).collect();
    if anchors.is_empty() {
        return Err(DatasetError::Capacity {
            available: 0,
            requested: 1,
        });
    }
    Ok(Dataset {
        limit,
        basis,
        anchors,
        context_len,
    })
}

/// One context window: `rows x cols` exponents, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextMatrix {
    pub anchor: u64,
    rows: usize,
    cols: usize,
    exponents: Vec<u32>,
}

impl ContextMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.exponents[i * self.cols..(i + 1) * self.cols]
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }
}

/// Disjoint training batches plus a validation batch, all anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub batches: Vec<Vec<u64>>,
    pub validation: Vec<u64>,
    pub seed: u64,
}

impl BatchPlan {
    /// Canonical little-endian encoding, used to pin determinism in tests.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.batches.len() as u64).to_le_bytes());
        for batch in &self.batches {
            out.extend_from_slice(&(batch.len() as u64).to_le_bytes());
            for &a in batch {
                out.extend_from_slice(&a.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.validation.len() as u64).to_le_bytes());
        for &a in &self.validation {
            out.extend_from_slice(&a.to_le_bytes());
        }
        out
    }
}

/// Samples `r` disjoint batches of `s` anchors plus a disjoint validation
/// batch, uniformly without replacement. The same inputs and seed always
/// produce the same plan.
pub fn sample_batches(
    dataset: &Dataset,
    batches: usize,
    batch_size: usize,
    validation_size: usize,
    seed: u64,
) -> Result<BatchPlan, DatasetError> {
    if batches == 0 || batch_size == 0 {
        return Err(DatasetError::BadConfig(
            "batch count and batch size must be >= 1".into(),
        ));
    }
    let need = batches
        .checked_mul(batch_size)
        .and_then(|t| t.checked_add(validation_size))
        .ok_or_else(|| DatasetError::BadConfig("batch plan size overflows".into()))?;
    if need > dataset.anchors.len() {
        return Err(DatasetError::Capacity {
            available: dataset.anchors.len(),
            requested: need,
        });
    }
    let mut pool = dataset.anchors.clone();
    let mut rng = Xoshiro256::from_seed_stream(seed, SAMPLE_STREAM);
    rng.shuffle_prefix(&mut pool, need);
    let mut it = pool.into_iter();
    let batch_list: Vec<Vec<u64>> = (0..batches)
        .map(|_| it.by_ref().take(batch_size).collect())
        .collect();
    let validation: Vec<u64> = it.by_ref().take(validation_size).collect();
    Ok(BatchPlan {
        batches: batch_list,
        validation,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Cache codec
//
// Little-endian binary. Header: magic "PGRD", format version u32, limit u64,
// N u32, B u32, anchor count u64, PRNG algorithm id u32. Body: anchor list
// as unsigned-varint gaps (first gap from 0). Exponent matrices are never
// cached; they are recomputed on demand.
// ---------------------------------------------------------------------------

pub const CACHE_MAGIC: [u8; 4] = *b"PGRD";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheError {
    BadMagic([u8; 4]),
    UnsupportedVersion(u32),
    UnsupportedRng(u32),
    Truncated { offset: usize },
    Malformed { offset: usize, reason: &'static str },
}

impl core::fmt::Display for CacheError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CacheError::BadMagic(m) => write!(f, "not a dataset cache (magic {m:02x?})"),
            CacheError::UnsupportedVersion(v) => write!(f, "unsupported cache format version {v}"),
            CacheError::UnsupportedRng(id) => write!(f, "unsupported PRNG algorithm id {id}"),
            CacheError::Truncated { offset } => {
                write!(f, "cache file truncated at byte offset {offset}")
            }
            CacheError::Malformed { offset, reason } => {
                write!(f, "malformed cache at byte offset {offset}: {reason}")
            }
        }
    }
}

impl core::error::Error for CacheError {}

fn push_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        if self.offset + n > self.bytes.len() {
            return Err(CacheError::Truncated {
                offset: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn varint(&mut self) -> Result<u64, CacheError> {
        let start = self.offset;
        let mut v: u64 = 0;
        let mut shift = 0u32;
        loop {
            let byte = *self
                .bytes
                .get(self.offset)
                .ok_or(CacheError::Truncated {
                    offset: self.bytes.len(),
                })?;
            self.offset += 1;
            if shift >= 64 || (shift == 63 && byte > 1) {
                return Err(CacheError::Malformed {
                    offset: start,
                    reason: "varint overflows 64 bits",
                });
            }
            v |= ((byte & 0x7f) as u64) << shift;
            if byte & 0x80 == 0 {
                return Ok(v);
            }
            shift += 7;
        }
    }
}

/// Serializes a dataset to the cache wire format.
pub fn encode_cache(dataset: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&dataset.limit.to_le_bytes());
    out.extend_from_slice(&(dataset.basis.size() as u32).to_le_bytes());
    out.extend_from_slice(&dataset.context_len.to_le_bytes());
    out.extend_from_slice(&(dataset.anchors.len() as u64).to_le_bytes());
    out.extend_from_slice(&RNG_ALGORITHM_ID.to_le_bytes());
    let mut prev = 0u64;
    for &a in &dataset.anchors {
        push_varint(&mut out, a - prev);
        prev = a;
    }
    out
}

/// Parses a cache produced by [`encode_cache`]. The prime basis is rebuilt
/// from the recorded size.
pub fn decode_cache(bytes: &[u8]) -> Result<Dataset, CacheError> {
    let mut r = Reader { bytes, offset: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != CACHE_MAGIC {
        return Err(CacheError::BadMagic(magic));
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(CacheError::UnsupportedVersion(version));
    }
    let limit = r.u64()?;
    let basis_size = r.u32()?;
    let context_len = r.u32()?;
    let count = r.u64()?;
    let rng_id = r.u32()?;
    if rng_id != RNG_ALGORITHM_ID {
        return Err(CacheError::UnsupportedRng(rng_id));
    }
    if basis_size == 0 || context_len == 0 {
        return Err(CacheError::Malformed {
            offset: 8,
            reason: "basis size and context length must be >= 1",
        });
    }
    let mut anchors = Vec::with_capacity(count as usize);
    let mut prev = 0u64;
    let mut first = true;
    for _ in 0..count {
        let at = r.offset;
        let gap = r.varint()?;
        if !first && gap == 0 {
            return Err(CacheError::Malformed {
                offset: at,
                reason: "anchors must be strictly increasing",
            });
        }
        prev = prev.checked_add(gap).ok_or(CacheError::Malformed {
            offset: at,
            reason: "anchor value overflows",
        })?;
        if prev >= limit {
            return Err(CacheError::Malformed {
                offset: at,
                reason: "anchor outside dataset range",
            });
        }
        anchors.push(prev);
        first = false;
    }
    if r.offset != bytes.len() {
        return Err(CacheError::Malformed {
            offset: r.offset,
            reason: "trailing bytes after anchor list",
        });
    }
    Ok(Dataset {
        limit,
        basis: PrimeBasis::first_n(basis_size as usize),
        anchors,
        context_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::is_smooth;

    fn toy_dataset() -> Dataset {
        build_dataset(20, PrimeBasis::first_n(2), 2).unwrap()
    }

    #[test]
    fn build_matches_brute_force_scan() {
        // 3-smooth numbers below 20 with the window in range.
        let ds = toy_dataset();
        assert_eq!(ds.anchors(), &[0, 1, 2, 3, 4, 6, 8, 9, 12, 16, 18]);
    }

    #[test]
    fn build_with_wide_basis_keeps_everything() {
        let ds = build_dataset(10, PrimeBasis::first_n(25), 1).unwrap();
        assert_eq!(ds.anchors(), &(0..10).collect::<Vec<u64>>()[..]);
    }

    #[test]
    fn anchors_leave_room_for_the_window() {
        let basis = PrimeBasis::first_n(10);
        for b in 1..6 {
            let ds = build_dataset(64, basis.clone(), b).unwrap();
            for &a in ds.anchors() {
                assert!(a + b as u64 - 1 < 64);
                assert!(a == 0 || is_smooth(a, ds.basis()));
            }
        }
    }

    #[test]
    fn context_matrix_examples() {
        let ds = build_dataset(1000, PrimeBasis::first_n(20), 2).unwrap();
        let cm = ds.context_matrix(20).unwrap();
        // rows: sig(20) = 2^2 * 5, sig(21) = 3 * 7
        assert_eq!(cm.row(0)[0], 2);
        assert_eq!(cm.row(0)[2], 1);
        assert_eq!(cm.row(1)[1], 1);
        assert_eq!(cm.row(1)[3], 1);

        // Non-smooth window members are truncated: 126 = 2 * 3^2 * 7 over
        // basis {2, 3, 5} keeps (1, 2, 0) and drops the 7.
        let ds3 = build_dataset(1000, PrimeBasis::first_n(3), 2).unwrap();
        let cm = ds3.context_matrix(125).unwrap();
        assert_eq!(cm.row(0), &[0, 0, 3]);
        assert_eq!(cm.row(1), &[1, 2, 0]);
    }

    #[test]
    fn context_rows_for_zero_and_one_are_blank() {
        let ds = build_dataset(100, PrimeBasis::first_n(5), 3).unwrap();
        let cm = ds.context_matrix(0).unwrap();
        assert!(cm.row(0).iter().all(|&e| e == 0));
        assert!(cm.row(1).iter().all(|&e| e == 0));
        assert_eq!(cm.row(2)[0], 1); // 2^1
    }

    #[test]
    fn context_matrix_rejects_unknown_anchor() {
        let ds = toy_dataset();
        assert_eq!(
            ds.context_matrix(5),
            Err(DatasetError::UnknownAnchor(5))
        );
    }

    #[test]
    fn context_rows_reconstruct_window_members() {
        let basis = PrimeBasis::first_n(60);
        let ds = build_dataset(50_000, basis, 4).unwrap();
        let mut rng = crate::rng::Xoshiro256::from_seed(11);
        for _ in 0..1000 {
            let a = ds.anchors()[rng.below(ds.anchors().len() as u64) as usize];
            let cm = ds.context_matrix(a).unwrap();
            for i in 0..cm.rows() {
                let n = a + i as u64;
                if n == 0 {
                    assert!(cm.row(i).iter().all(|&e| e == 0));
                    continue;
                }
                // Recompute the residual independently and rebuild n.
                let mut back = crate::primes::residual(n, ds.basis());
                for (j, &e) in cm.row(i).iter().enumerate() {
                    for _ in 0..e {
                        back *= ds.basis().primes()[j];
                    }
                }
                assert_eq!(back, n);
            }
        }
    }

    #[test]
    fn sample_batches_shapes_and_disjointness() {
        let ds = build_dataset(20_000, PrimeBasis::first_n(40), 4).unwrap();
        let plan = sample_batches(&ds, 10, 32, 64, 7).unwrap();
        assert_eq!(plan.batches.len(), 10);
        assert!(plan.batches.iter().all(|b| b.len() == 32));
        assert_eq!(plan.validation.len(), 64);
        let mut all: Vec<u64> = plan.batches.iter().flatten().copied().collect();
        all.extend_from_slice(&plan.validation);
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), total, "plan contains duplicate anchors");
        for &a in &all {
            assert!(ds.contains_anchor(a));
        }
    }

    #[test]
    fn sample_batches_minimal_sizes() {
        let ds = toy_dataset();
        let plan = sample_batches(&ds, 1, 1, 1, 3).unwrap();
        assert_eq!(plan.batches[0].len(), 1);
        assert_eq!(plan.validation.len(), 1);
        assert_ne!(plan.batches[0][0], plan.validation[0]);
    }

    #[test]
    fn sample_batches_is_deterministic() {
        let ds = build_dataset(20_000, PrimeBasis::first_n(40), 4).unwrap();
        let a = sample_batches(&ds, 5, 16, 32, 99).unwrap();
        let b = sample_batches(&ds, 5, 16, 32, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = sample_batches(&ds, 5, 16, 32, 100).unwrap();
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn sample_batches_capacity_error() {
        let ds = toy_dataset(); // 11 anchors
        let err = sample_batches(&ds, 3, 4, 0, 1).unwrap_err();
        assert_eq!(
            err,
            DatasetError::Capacity {
                available: 11,
                requested: 12
            }
        );
    }

    #[test]
    fn cache_round_trip() {
        let ds = toy_dataset();
        let bytes = encode_cache(&ds);
        let back = decode_cache(&bytes).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn cache_round_trip_larger() {
        let ds = build_dataset(30_000, PrimeBasis::first_n(100), 8).unwrap();
        let back = decode_cache(&encode_cache(&ds)).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn cache_rejects_truncation() {
        let bytes = encode_cache(&toy_dataset());
        for cut in [3, 10, 20, bytes.len() - 1] {
            let err = decode_cache(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, CacheError::Truncated { .. }),
                "cut at {cut} gave {err:?}"
            );
        }
    }

    #[test]
    fn cache_rejects_bad_magic_and_version() {
        let mut bytes = encode_cache(&toy_dataset());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(
            decode_cache(&wrong).unwrap_err(),
            CacheError::BadMagic(_)
        ));
        bytes[4] = 9; // version
        assert_eq!(
            decode_cache(&bytes).unwrap_err(),
            CacheError::UnsupportedVersion(9)
        );
    }

    #[test]
    fn cache_rejects_trailing_garbage() {
        let mut bytes = encode_cache(&toy_dataset());
        bytes.push(0);
        assert!(matches!(
            decode_cache(&bytes).unwrap_err(),
            CacheError::Malformed { .. }
        ));
    }

    #[test]
    fn class_histogram_counts_every_anchor() {
        let ds = build_dataset(20_000, PrimeBasis::first_n(40), 4).unwrap();
        let hist = ds.class_histogram(7);
        assert_eq!(hist.iter().sum::<u64>(), ds.anchors().len() as u64);
        assert_eq!(
            hist[3],
            ds.anchors().iter().filter(|&&a| a % 7 == 3).count() as u64
        );
    }
}

//! Confusion-matrix structure analysis.
//!
//! Trained models that cannot separate every congruence class fail in
//! geometric ways: a block of mutually confused middle classes, diagonal
//! stripes a fixed spacing apart, or the same block pattern replicated
//! across the matrix. [`analyze`] reduces a measured confusion matrix to a
//! machine-checkable [`PatternReport`], and [`match_patterns`] scores an
//! observed partition against a predicted one.

use alloc::vec;
use alloc::vec::Vec;

use crate::partition::Partition;
use crate::primes::factorize;

/// Counts of (true class, assigned class) pairs from a validation pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        assert!(classes >= 2, "confusion matrices need at least two classes");
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Self {
        assert!(classes >= 2 && counts.len() == classes * classes);
        ConfusionMatrix { classes, counts }
    }

    pub fn record(&mut self, true_class: usize, assigned: usize) {
        assert!(true_class < self.classes && assigned < self.classes);
        self.counts[true_class * self.classes + assigned] += 1;
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn at(&self, true_class: usize, assigned: usize) -> u64 {
        self.counts[true_class * self.classes + assigned]
    }

    pub fn row_sum(&self, true_class: usize) -> u64 {
        self.counts[true_class * self.classes..(true_class + 1) * self.classes]
            .iter()
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Trace over total.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let trace: u64 = (0..self.classes).map(|i| self.at(i, i)).sum();
        trace as f64 / total as f64
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternError {
    EmptyMatrix,
    SizeMismatch { left: usize, right: usize },
}

impl core::fmt::Display for PatternError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PatternError::EmptyMatrix => write!(f, "confusion matrix holds no observations"),
            PatternError::SizeMismatch { left, right } => {
                write!(f, "partition sizes differ: {left} vs {right}")
            }
        }
    }
}

impl core::error::Error for PatternError {}

/// Thresholds for the structural analysis. The defaults make the visual
/// block judgment reproducible: a class counts as identified when 90% of its
/// row mass sits on the diagonal, and two classes count as confused when
/// their symmetrized cross mass reaches 10%.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeConfig {
    pub identify_threshold: f64,
    pub co_confusion_threshold: f64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            identify_threshold: 0.9,
            co_confusion_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Solved,
    ThreeBlockRandom,
    ThreeBlockStriped,
    Replicated,
    Irregular,
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Verdict::Solved => "solved",
            Verdict::ThreeBlockRandom => "three-block-random",
            Verdict::ThreeBlockStriped => "three-block-striped",
            Verdict::Replicated => "replicated",
            Verdict::Irregular => "irregular",
        };
        f.write_str(s)
    }
}

/// Structural summary of a confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternReport {
    pub classes: usize,
    /// Classes whose diagonal mass clears the identification threshold.
    pub identified: Vec<usize>,
    /// Confusability groups over the remaining classes (singletons included).
    pub middle_groups: Vec<Vec<usize>>,
    /// Stripe period; present exactly when the verdict is striped.
    pub stripe_spacing: Option<u64>,
    pub verdict: Verdict,
}

impl PatternReport {
    /// Identified classes as singletons plus the middle groups.
    pub fn partition(&self) -> Partition {
        let mut groups: Vec<Vec<usize>> = self.identified.iter().map(|&c| vec![c]).collect();
        groups.extend(self.middle_groups.iter().cloned());
        Partition::new(groups)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classifies the structure of a confusion matrix given the context length
/// used during training.
pub fn analyze(matrix: &ConfusionMatrix, context_len: usize) -> Result<PatternReport, PatternError> {
    analyze_with(matrix, context_len, AnalyzeConfig::default())
}

pub fn analyze_with(
    matrix: &ConfusionMatrix,
    context_len: usize,
    cfg: AnalyzeConfig,
) -> Result<PatternReport, PatternError> {
    if matrix.total() == 0 {
        return Err(PatternError::EmptyMatrix);
    }
    let m = matrix.classes();

    // A class is identified when its diagonal holds enough of its row mass.
    // Classes absent from the validation set count as identified vacuously.
    let identified: Vec<usize> = (0..m)
        .filter(|&i| matrix.at(i, i) as f64 >= cfg.identify_threshold * matrix.row_sum(i) as f64)
        .collect();
    let is_identified = {
        let mut mask = vec![false; m];
        for &i in &identified {
            mask[i] = true;
        }
        mask
    };
    let middle: Vec<usize> = (0..m).filter(|&i| !is_identified[i]).collect();

    // Symmetrized normalized co-confusion between unidentified classes.
    let weight = |i: usize, j: usize| {
        let norm = |a: usize, b: usize| {
            let row = matrix.row_sum(a);
            if row == 0 {
                0.0
            } else {
                matrix.at(a, b) as f64 / row as f64
            }
        };
        0.5 * (norm(i, j) + norm(j, i))
    };

    let mut uf = UnionFind::new(m);
    let mut offsets_gcd = 0u64;
    let mut significant_pairs = 0usize;
    for (a, &i) in middle.iter().enumerate() {
        for &j in &middle[a + 1..] {
            if weight(i, j) >= cfg.co_confusion_threshold {
                uf.union(i, j);
                offsets_gcd = gcd(offsets_gcd, (j - i) as u64);
                significant_pairs += 1;
            }
        }
    }
    let mut group_of: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &i in &middle {
        let root = uf.find(i);
        group_of[root].push(i);
    }
    let middle_groups: Vec<Vec<usize>> = group_of.into_iter().filter(|g| !g.is_empty()).collect();

    // Verdict.
    let verdict;
    let mut stripe_spacing = None;
    if middle.is_empty() {
        verdict = Verdict::Solved;
    } else {
        let zero_identified = is_identified[0];
        let window_start = if m > context_len { m - context_len } else { 1 };
        let window_identified = (window_start..m).all(|i| is_identified[i]);
        let three_block_shape = zero_identified && window_identified;
        if !three_block_shape || significant_pairs == 0 {
            verdict = Verdict::Irregular;
        } else {
            let prime_power = factorize(m as u64).len() == 1;
            let g = offsets_gcd;
            if prime_power {
                if g > 1 {
                    stripe_spacing = Some(g);
                    verdict = Verdict::ThreeBlockStriped;
                } else {
                    verdict = Verdict::ThreeBlockRandom;
                }
            } else {
                let d = gcd(g, m as u64);
                if g > 1 && d > 1 {
                    // Groups align on arithmetic progressions whose common
                    // difference divides m: the block pattern of the unsolved
                    // component, replicated by the solved one.
                    verdict = Verdict::Replicated;
                } else if g > 1 {
                    stripe_spacing = Some(g);
                    verdict = Verdict::ThreeBlockStriped;
                } else {
                    verdict = Verdict::ThreeBlockRandom;
                }
            }
        }
    }

    Ok(PatternReport {
        classes: m,
        identified,
        middle_groups,
        stripe_spacing,
        verdict,
    })
}

/// Pairwise agreement between two partitions of the same class set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOutcome {
    /// Fraction of unordered class pairs whose same-group status agrees.
    pub score: f64,
    /// Whether the score clears the acceptance bar of 0.8.
    pub pass: bool,
}

pub const MATCH_PASS_SCORE: f64 = 0.8;

pub fn match_patterns(left: &Partition, right: &Partition) -> Result<MatchOutcome, PatternError> {
    if left.size() != right.size() {
        return Err(PatternError::SizeMismatch {
            left: left.size(),
            right: right.size(),
        });
    }
    let m = left.size();
    let a = left.group_ids();
    let b = right.group_ids();
    let mut agree = 0u64;
    let mut pairs = 0u64;
    for i in 0..m {
        for j in i + 1..m {
            pairs += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    let score = if pairs == 0 {
        1.0
    } else {
        agree as f64 / pairs as f64
    };
    Ok(MatchOutcome {
        score,
        pass: score >= MATCH_PASS_SCORE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagonal(m: usize, v: u64) -> ConfusionMatrix {
        let mut c = ConfusionMatrix::new(m);
        for i in 0..m {
            for _ in 0..v {
                c.record(i, i);
            }
        }
        c
    }

    #[test]
    fn accuracy_is_trace_over_total() {
        let mut c = ConfusionMatrix::new(3);
        c.record(0, 0);
        c.record(1, 1);
        c.record(1, 2);
        c.record(2, 0);
        assert_eq!(c.total(), 4);
        assert_eq!(c.accuracy(), 0.5);
    }

    #[test]
    fn perfect_matrix_is_solved() {
        for m in [2usize, 5, 11, 30] {
            let report = analyze(&diagonal(m, 7), 8).unwrap();
            assert_eq!(report.verdict, Verdict::Solved);
            assert_eq!(report.identified.len(), m);
            assert!(report.middle_groups.is_empty());
            assert_eq!(report.stripe_spacing, None);
            assert!(report.partition().is_all_singletons());
        }
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let c = ConfusionMatrix::new(4);
        assert_eq!(analyze(&c, 8).unwrap_err(), PatternError::EmptyMatrix);
    }

    #[test]
    fn three_block_random_structure() {
        // m = 11, B = 8: classes 0 and 3..10 clean, classes {1, 2} uniformly
        // cross-confused.
        let mut c = ConfusionMatrix::new(11);
        for i in [1usize, 2] {
            for j in [1usize, 2] {
                for _ in 0..20 {
                    c.record(i, j);
                }
            }
        }
        for i in (0..11).filter(|&i| i != 1 && i != 2) {
            for _ in 0..40 {
                c.record(i, i);
            }
        }
        let report = analyze(&c, 8).unwrap();
        assert_eq!(report.verdict, Verdict::ThreeBlockRandom);
        assert_eq!(report.middle_groups, vec![vec![1, 2]]);
        assert_eq!(report.stripe_spacing, None);
        let mut expected_identified: Vec<usize> = (0..11).filter(|&i| i != 1 && i != 2).collect();
        expected_identified.sort_unstable();
        assert_eq!(report.identified, expected_identified);
    }

    #[test]
    fn striped_structure_with_spacing_nine() {
        // m = 27, B = 8: middle classes 1..18 confused along residues mod 9.
        let m = 27;
        let mut c = ConfusionMatrix::new(m);
        for i in 0..m {
            if i == 0 || i >= 19 {
                for _ in 0..40 {
                    c.record(i, i);
                }
            }
        }
        for x in 1..=18usize {
            let partner = if x + 9 <= 18 { x + 9 } else { x - 9 };
            for _ in 0..20 {
                c.record(x, x);
                c.record(x, partner);
            }
        }
        let report = analyze(&c, 8).unwrap();
        assert_eq!(report.verdict, Verdict::ThreeBlockStriped);
        assert_eq!(report.stripe_spacing, Some(9));
        assert_eq!(report.middle_groups.len(), 9);
        for g in &report.middle_groups {
            assert_eq!(g.len(), 2);
            assert_eq!(g[1] - g[0], 9);
        }
    }

    #[test]
    fn replicated_structure_for_splitting_modulus() {
        // m = 22, B = 8: parity is solved, the mod-11 component is not;
        // groups {1, 13} and {2, 12} differ by even offsets dividing 22.
        let m = 22;
        let mut c = ConfusionMatrix::new(m);
        for i in 0..m {
            if ![1usize, 2, 12, 13].contains(&i) {
                for _ in 0..40 {
                    c.record(i, i);
                }
            }
        }
        for &(a, b) in &[(1usize, 13usize), (2, 12)] {
            for _ in 0..20 {
                c.record(a, a);
                c.record(a, b);
                c.record(b, b);
                c.record(b, a);
            }
        }
        let report = analyze(&c, 8).unwrap();
        assert_eq!(report.verdict, Verdict::Replicated);
        assert_eq!(report.stripe_spacing, None);
        assert_eq!(report.middle_groups, vec![vec![1, 13], vec![2, 12]]);
    }

    #[test]
    fn diffuse_errors_are_irregular() {
        // One weak class whose errors are spread too thin to form a group.
        let m = 23;
        let mut c = ConfusionMatrix::new(m);
        for i in 0..m {
            for _ in 0..40 {
                c.record(i, i);
            }
        }
        for j in 1..21usize {
            c.record(5, j); // 20 stray errors out of 60 -> 0.67 < 0.9
        }
        let report = analyze(&c, 24).unwrap();
        assert_eq!(report.verdict, Verdict::Irregular);
    }

    #[test]
    fn report_partition_covers_every_class_once() {
        let mut c = ConfusionMatrix::new(13);
        for i in 0..13 {
            if !(1..=4).contains(&i) {
                for _ in 0..40 {
                    c.record(i, i);
                }
            }
        }
        for i in 1..=4usize {
            for j in 1..=4usize {
                for _ in 0..10 {
                    c.record(i, j);
                }
            }
        }
        let report = analyze(&c, 8).unwrap();
        let p = report.partition();
        assert_eq!(p.size(), 13);
        assert_eq!(report.verdict, Verdict::ThreeBlockRandom);
        assert_eq!(report.middle_groups, vec![vec![1, 2, 3, 4]]);
    }

    #[test]
    fn match_identical_partitions_scores_one() {
        let p = Partition::new(vec![vec![0], vec![1, 2], vec![3]]);
        let out = match_patterns(&p, &p.clone()).unwrap();
        assert_eq!(out.score, 1.0);
        assert!(out.pass);
    }

    #[test]
    fn match_pair_group_versus_singletons() {
        // Predicted {{1,2}} + singletons vs all singletons on m = 11:
        // exactly one of C(11,2) pairs disagrees.
        let mut groups: Vec<Vec<usize>> = vec![vec![0], vec![1, 2]];
        groups.extend((3..11).map(|x| vec![x]));
        let predicted = Partition::new(groups);
        let observed = Partition::singletons(11);
        let out = match_patterns(&predicted, &observed).unwrap();
        let expected = 1.0 - 1.0 / 55.0;
        assert!((out.score - expected).abs() < 1e-12);
        assert!(out.pass);
    }

    #[test]
    fn match_fails_when_structures_disagree_broadly() {
        // Solved prediction vs a fully confused middle on m = 19, B = 8:
        // C(10,2) of C(19,2) pairs disagree.
        let predicted = Partition::singletons(19);
        let mut groups: Vec<Vec<usize>> = vec![vec![0]];
        groups.push((1..=10).collect());
        groups.extend((11..19).map(|x| vec![x]));
        let observed = Partition::new(groups);
        let out = match_patterns(&predicted, &observed).unwrap();
        let expected = 1.0 - 45.0 / 171.0;
        assert!((out.score - expected).abs() < 1e-12);
        assert!(!out.pass);
    }

    #[test]
    fn match_is_symmetric_and_detects_size_mismatch() {
        let a = Partition::new(vec![vec![0, 1], vec![2]]);
        let b = Partition::singletons(3);
        let ab = match_patterns(&a, &b).unwrap();
        let ba = match_patterns(&b, &a).unwrap();
        assert_eq!(ab.score, ba.score);
        let c = Partition::singletons(4);
        assert_eq!(
            match_patterns(&a, &c).unwrap_err(),
            PatternError::SizeMismatch { left: 3, right: 4 }
        );
    }
}

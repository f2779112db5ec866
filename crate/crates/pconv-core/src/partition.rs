//! Partitions of the class set `{0, .., m-1}`, shared by the predictor and
//! the confusion-pattern analyzer.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// A partition in canonical form: members sorted within each group, groups
/// sorted by their smallest member, covering `0..size` exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    size: usize,
    groups: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonicalizes and validates `groups` as a partition of `0..n` where
    /// `n` is the total member count.
    pub fn new(mut groups: Vec<Vec<usize>>) -> Self {
        let size: usize = groups.iter().map(|g| g.len()).sum();
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.retain(|g| !g.is_empty());
        groups.sort_by_key(|g| g[0]);
        let mut seen = vec![false; size];
        for g in &groups {
            for &x in g {
                assert!(x < size && !seen[x], "groups must cover 0..{size} exactly once");
                seen[x] = true;
            }
        }
        Partition { size, groups }
    }

    /// Builds a partition from a per-class group label array.
    pub fn from_group_ids(ids: &[usize]) -> Self {
        let distinct = {
            let mut sorted: Vec<usize> = ids.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            sorted
        };
        let mut groups = vec![Vec::new(); distinct.len()];
        for (class, id) in ids.iter().enumerate() {
            let slot = distinct.binary_search(id).unwrap();
            groups[slot].push(class);
        }
        Partition::new(groups)
    }

    pub fn singletons(size: usize) -> Self {
        Partition::new((0..size).map(|x| vec![x]).collect())
    }

    /// Number of classes partitioned.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn is_all_singletons(&self) -> bool {
        self.groups.len() == self.size
    }

    /// Per-class group index (into `groups()`).
    pub fn group_ids(&self) -> Vec<usize> {
        let mut ids = vec![0usize; self.size];
        for (gi, g) in self.groups.iter().enumerate() {
            for &x in g {
                ids[x] = gi;
            }
        }
        ids
    }

    /// Text encoding: groups joined by `;`, members inside a group by `+`.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        for (gi, g) in self.groups.iter().enumerate() {
            if gi > 0 {
                out.push(';');
            }
            for (mi, &x) in g.iter().enumerate() {
                if mi > 0 {
                    out.push('+');
                }
                out.push_str(itoa(x).as_str());
            }
        }
        out
    }
}

fn itoa(x: usize) -> String {
    alloc::format!("{x}")
}

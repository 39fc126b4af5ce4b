//! Sorted, disjoint TID ranges marking invalidated cold/frozen tuples.
//!
//! Scans skip these ranges instead of probing a per-tuple structure.
//! Adjacent and overlapping ranges are merged on insert, so the list stays
//! small whether invalidations are scattered singles or bulk sweeps.

use crate::storage::tid::Tid;

/// Inclusive `(begin, end)` ranges, sorted, pairwise disjoint and
/// non-adjacent (`ranges[i].1 + 1 < ranges[i+1].0`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvalidRangeList {
    ranges: Vec<(u64, u64)>,
}

impl InvalidRangeList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ranges(mut ranges: Vec<(u64, u64)>) -> Self {
        ranges.sort_unstable();
        let mut list = Self::new();
        for (b, e) in ranges {
            list.insert(b, e);
        }
        list
    }

    /// Insert an inclusive range, merging with neighbours. Idempotent over
    /// already-invalid TIDs.
    pub fn insert(&mut self, begin: u64, end: u64) {
        assert!(begin <= end, "range begin must not exceed end");
        // First range that could merge with [begin, end]: its end + 1 >= begin.
        let lo = self.ranges.partition_point(|&(_, e)| e.wrapping_add(1) < begin);
        // One past the last range that could merge: its begin <= end + 1.
        let hi = self.ranges[lo..].partition_point(|&(b, _)| b <= end.saturating_add(1)) + lo;
        if lo == hi {
            self.ranges.insert(lo, (begin, end));
            return;
        }
        let merged = (begin.min(self.ranges[lo].0), end.max(self.ranges[hi - 1].1));
        self.ranges.splice(lo..hi, [merged]);
    }

    pub fn contains(&self, tid: Tid) -> bool {
        let i = self.ranges.partition_point(|&(_, e)| e < tid.0);
        self.ranges.get(i).is_some_and(|&(b, _)| b <= tid.0)
    }

    pub fn ranges(&self) -> &[(u64, u64)] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Number of invalidated TIDs.
    pub fn invalid_tuples(&self) -> u64 {
        self.ranges.iter().map(|&(b, e)| e - b + 1).sum()
    }

    /// The stored ranges clipped to `[begin, end]` (inclusive).
    pub fn clipped(&self, begin: u64, end: u64) -> Vec<(u64, u64)> {
        let lo = self.ranges.partition_point(|&(_, e)| e < begin);
        self.ranges[lo..]
            .iter()
            .take_while(|&&(b, _)| b <= end)
            .map(|&(b, e)| (b.max(begin), e.min(end)))
            .collect()
    }

    /// Maximal spans of `[begin, end]` (inclusive) not covered by any range.
    pub fn gaps(&self, begin: u64, end: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut cursor = begin;
        for (b, e) in self.clipped(begin, end) {
            if b > cursor {
                out.push((cursor, b - 1));
            }
            cursor = e + 1;
            if cursor > end {
                return out;
            }
        }
        if cursor <= end {
            out.push((cursor, end));
        }
        out
    }
}

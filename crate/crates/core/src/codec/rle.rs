//! Position-based run-length encoding.
//!
//! Instead of `(run_length, value)` pairs, runs are stored as
//! `(end_position, value)` where `positions[i]` is the exclusive end of run
//! `i`, i.e. `values[i]` covers logical indices `positions[i-1]..positions[i]`
//! (with `positions[-1]` taken as 0) and the last position equals the
//! element count. Scans walk the runs; point accesses binary-search the
//! position column instead of walking it.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionalRuns<T> {
    positions: Vec<u64>,
    values: Vec<T>,
}

impl<T: Clone + PartialEq> PositionalRuns<T> {
    /// Encode a sequence into maximal runs (adjacent run values differ).
    pub fn encode(seq: &[T]) -> Self {
        let mut positions = Vec::new();
        let mut values = Vec::new();
        for (i, v) in seq.iter().enumerate() {
            if values.last() != Some(v) {
                positions.push(i as u64); // provisional, fixed below
                values.push(v.clone());
            }
        }
        // Shift starts to exclusive ends.
        for i in 0..positions.len() {
            positions[i] = if i + 1 < positions.len() { positions[i + 1] } else { seq.len() as u64 };
        }
        Self { positions, values }
    }

    /// Build from raw parts. Accepts non-maximal runs; positions must be
    /// strictly ascending.
    pub fn from_parts(positions: Vec<u64>, values: Vec<T>) -> Result<Self> {
        if positions.len() != values.len() {
            return Err(Error::PersistCorrupt("run positions and values differ in length".into()));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::PersistCorrupt("run positions not strictly ascending".into()));
        }
        Ok(Self { positions, values })
    }

    pub fn decode(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.element_count() as usize);
        let mut start = 0u64;
        for (end, v) in self.positions.iter().zip(&self.values) {
            for _ in start..*end {
                out.push(v.clone());
            }
            start = *end;
        }
        out
    }

    pub fn run_count(&self) -> usize {
        self.values.len()
    }

    pub fn element_count(&self) -> u64 {
        self.positions.last().copied().unwrap_or(0)
    }

    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value at a logical index via binary search.
    pub fn value_at(&self, index: u64) -> Result<&T> {
        let (run, _) = self.search(index)?;
        Ok(&self.values[run])
    }

    /// As [`value_at`](Self::value_at) but also reports how many position
    /// comparisons the binary search performed.
    pub fn value_at_counted(&self, index: u64) -> Result<(&T, u32)> {
        let (run, cmps) = self.search(index)?;
        Ok((&self.values[run], cmps))
    }

    /// Smallest run index whose exclusive end exceeds `index`.
    fn search(&self, index: u64) -> Result<(usize, u32)> {
        if index >= self.element_count() {
            return Err(Error::RleOutOfRange { index, len: self.element_count() });
        }
        let mut lo = 0usize;
        let mut hi = self.positions.len();
        let mut cmps = 0u32;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            cmps += 1;
            if self.positions[mid] > index {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok((lo, cmps))
    }
}

/// Compression gain of run-length encoding a sequence: plain bytes over
/// encoded bytes, where each run costs `position_bytes + value_bytes`.
/// An empty sequence reports a gain of 1.0 (nothing to win or lose).
pub fn rle_gain<T: Clone + PartialEq>(seq: &[T], position_bytes: usize, value_bytes: usize) -> f64 {
    if seq.is_empty() {
        return 1.0;
    }
    let runs = PositionalRuns::encode(seq).run_count();
    let plain = seq.len() * value_bytes;
    let encoded = runs * (position_bytes + value_bytes);
    plain as f64 / encoded as f64
}

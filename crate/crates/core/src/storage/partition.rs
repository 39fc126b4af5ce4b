//! One partition: an ordered list of chunks plus the per-partition
//! bookkeeping (primary-key index, invalidation ranges, secondary indexes).
//!
//! Exactly one writer mutates a partition at a time. OLTP threads and the
//! maintenance worker hand the role over through `writer`, a plain mutex
//! acquired per operation. Snapshot creation quiesces writers by taking
//! every partition's writer lock at once.

use std::collections::HashMap;
use std::sync::atomic::AtomicU64;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};

use crate::index::TidIndex;
use crate::storage::chunk::Chunk;
use crate::storage::invalid::InvalidRangeList;
use crate::storage::tid::Tid;
use crate::value::Value;

pub struct Partition {
    id: usize,
    pub(crate) writer: Mutex<()>,
    pub(crate) chunks: RwLock<Vec<Arc<Chunk>>>,
    pub(crate) invalid: RwLock<InvalidRangeList>,
    pub(crate) pk: RwLock<HashMap<Box<[Value]>, Tid>>,
    /// One optional secondary index per attribute.
    pub(crate) indexes: Vec<RwLock<Option<TidIndex>>>,
    /// Engine epoch of the most recent index entry removal. Plans consult a
    /// live index for a snapshot only when no removal happened since the
    /// snapshot was taken.
    pub(crate) index_removal_epoch: AtomicU64,
}

impl Partition {
    pub fn new(id: usize, attr_count: usize) -> Self {
        Self {
            id,
            writer: Mutex::new(()),
            chunks: RwLock::new(Vec::new()),
            invalid: RwLock::new(InvalidRangeList::new()),
            pk: RwLock::new(HashMap::new()),
            indexes: (0..attr_count).map(|_| RwLock::new(None)).collect(),
            index_removal_epoch: AtomicU64::new(0),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn chunk_count(&self) -> usize {
        self.chunks.read().len()
    }

    pub fn chunk(&self, index: usize) -> Option<Arc<Chunk>> {
        self.chunks.read().get(index).cloned()
    }

    pub fn chunk_list(&self) -> Vec<Arc<Chunk>> {
        self.chunks.read().clone()
    }

    /// One past the highest assigned TID.
    pub fn next_tid(&self) -> u64 {
        let chunks = self.chunks.read();
        chunks.last().map_or(0, |c| c.base_tid() + c.count() as u64)
    }

    pub fn invalid_ranges(&self) -> InvalidRangeList {
        self.invalid.read().clone()
    }

    pub fn valid_tuple_count(&self) -> u64 {
        let chunks = self.chunks.read();
        let mut live: u64 = 0;
        for c in chunks.iter() {
            let count = c.count() as u64;
            if c.is_frozen() {
                live += count;
            } else {
                live += (0..c.count()).filter(|&s| c.slot_bit(s)).count() as u64;
            }
        }
        live - self.invalid.read().invalid_tuples()
    }

    /// Deterministic estimate of primary-key index heap bytes.
    pub fn pk_index_bytes(&self) -> usize {
        let pk = self.pk.read();
        let entry = std::mem::size_of::<(Box<[Value]>, Tid)>();
        let content: usize = pk
            .keys()
            .map(|k| k.len() * std::mem::size_of::<Value>() + k.iter().map(Value::heap_bytes).sum::<usize>())
            .sum();
        content + pk.len() * entry * 8 / 7
    }
}

/// Maximal spans of valid TIDs within `[base, base + count)`: set bitmap
/// bits (when present) minus invalidated ranges. Frozen chunks pass no
/// bitmap; their deletions live entirely in the range list.
pub fn compute_valid_runs(
    base: u64,
    count: u64,
    bitmap: Option<&[u64]>,
    invalid: &InvalidRangeList,
) -> Vec<(u64, u64)> {
    if count == 0 {
        return Vec::new();
    }
    let bit_spans: Vec<(u64, u64)> = match bitmap {
        None => vec![(base, base + count - 1)],
        Some(words) => {
            let mut spans = Vec::new();
            let mut run_start: Option<u64> = None;
            for slot in 0..count {
                let set = words[(slot / 64) as usize] & (1 << (slot % 64)) != 0;
                match (set, run_start) {
                    (true, None) => run_start = Some(base + slot),
                    (false, Some(s)) => {
                        spans.push((s, base + slot - 1));
                        run_start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = run_start {
                spans.push((s, base + count - 1));
            }
            spans
        }
    };
    let mut out = Vec::new();
    for (b, e) in bit_spans {
        out.extend(invalid.gaps(b, e));
    }
    out
}

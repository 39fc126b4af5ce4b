//! Shared ref-counted string dictionary.
//!
//! One dictionary serves one string attribute across all partitions of a
//! relation. Keys are slot offsets and are never stored explicitly. Each
//! slot carries a reference count; a count of zero frees the slot for
//! reuse. A value-to-key hash index deduplicates on intern.
//!
//! Mutation (intern/release) is guarded by a lock taken by the freeze
//! worker, the cold-update relocation path, and — in eager compression
//! mode — by inserting writers. Read-only resolution of live keys is safe
//! concurrently with interning: a live slot's value is never rewritten.

use std::collections::HashMap;

use parking_lot::RwLock;

use crate::error::{Error, Result};

pub type DictKey = u32;

/// Key stored in frozen key vectors for slots that were already deleted
/// when the chunk froze. Never resolvable.
pub const DEAD_SLOT_KEY: DictKey = u32::MAX;

#[derive(Debug)]
struct Slot {
    refs: u64,
    value: Box<str>,
}

#[derive(Debug, Default)]
struct DictInner {
    slots: Vec<Slot>,
    /// Slot offsets with a zero reference count, reused LIFO.
    free: Vec<DictKey>,
    /// Value-to-key hash index over live values.
    index: HashMap<Box<str>, DictKey>,
}

#[derive(Debug)]
pub struct Dictionary {
    inner: RwLock<DictInner>,
    /// Built sorted and kept append-free; enables key-range probes.
    ordered: bool,
}

impl Default for Dictionary {
    fn default() -> Self {
        Self::new()
    }
}

impl Dictionary {
    pub fn new() -> Self {
        Self { inner: RwLock::new(DictInner::default()), ordered: false }
    }

    /// Build a dictionary whose key order equals the value order. All values
    /// start with a zero reference count but are indexed and never placed on
    /// the free list, so later interns of pool values keep their sorted keys.
    /// Used by the ordered-dictionary benchmark mode only.
    pub fn seeded_sorted(values: impl IntoIterator<Item = String>) -> Self {
        let mut sorted: Vec<String> = values.into_iter().collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut inner = DictInner::default();
        for v in sorted {
            let key = inner.slots.len() as DictKey;
            let boxed: Box<str> = v.into_boxed_str();
            inner.index.insert(boxed.clone(), key);
            inner.slots.push(Slot { refs: 0, value: boxed });
        }
        Self { inner: RwLock::new(inner), ordered: true }
    }

    pub fn is_ordered(&self) -> bool {
        self.ordered
    }

    /// Intern a value: bump the count of an existing slot or fill a free /
    /// fresh one. Returns the key.
    pub fn intern(&self, value: &str) -> DictKey {
        let mut inner = self.inner.write();
        if let Some(&key) = inner.index.get(value) {
            inner.slots[key as usize].refs += 1;
            return key;
        }
        let key = match inner.free.pop() {
            Some(key) => {
                let slot = &mut inner.slots[key as usize];
                debug_assert_eq!(slot.refs, 0);
                slot.refs = 1;
                slot.value = value.into();
                key
            }
            None => {
                let key = inner.slots.len() as DictKey;
                assert!(key < DEAD_SLOT_KEY, "dictionary key space exhausted");
                inner.slots.push(Slot { refs: 1, value: value.into() });
                key
            }
        };
        inner.index.insert(value.into(), key);
        key
    }

    /// Drop one reference. At zero the slot is unindexed and freed for reuse.
    pub fn release(&self, key: DictKey) -> Result<()> {
        let mut inner = self.inner.write();
        let slot = inner
            .slots
            .get_mut(key as usize)
            .filter(|s| s.refs > 0)
            .ok_or(Error::ReleaseUnderflow(key))?;
        slot.refs -= 1;
        if slot.refs == 0 {
            let value = std::mem::take(&mut slot.value);
            inner.index.remove(&value);
            inner.free.push(key);
        }
        Ok(())
    }

    /// Resolve a live key to its value.
    pub fn value_of(&self, key: DictKey) -> Result<String> {
        let inner = self.inner.read();
        inner
            .slots
            .get(key as usize)
            .filter(|s| s.refs > 0 || self.ordered)
            .map(|s| s.value.to_string())
            .ok_or(Error::DeadDictKey(key))
    }

    /// Key for a live value, if present.
    pub fn key_of(&self, value: &str) -> Option<DictKey> {
        self.inner.read().index.get(value).copied()
    }

    pub fn ref_count(&self, key: DictKey) -> u64 {
        self.inner.read().slots.get(key as usize).map_or(0, |s| s.refs)
    }

    /// Sum of all reference counts.
    pub fn total_refs(&self) -> u64 {
        self.inner.read().slots.iter().map(|s| s.refs).sum()
    }

    /// Number of live (referenced) values; seeded slots count even at zero.
    pub fn live_count(&self) -> usize {
        let inner = self.inner.read();
        if self.ordered {
            inner.slots.len()
        } else {
            inner.slots.len() - inner.free.len()
        }
    }

    /// Slot count including free slots; also the exclusive upper bound of
    /// ever-assigned keys. Snapshot views capture this.
    pub fn slot_count(&self) -> u32 {
        self.inner.read().slots.len() as u32
    }

    /// Exactly the live keys whose values satisfy the predicate.
    pub fn collect_matching_keys(&self, mut predicate: impl FnMut(&str) -> bool) -> Vec<DictKey> {
        let inner = self.inner.read();
        inner
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| (s.refs > 0 || self.ordered) && predicate(&s.value))
            .map(|(k, _)| k as DictKey)
            .collect()
    }

    /// Contiguous key interval whose values fall in `[low, high]`
    /// (`high = None` means unbounded). Requires an ordered dictionary.
    pub fn ordered_key_range(&self, low: &str, high_inclusive: Option<&str>) -> Result<Option<(DictKey, DictKey)>> {
        if !self.ordered {
            return Err(Error::OrderedModeInactive);
        }
        let inner = self.inner.read();
        let lo = inner.slots.partition_point(|s| &*s.value < low) as u32;
        let hi = match high_inclusive {
            Some(high) => inner.slots.partition_point(|s| &*s.value <= high) as u32,
            None => inner.slots.len() as u32,
        };
        Ok(if lo < hi { Some((lo, hi - 1)) } else { None })
    }

    /// Contiguous key interval whose values start with `prefix`.
    /// Requires an ordered dictionary.
    pub fn ordered_prefix_range(&self, prefix: &str) -> Result<Option<(DictKey, DictKey)>> {
        if !self.ordered {
            return Err(Error::OrderedModeInactive);
        }
        let inner = self.inner.read();
        let lo = inner.slots.partition_point(|s| s.value.as_bytes() < prefix.as_bytes()) as u32;
        let hi = match crate::index::prefix_successor(prefix.as_bytes()) {
            Some(succ) => inner.slots.partition_point(|s| s.value.as_bytes() < &succ[..]) as u32,
            None => inner.slots.len() as u32,
        };
        Ok(if lo < hi { Some((lo, hi - 1)) } else { None })
    }

    /// Deterministic estimate of the dictionary's heap footprint: slot array,
    /// free list, hash index (which owns a second copy of each live value)
    /// and the string payloads. Computed from content, not allocator state.
    pub fn heap_bytes(&self) -> usize {
        let inner = self.inner.read();
        let slot_struct = std::mem::size_of::<Slot>();
        let slots: usize = inner.slots.iter().map(|s| slot_struct + s.value.len()).sum();
        let index_entry = std::mem::size_of::<(Box<str>, DictKey)>();
        let index: usize = inner.index.keys().map(|k| k.len()).sum::<usize>()
            + inner.index.len() * index_entry * 8 / 7;
        slots + index + inner.free.len() * std::mem::size_of::<DictKey>()
    }
}

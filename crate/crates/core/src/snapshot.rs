//! Transaction-consistent snapshots.
//!
//! Creating a snapshot quiesces all partition writers, bumps the engine
//! epoch and copies descriptor tables, validity bitmaps, invalidation
//! lists and dictionary watermarks — never page contents. The descriptor
//! count models the page-table-copy cost of a process fork. After
//! creation, a writer clones a page before its first write to any page an
//! outstanding snapshot may still see; frozen vectors live on huge pages
//! that are never written, so they are never replicated.
//!
//! Snapshot reads run entirely against the captured tables: they take no
//! partition locks and leave no trace in the access observer.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::codec::dictionary::{DictKey, Dictionary, DEAD_SLOT_KEY};
use crate::engine::{Engine, EngineShared, SnapshotReg};
use crate::error::{Error, Result};
use crate::storage::invalid::InvalidRangeList;
use crate::storage::partition::compute_valid_runs;
use crate::storage::tid::Tid;
use crate::storage::vector::{Cell, VectorData};
use crate::value::{Schema, Value};

#[derive(Debug)]
pub struct SnapshotStats {
    pub epoch: u64,
    /// Descriptors copied at creation (the fork-cost model).
    pub descriptors_copied: u64,
    /// Distinct shared pages first-written during this snapshot's lifetime.
    pub pages_replicated: AtomicU64,
}

/// Dictionary view: the shared dictionary plus the slot watermark at
/// capture. Keys at or beyond the watermark were interned later and are
/// invisible; keys below it that were live at capture are immutable while
/// any chunk references them, so resolution can safely share the live
/// structure.
pub struct DictView {
    dict: Arc<Dictionary>,
    slots_at: u32,
}

impl DictView {
    pub fn value_of(&self, key: DictKey) -> Result<String> {
        if key >= self.slots_at {
            return Err(Error::DeadDictKey(key));
        }
        self.dict.value_of(key)
    }

    pub fn key_of(&self, value: &str) -> Option<DictKey> {
        self.dict.key_of(value).filter(|&k| k < self.slots_at)
    }

    pub fn collect_matching_keys(&self, predicate: impl FnMut(&str) -> bool) -> Vec<DictKey> {
        let mut keys = self.dict.collect_matching_keys(predicate);
        keys.retain(|&k| k < self.slots_at);
        keys
    }

    pub fn ordered_key_range(&self, low: &str, high_inclusive: Option<&str>) -> Result<Option<(DictKey, DictKey)>> {
        let range = self.dict.ordered_key_range(low, high_inclusive)?;
        Ok(range.and_then(|(lo, hi)| {
            let hi = hi.min(self.slots_at.saturating_sub(1));
            (lo <= hi).then_some((lo, hi))
        }))
    }

    pub fn ordered_prefix_range(&self, prefix: &str) -> Result<Option<(DictKey, DictKey)>> {
        let range = self.dict.ordered_prefix_range(prefix)?;
        Ok(range.and_then(|(lo, hi)| {
            let hi = hi.min(self.slots_at.saturating_sub(1));
            (lo <= hi).then_some((lo, hi))
        }))
    }

    pub fn is_ordered(&self) -> bool {
        self.dict.is_ordered()
    }
}

pub struct VectorView {
    pub data: VectorData,
    pub width: usize,
}

impl VectorView {
    pub fn read_cell(&self, slot: usize, scratch: &mut Vec<u8>) -> Cell {
        self.data.read_cell(slot, self.width, scratch).0
    }
}

pub struct ChunkView {
    pub base: u64,
    pub count: u64,
    pub frozen: bool,
    bitmap: Option<Box<[u64]>>,
    pub vectors: Vec<VectorView>,
}

impl ChunkView {
    /// Valid TID spans of this chunk as captured.
    pub fn valid_runs(&self, invalid: &InvalidRangeList) -> Vec<(u64, u64)> {
        compute_valid_runs(self.base, self.count, self.bitmap.as_deref(), invalid)
    }

    pub fn slot_live(&self, slot: usize) -> bool {
        match &self.bitmap {
            Some(words) => words[slot / 64] & (1 << (slot % 64)) != 0,
            None => true,
        }
    }
}

pub struct PartitionView {
    pub invalid: InvalidRangeList,
    pub chunks: Vec<ChunkView>,
    pub next_tid: u64,
}

pub struct RelationView {
    pub name: String,
    pub schema: Schema,
    pub dicts: Vec<Option<DictView>>,
    pub partitions: Vec<PartitionView>,
}

impl RelationView {
    pub fn valid_tuple_count(&self) -> u64 {
        self.partitions
            .iter()
            .map(|p| {
                p.chunks
                    .iter()
                    .map(|c| c.valid_runs(&p.invalid).iter().map(|(b, e)| e - b + 1).sum::<u64>())
                    .sum::<u64>()
            })
            .sum()
    }
}

pub struct SnapshotCore {
    pub epoch: u64,
    capacity: usize,
    stats: Arc<SnapshotStats>,
    relations: Vec<RelationView>,
    shared: Arc<EngineShared>,
}

/// Owning handle of one snapshot. Dropping it (or calling
/// [`SnapshotHandle::drop_snapshot`]) releases the captured pages; shared
/// buffers without remaining referents are reclaimed then.
pub struct SnapshotHandle {
    core: Option<Arc<SnapshotCore>>,
}

pub fn create_snapshot(engine: &Engine) -> SnapshotHandle {
    let shared = engine.shared().clone();
    engine.quiesce(|| {
        let epoch = shared.epoch.load(Ordering::SeqCst) + 1;
        shared.epoch.store(epoch, Ordering::SeqCst);
        let mut descriptors = 0u64;
        let relations = engine
            .relations()
            .iter()
            .map(|rel| {
                let dicts = (0..rel.schema().attr_count())
                    .map(|a| {
                        rel.dictionary(a).map(|d| DictView { dict: d.clone(), slots_at: d.slot_count() })
                    })
                    .collect();
                let partitions = rel
                    .partitions()
                    .iter()
                    .map(|part| {
                        let chunks = part
                            .chunk_list()
                            .iter()
                            .map(|chunk| {
                                let vectors = chunk
                                    .vectors()
                                    .iter()
                                    .map(|v| {
                                        let data = v.clone_data();
                                        descriptors += data.pages().page_count() as u64;
                                        VectorView { data, width: v.width() }
                                    })
                                    .collect();
                                ChunkView {
                                    base: chunk.base_tid(),
                                    count: chunk.count() as u64,
                                    frozen: chunk.is_frozen(),
                                    bitmap: (!chunk.is_frozen()).then(|| chunk.bitmap_words()),
                                    vectors,
                                }
                            })
                            .collect();
                        PartitionView {
                            invalid: part.invalid_ranges(),
                            chunks,
                            next_tid: part.next_tid(),
                        }
                    })
                    .collect();
                RelationView {
                    name: rel.name().to_string(),
                    schema: rel.schema().clone(),
                    dicts,
                    partitions,
                }
            })
            .collect();
        let stats = Arc::new(SnapshotStats {
            epoch,
            descriptors_copied: descriptors,
            pages_replicated: AtomicU64::new(0),
        });
        shared.snapshots.lock().push(SnapshotReg { epoch, stats: stats.clone() });
        shared.max_live_snapshot.store(epoch, Ordering::SeqCst);
        shared.counters.snapshots_created.fetch_add(1, Ordering::Relaxed);
        SnapshotHandle {
            core: Some(Arc::new(SnapshotCore {
                epoch,
                capacity: shared.cfg.chunk_capacity,
                stats,
                relations,
                shared: shared.clone(),
            })),
        }
    })
}

impl SnapshotHandle {
    fn core(&self) -> &SnapshotCore {
        self.core.as_ref().expect("snapshot handle already dropped")
    }

    pub fn epoch(&self) -> u64 {
        self.core().epoch
    }

    pub fn descriptors_copied(&self) -> u64 {
        self.core().stats.descriptors_copied
    }

    /// Pages cloned by writers on behalf of this snapshot so far.
    pub fn pages_replicated(&self) -> u64 {
        self.core().stats.pages_replicated.load(Ordering::Relaxed)
    }

    pub fn chunk_capacity(&self) -> usize {
        self.core().capacity
    }

    pub fn relation_view(&self, name: &str) -> Result<&RelationView> {
        self.core()
            .relations
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRelation(name.into()))
    }

    /// Point read as of the snapshot epoch.
    pub fn read(&self, relation: &str, p: usize, tid: Tid, attr: usize) -> Result<Value> {
        let rel = self.relation_view(relation)?;
        let part = rel.partitions.get(p).ok_or(Error::UnknownPartition(p))?;
        if tid.0 >= part.next_tid {
            return Err(Error::TupleNotFound(tid));
        }
        let capacity = self.core().capacity;
        let chunk = part.chunks.get(tid.chunk(capacity)).ok_or(Error::TupleNotFound(tid))?;
        let slot = tid.offset(capacity);
        if slot as u64 >= chunk.count || !chunk.slot_live(slot) || part.invalid.contains(tid) {
            return Err(Error::TupleNotFound(tid));
        }
        read_view_value(rel, chunk, attr, slot)
    }

    /// Consume the handle and release its pages.
    pub fn drop_snapshot(mut self) {
        self.release();
    }

    fn release(&mut self) {
        if let Some(core) = self.core.take() {
            let shared = core.shared.clone();
            let mut reg = shared.snapshots.lock();
            reg.retain(|r| !Arc::ptr_eq(&r.stats, &core.stats));
            let max = reg.iter().map(|r| r.epoch).max().unwrap_or(0);
            shared.max_live_snapshot.store(max, Ordering::SeqCst);
            shared.counters.snapshots_dropped.fetch_add(1, Ordering::Relaxed);
        }
    }
}

impl Drop for SnapshotHandle {
    fn drop(&mut self) {
        self.release();
    }
}

/// Decode a captured cell, resolving dictionary keys through the captured
/// dictionary view.
pub fn read_view_value(rel: &RelationView, chunk: &ChunkView, attr: usize, slot: usize) -> Result<Value> {
    let ty = rel.schema.attr_type(attr);
    let mut scratch = Vec::new();
    match chunk.vectors[attr].read_cell(slot, &mut scratch) {
        Cell::Bytes => Ok(Value::decode_slot(ty, &scratch)),
        Cell::Key(k) => {
            if k == DEAD_SLOT_KEY {
                return Err(Error::TupleNotFound(Tid(chunk.base + slot as u64)));
            }
            let dict = rel.dicts[attr].as_ref().expect("key cell implies a dictionary");
            Ok(Value::Str(dict.value_of(k)?))
        }
    }
}

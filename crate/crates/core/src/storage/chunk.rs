//! A fixed-capacity horizontal slice of one partition: one vector per
//! attribute plus a validity bitmap used while the chunk is not frozen.
//! Deletes in hot/cooling chunks clear bitmap bits; slots are never
//! reused, keeping TIDs stable. At freeze time bitmap deletions are
//! converted into invalidation ranges and the bitmap reads fully set.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use parking_lot::Mutex;

use crate::engine::EngineShared;
use crate::observer::{ChunkObsState, Temperature};
use crate::storage::vector::Vector;
use crate::value::Schema;

#[derive(Debug)]
pub struct Chunk {
    index: usize,
    capacity: usize,
    /// Slots appended so far; monotone, only the partition writer advances it.
    count: AtomicU64,
    /// One bit per slot; set at append, cleared by hot/cooling deletes.
    bitmap: Box<[AtomicU64]>,
    frozen: AtomicBool,
    vectors: Vec<Vector>,
    obs: Mutex<ChunkObsState>,
    /// Maintenance pass that last persisted this chunk (0 = never).
    persist_epoch: AtomicU64,
    /// Content fingerprint taken at freeze commit; immutability audits
    /// recompute and compare.
    frozen_fingerprint: AtomicU64,
}

impl Chunk {
    pub fn new(index: usize, schema: &Schema, shared: &EngineShared) -> Self {
        let capacity = shared.cfg.chunk_capacity;
        let eager = shared.cfg.eager_string_compression;
        let vectors = (0..schema.attr_count())
            .map(|a| {
                let ty = schema.attr_type(a);
                Vector::new_hot(ty.slot_width(), capacity, eager && ty.is_string(), shared)
            })
            .collect();
        Self {
            index,
            capacity,
            count: AtomicU64::new(0),
            bitmap: (0..capacity.div_ceil(64)).map(|_| AtomicU64::new(0)).collect(),
            frozen: AtomicBool::new(false),
            vectors,
            obs: Mutex::new(ChunkObsState::default()),
            persist_epoch: AtomicU64::new(0),
            frozen_fingerprint: AtomicU64::new(0),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn base_tid(&self) -> u64 {
        self.index as u64 * self.capacity as u64
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::Acquire) as usize
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.capacity
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen.load(Ordering::Acquire)
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn vector(&self, attr: usize) -> &Vector {
        &self.vectors[attr]
    }

    pub fn obs_state(&self) -> &Mutex<ChunkObsState> {
        &self.obs
    }

    /// Warmest vector state.
    pub fn temperature(&self) -> Temperature {
        self.vectors.iter().map(|v| v.temperature()).max().unwrap_or(Temperature::Hot)
    }

    pub fn set_temperature(&self, t: Temperature) {
        for v in &self.vectors {
            v.set_temperature(t);
        }
    }

    /// Advance the append cursor after the writer has filled slot `count`.
    pub fn bump_count(&self) {
        self.count.fetch_add(1, Ordering::Release);
    }

    pub fn slot_bit(&self, slot: usize) -> bool {
        self.bitmap[slot / 64].load(Ordering::Acquire) & (1 << (slot % 64)) != 0
    }

    pub fn set_slot_bit(&self, slot: usize) {
        self.bitmap[slot / 64].fetch_or(1 << (slot % 64), Ordering::Release);
    }

    /// Clear a validity bit; returns whether it was set.
    pub fn clear_slot_bit(&self, slot: usize) -> bool {
        let mask = 1u64 << (slot % 64);
        self.bitmap[slot / 64].fetch_and(!mask, Ordering::AcqRel) & mask != 0
    }

    /// Slot offsets whose bits are clear among the appended slots.
    pub fn deleted_slots(&self) -> Vec<usize> {
        let count = self.count();
        (0..count).filter(|&s| !self.slot_bit(s)).collect()
    }

    /// Copy of the bitmap words (snapshot capture).
    pub fn bitmap_words(&self) -> Box<[u64]> {
        self.bitmap.iter().map(|w| w.load(Ordering::Acquire)).collect()
    }

    /// Freeze commit: every slot reads valid again; invalidation ranges take
    /// over the deletion record.
    pub fn fill_bitmap(&self) {
        for w in self.bitmap.iter() {
            w.store(u64::MAX, Ordering::Release);
        }
    }

    pub fn mark_frozen(&self, fingerprint: u64) {
        self.frozen_fingerprint.store(fingerprint, Ordering::Release);
        self.frozen.store(true, Ordering::Release);
        self.set_temperature(Temperature::Frozen);
    }

    pub fn frozen_fingerprint(&self) -> u64 {
        self.frozen_fingerprint.load(Ordering::Acquire)
    }

    /// Recompute the fingerprint over all vector pages (frozen chunks only).
    pub fn current_fingerprint(&self) -> u64 {
        let mut acc = 0u64;
        for v in &self.vectors {
            acc = acc.rotate_left(13) ^ v.data().pages().fingerprint();
        }
        acc
    }

    pub fn persist_epoch(&self) -> u64 {
        self.persist_epoch.load(Ordering::Acquire)
    }

    pub fn set_persist_epoch(&self, e: u64) {
        self.persist_epoch.store(e, Ordering::Release);
    }

    pub fn descriptor_count(&self) -> usize {
        self.vectors.iter().map(|v| v.descriptor_count()).sum()
    }
}

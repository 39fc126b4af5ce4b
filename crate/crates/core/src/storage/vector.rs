//! One attribute's storage within one chunk.
//!
//! A vector owns a page table and a representation tag. Hot vectors are
//! uncompressed fixed-width slots; frozen vectors hold dictionary keys,
//! position-based runs, or plain slots moved onto huge pages. Each vector
//! also carries its temperature and the observer's page-granular access
//! bits (read, write, and a separate dirty channel consumed by freeze
//! tasks so that cycle reports lose nothing).

use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};

use parking_lot::RwLock;

use crate::codec::dictionary::DictKey;
use crate::engine::EngineShared;
use crate::observer::Temperature;
use crate::page::{PageClass, PageTable};

/// Page-granular access bits, set with a wait-free `fetch_or`. `take`
/// swaps words to zero, so no access can be lost or double-counted across
/// a cycle boundary. Writers mark a page *after* storing its bytes
/// (release) and consumers re-read after observing the mark (acquire), so
/// a collected dirty bit always implies visible bytes — the ordering the
/// optimistic freeze protocol rests on.
#[derive(Debug)]
pub struct AccessBits {
    words: Box<[AtomicU64]>,
}

impl AccessBits {
    pub fn new(pages: usize) -> Self {
        Self { words: (0..pages.div_ceil(64)).map(|_| AtomicU64::new(0)).collect() }
    }

    pub fn set(&self, page: usize) {
        self.words[page / 64].fetch_or(1 << (page % 64), Ordering::Release);
    }

    /// Read and reset, returning the set page indices in ascending order.
    pub fn take(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (w, word) in self.words.iter().enumerate() {
            let mut bits = word.swap(0, Ordering::AcqRel);
            while bits != 0 {
                let b = bits.trailing_zeros();
                out.push(w as u32 * 64 + b);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|w| w.load(Ordering::Acquire) != 0)
    }

    pub fn clear(&self) {
        for w in &self.words {
            w.store(0, Ordering::Release);
        }
    }
}

/// Physical representation of a vector's values.
#[derive(Debug, Clone)]
pub enum VectorData {
    /// Fixed-width uncompressed slots.
    Plain { pages: PageTable },
    /// One 4-byte dictionary key per slot.
    DictKeys { pages: PageTable },
    /// Position-based runs: `runs` exclusive-end u64 positions followed by
    /// `runs` values of `value_width` bytes. `keys` marks dictionary keys.
    Rle { pages: PageTable, runs: usize, value_width: usize, keys: bool },
}

/// Outcome of reading one logical slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// Raw value bytes were placed in the caller's scratch buffer.
    Bytes,
    /// The slot holds a dictionary key.
    Key(DictKey),
}

impl VectorData {
    pub fn pages(&self) -> &PageTable {
        match self {
            VectorData::Plain { pages }
            | VectorData::DictKeys { pages }
            | VectorData::Rle { pages, .. } => pages,
        }
    }

    pub fn pages_mut(&mut self) -> &mut PageTable {
        match self {
            VectorData::Plain { pages }
            | VectorData::DictKeys { pages }
            | VectorData::Rle { pages, .. } => pages,
        }
    }

    pub fn is_plain(&self) -> bool {
        matches!(self, VectorData::Plain { .. })
    }

    pub fn repr_name(&self) -> &'static str {
        match self {
            VectorData::Plain { .. } => "plain",
            VectorData::DictKeys { .. } => "dict",
            VectorData::Rle { .. } => "rle",
        }
    }

    /// Byte span of one logical slot in this representation, if slots are
    /// directly addressable (not run-encoded).
    fn slot_span(&self, slot: usize, width: usize) -> Option<(usize, usize)> {
        match self {
            VectorData::Plain { .. } => Some((slot * width, width)),
            VectorData::DictKeys { .. } => Some((slot * 4, 4)),
            VectorData::Rle { .. } => None,
        }
    }

    /// Read the logical slot. Plain slots copy `width` bytes into `scratch`;
    /// dictionary representations return the key. Returns the inclusive page
    /// range touched, for access recording.
    pub fn read_cell(&self, slot: usize, width: usize, scratch: &mut Vec<u8>) -> (Cell, (usize, usize)) {
        match self {
            VectorData::Plain { pages } => {
                let off = slot * width;
                scratch.resize(width, 0);
                pages.read(off, scratch);
                (Cell::Bytes, pages.pages_touched(off, width))
            }
            VectorData::DictKeys { pages } => {
                let off = slot * 4;
                let mut k = [0u8; 4];
                pages.read(off, &mut k);
                (Cell::Key(DictKey::from_le_bytes(k)), pages.pages_touched(off, 4))
            }
            VectorData::Rle { pages, runs, value_width, keys } => {
                let run = self.rle_run_of(slot as u64).expect("slot within encoded range");
                let off = runs * 8 + run * value_width;
                if *keys {
                    let mut k = [0u8; 4];
                    pages.read(off, &mut k);
                    (Cell::Key(DictKey::from_le_bytes(k)), pages.pages_touched(off, 4))
                } else {
                    scratch.resize(*value_width, 0);
                    pages.read(off, scratch);
                    (Cell::Bytes, pages.pages_touched(off, *value_width))
                }
            }
        }
    }

    /// Binary search for the run covering a logical index.
    pub fn rle_run_of(&self, index: u64) -> Option<usize> {
        let VectorData::Rle { pages, runs, .. } = self else {
            return None;
        };
        let position = |i: usize| -> u64 {
            let mut b = [0u8; 8];
            pages.read(i * 8, &mut b);
            u64::from_le_bytes(b)
        };
        if *runs == 0 || index >= position(runs - 1) {
            return None;
        }
        let mut lo = 0usize;
        let mut hi = *runs;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if position(mid) > index {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }
}

#[derive(Debug)]
pub struct Vector {
    /// Uncompressed slot width in bytes.
    width: usize,
    capacity: usize,
    data: RwLock<VectorData>,
    temp: AtomicU8,
    read_bits: AccessBits,
    write_bits: AccessBits,
    /// Write tracking armed by an in-flight freeze task; fed by the same
    /// notifications as `write_bits` but consumed independently.
    freeze_dirty: AccessBits,
}

impl Vector {
    /// A fresh hot vector. In eager compression mode, string vectors start
    /// as mutable key vectors instead of raw slots.
    pub fn new_hot(width: usize, capacity: usize, eager_keys: bool, shared: &EngineShared) -> Self {
        let epoch = shared.epoch.load(Ordering::SeqCst);
        let bytes = if eager_keys { 4 * capacity } else { width * capacity };
        let pages = PageTable::alloc(bytes, shared.cfg.page_size, PageClass::Regular, epoch, &shared.census);
        // Bit arrays cover the largest representation this vector can take.
        let max_bytes = bytes.max(4 * capacity).max(width * capacity);
        let page_slots = max_bytes.div_ceil(shared.cfg.page_size);
        let data =
            if eager_keys { VectorData::DictKeys { pages } } else { VectorData::Plain { pages } };
        Self {
            width,
            capacity,
            data: RwLock::new(data),
            temp: AtomicU8::new(Temperature::Hot as u8),
            read_bits: AccessBits::new(page_slots),
            write_bits: AccessBits::new(page_slots),
            freeze_dirty: AccessBits::new(page_slots),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn temperature(&self) -> Temperature {
        Temperature::from_u8(self.temp.load(Ordering::Acquire))
    }

    pub fn set_temperature(&self, t: Temperature) {
        self.temp.store(t as u8, Ordering::Release);
    }

    pub fn data(&self) -> parking_lot::RwLockReadGuard<'_, VectorData> {
        self.data.read()
    }

    /// Clone the current representation (descriptor table only; buffers are
    /// shared). Freeze tasks read through such clones without holding locks.
    pub fn clone_data(&self) -> VectorData {
        self.data.read().clone()
    }

    /// Install a new representation (freeze commit / abort path). Caller
    /// holds the partition writer lock.
    pub fn swap_data(&self, new: VectorData) -> VectorData {
        std::mem::replace(&mut *self.data.write(), new)
    }

    pub fn logical_bytes(&self) -> usize {
        self.data.read().pages().total_bytes()
    }

    pub fn descriptor_count(&self) -> usize {
        self.data.read().pages().page_count()
    }

    /// Page count of the plain (uncompressed) representation; the fraction
    /// denominator for cooling classification.
    pub fn plain_page_count(&self, page_size: usize) -> usize {
        (self.width * self.capacity).div_ceil(page_size)
    }

    /// Record an OLTP read covering `[offset, offset+len)` of the current
    /// representation.
    pub fn note_read_span(&self, first_page: usize, last_page: usize) {
        for p in first_page..=last_page {
            self.read_bits.set(p);
        }
    }

    /// Record an OLTP write; feeds both the cycle channel and the freeze
    /// dirty channel.
    pub fn note_write_span(&self, first_page: usize, last_page: usize) {
        for p in first_page..=last_page {
            self.write_bits.set(p);
            self.freeze_dirty.set(p);
        }
    }

    /// Record a read at a byte offset (page derived from the current
    /// representation's page size).
    pub fn note_read_at(&self, offset: usize) {
        let page = offset / self.data.read().pages().page_bytes();
        self.read_bits.set(page);
    }

    pub fn note_write_at(&self, offset: usize) {
        let page = offset / self.data.read().pages().page_bytes();
        self.write_bits.set(page);
        self.freeze_dirty.set(page);
    }

    /// Read-and-reset both cycle channels.
    pub fn take_cycle_sets(&self) -> (Vec<u32>, Vec<u32>) {
        (self.read_bits.take(), self.write_bits.take())
    }

    pub fn arm_freeze_tracking(&self) {
        self.freeze_dirty.clear();
    }

    pub fn take_freeze_dirty(&self) -> Vec<u32> {
        self.freeze_dirty.take()
    }

    pub fn freeze_dirty_pending(&self) -> bool {
        self.freeze_dirty.any()
    }

    /// Read one slot and record the OLTP read access.
    pub fn read_slot_noted(&self, slot: usize, scratch: &mut Vec<u8>) -> Cell {
        let data = self.data.read();
        let (cell, (p0, p1)) = data.read_cell(slot, self.width, scratch);
        drop(data);
        self.note_read_span(p0, p1);
        cell
    }

    /// Read one slot without recording anything (maintenance, comparators,
    /// snapshot-independent internals).
    pub fn read_slot_quiet(&self, slot: usize, scratch: &mut Vec<u8>) -> Cell {
        self.data.read().read_cell(slot, self.width, scratch).0
    }

    /// Write raw slot bytes (plain representation) with copy-on-write and
    /// access recording. Caller is the partition writer.
    pub fn write_slot(&self, slot: usize, bytes: &[u8], shared: &EngineShared) {
        debug_assert_eq!(bytes.len(), self.width);
        let (p0, p1) = self.write_repr(slot, bytes, shared, false);
        self.note_write_span(p0, p1);
    }

    /// Write a dictionary key (mutable key vector, eager mode).
    pub fn write_key(&self, slot: usize, key: DictKey, shared: &EngineShared) {
        let (p0, p1) = self.write_repr(slot, &key.to_le_bytes(), shared, true);
        self.note_write_span(p0, p1);
    }

    fn write_repr(&self, slot: usize, bytes: &[u8], shared: &EngineShared, expect_keys: bool) -> (usize, usize) {
        let data = self.data.read();
        match (&*data, expect_keys) {
            (VectorData::Plain { .. }, false) | (VectorData::DictKeys { .. }, true) => {}
            _ => panic!("write against frozen or mismatched representation"),
        }
        let (off, len) = data.slot_span(slot, self.width).expect("addressable representation");
        let pages = data.pages();
        let (p0, p1) = pages.pages_touched(off, len);
        let max_live = shared.max_live_snapshot.load(Ordering::SeqCst);
        let shared_page = max_live != 0
            && (p0..=p1).any(|p| pages.descriptor(p).epoch < max_live);
        if !shared_page {
            pages.write(off, bytes);
            return (p0, p1);
        }
        drop(data);
        let mut data = self.data.write();
        let epoch = shared.epoch.load(Ordering::SeqCst);
        let table = data.pages_mut();
        for p in p0..=p1 {
            let desc = table.descriptor(p);
            assert!(desc.class == PageClass::Regular, "copy-on-write on a huge page");
            if desc.epoch < max_live {
                let copy = desc.buf.duplicate();
                shared.record_page_replication(desc.epoch);
                table.replace_descriptor(
                    p,
                    crate::page::PageDescriptor { buf: copy, epoch, class: PageClass::Regular },
                );
            }
        }
        table.write(off, bytes);
        (p0, p1)
    }
}

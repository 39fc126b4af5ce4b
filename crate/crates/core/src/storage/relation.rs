//! A relation: schema, partitions and the shared per-attribute
//! dictionaries. All tuple lifecycle operations live here and dispatch on
//! chunk temperature — hot tuples mutate in place, cooling tuples relocate
//! to the insertion head, cold and frozen tuples are invalidated
//! out-of-place and their replacement appended hot.

use std::sync::atomic::Ordering;
use std::sync::Arc;

use crate::codec::dictionary::{Dictionary, DEAD_SLOT_KEY};
use crate::engine::EngineShared;
use crate::error::{Error, Result};
use crate::index::{TidIndex, ValueSource};
use crate::observer::Temperature;
use crate::page::fnv1a;
use crate::storage::chunk::Chunk;
use crate::storage::partition::{compute_valid_runs, Partition};
use crate::storage::tid::Tid;
use crate::storage::vector::Cell;
use crate::value::{Schema, Value};

pub struct Relation {
    id: usize,
    name: String,
    schema: Schema,
    partitions: Vec<Partition>,
    /// One dictionary per string attribute, shared across all partitions.
    dicts: Vec<Option<Arc<Dictionary>>>,
    shared: Arc<EngineShared>,
}

impl Relation {
    pub(crate) fn new(
        id: usize,
        name: String,
        schema: Schema,
        partition_count: usize,
        ordered_pool: Option<&[String]>,
        shared: Arc<EngineShared>,
    ) -> Result<Self> {
        if partition_count == 0 {
            return Err(Error::InvalidPartitionCount);
        }
        let dicts = (0..schema.attr_count())
            .map(|a| {
                schema.attr_type(a).is_string().then(|| {
                    Arc::new(match ordered_pool {
                        Some(pool) => Dictionary::seeded_sorted(pool.iter().cloned()),
                        None => Dictionary::new(),
                    })
                })
            })
            .collect();
        let partitions =
            (0..partition_count).map(|p| Partition::new(p, schema.attr_count())).collect();
        Ok(Self { id, name, schema, partitions, dicts, shared })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn dictionary(&self, attr: usize) -> Option<&Arc<Dictionary>> {
        self.dicts[attr].as_ref()
    }

    pub(crate) fn shared(&self) -> &Arc<EngineShared> {
        &self.shared
    }

    pub fn partition(&self, p: usize) -> Result<&Partition> {
        self.partitions.get(p).ok_or(Error::UnknownPartition(p))
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    fn capacity(&self) -> usize {
        self.shared.cfg.chunk_capacity
    }

    fn locate(&self, part: &Partition, tid: Tid) -> Result<(Arc<Chunk>, usize)> {
        let chunk = part
            .chunk(tid.chunk(self.capacity()))
            .ok_or(Error::TupleNotFound(tid))?;
        let slot = tid.offset(self.capacity());
        if slot >= chunk.count() {
            return Err(Error::TupleNotFound(tid));
        }
        Ok((chunk, slot))
    }

    /// A located slot is live when its bitmap bit is set (non-frozen chunks)
    /// and it is not covered by an invalidation range.
    fn is_live(&self, part: &Partition, chunk: &Chunk, slot: usize, tid: Tid) -> bool {
        (chunk.is_frozen() || chunk.slot_bit(slot)) && !part.invalid.read().contains(tid)
    }

    fn require_live(&self, part: &Partition, chunk: &Chunk, slot: usize, tid: Tid) -> Result<()> {
        if self.is_live(part, chunk, slot, tid) {
            Ok(())
        } else {
            Err(Error::AlreadyInvalid(tid))
        }
    }

    /// Decode one slot of one attribute. `noted` records the OLTP read.
    fn read_value_at(&self, chunk: &Chunk, attr: usize, slot: usize, noted: bool) -> Result<Value> {
        let ty = self.schema.attr_type(attr);
        let mut scratch = Vec::new();
        let vector = chunk.vector(attr);
        let cell = if noted {
            vector.read_slot_noted(slot, &mut scratch)
        } else {
            vector.read_slot_quiet(slot, &mut scratch)
        };
        match cell {
            Cell::Bytes => Ok(Value::decode_slot(ty, &scratch)),
            Cell::Key(k) => {
                assert_ne!(k, DEAD_SLOT_KEY, "live slot resolved to a dead dictionary slot");
                let dict = self.dicts[attr].as_ref().expect("key cell implies a dictionary");
                Ok(Value::Str(dict.value_of(k)?))
            }
        }
    }

    /// Validity-ignoring value resolution (index comparators).
    pub(crate) fn raw_value(&self, p: usize, tid: Tid, attr: usize) -> Value {
        let part = &self.partitions[p];
        let (chunk, slot) = self.locate(part, tid).expect("raw read of an unassigned TID");
        self.read_value_at(&chunk, attr, slot, false).expect("raw read failed")
    }

    /// Append a validated tuple to the partition's insertion chunk,
    /// creating a fresh hot chunk when the last one is full, frozen or no
    /// longer hot. Caller holds the writer lock; primary-key and secondary
    /// index maintenance stay with the caller.
    fn append_tuple(&self, part: &Partition, tuple: &[Value]) -> Tid {
        let chunk = {
            let chunks = part.chunks.read();
            match chunks.last() {
                Some(c)
                    if !c.is_full()
                        && !c.is_frozen()
                        && c.temperature() == Temperature::Hot =>
                {
                    c.clone()
                }
                _ => {
                    let index = chunks.len();
                    drop(chunks);
                    let fresh = Arc::new(Chunk::new(index, &self.schema, &self.shared));
                    part.chunks.write().push(fresh.clone());
                    fresh
                }
            }
        };
        let slot = chunk.count();
        let tid = Tid::new(chunk.index(), slot, self.capacity());
        let mut buf = Vec::new();
        for (attr, value) in tuple.iter().enumerate() {
            let vector = chunk.vector(attr);
            match (self.shared.cfg.eager_string_compression, value) {
                (true, Value::Str(s)) => {
                    let key = self.dicts[attr].as_ref().expect("string attribute").intern(s);
                    vector.write_key(slot, key, &self.shared);
                }
                _ => {
                    let ty = self.schema.attr_type(attr);
                    buf.resize(ty.slot_width(), 0);
                    value.encode_slot(ty, &mut buf);
                    vector.write_slot(slot, &buf, &self.shared);
                }
            }
        }
        chunk.set_slot_bit(slot);
        chunk.bump_count();
        tid
    }

    pub fn insert(&self, p: usize, tuple: &[Value]) -> Result<Tid> {
        self.schema.check_tuple(tuple)?;
        let part = self.partition(p)?;
        let _w = part.writer.lock();
        let key = self.schema.pk_of(tuple);
        if part.pk.read().contains_key(&key) {
            return Err(Error::DuplicateKey);
        }
        let tid = self.append_tuple(part, tuple);
        part.pk.write().insert(key, tid);
        self.index_insert_all(part, tid);
        self.shared.counters.inserts.fetch_add(1, Ordering::Relaxed);
        Ok(tid)
    }

    pub fn point_read(&self, p: usize, tid: Tid, attr: usize) -> Result<Value> {
        if attr >= self.schema.attr_count() {
            return Err(Error::UnknownAttribute(format!("#{attr}")));
        }
        let part = self.partition(p)?;
        let _w = part.writer.lock();
        let (chunk, slot) = self.locate(part, tid)?;
        if !self.is_live(part, &chunk, slot, tid) {
            return Err(Error::TupleNotFound(tid));
        }
        self.read_value_at(&chunk, attr, slot, true)
    }

    /// Full tuple read through the OLTP path.
    pub fn read_tuple(&self, p: usize, tid: Tid) -> Result<Vec<Value>> {
        let part = self.partition(p)?;
        let _w = part.writer.lock();
        let (chunk, slot) = self.locate(part, tid)?;
        if !self.is_live(part, &chunk, slot, tid) {
            return Err(Error::TupleNotFound(tid));
        }
        (0..self.schema.attr_count())
            .map(|a| self.read_value_at(&chunk, a, slot, true))
            .collect()
    }

    pub fn update(&self, p: usize, tid: Tid, attr: usize, value: Value) -> Result<Tid> {
        if attr >= self.schema.attr_count() {
            return Err(Error::UnknownAttribute(format!("#{attr}")));
        }
        self.schema.check_value(attr, &value)?;
        let part = self.partition(p)?;
        let _w = part.writer.lock();
        let (chunk, slot) = self.locate(part, tid)?;
        self.require_live(part, &chunk, slot, tid)?;
        match chunk.temperature() {
            Temperature::Hot => {
                self.update_in_place(part, &chunk, slot, tid, attr, value)?;
                Ok(tid)
            }
            _ => self.relocate_locked(part, &chunk, slot, tid, Some((attr, value))),
        }
    }

    fn update_in_place(
        &self,
        part: &Partition,
        chunk: &Chunk,
        slot: usize,
        tid: Tid,
        attr: usize,
        value: Value,
    ) -> Result<()> {
        // Primary-key updates rewrite the pk entry; duplicate check first.
        let pk_change = if self.schema.primary_key().contains(&attr) {
            let old_key: Box<[Value]> = self
                .schema
                .primary_key()
                .iter()
                .map(|&a| self.read_value_at(chunk, a, slot, false))
                .collect::<Result<_>>()?;
            let mut new_key = old_key.clone();
            new_key[self.schema.primary_key().iter().position(|&a| a == attr).unwrap()] =
                value.clone();
            if new_key != old_key {
                if part.pk.read().contains_key(&new_key) {
                    return Err(Error::DuplicateKey);
                }
                Some((old_key, new_key))
            } else {
                None
            }
        } else {
            None
        };
        let indexed = part.indexes[attr].read().is_some();
        if indexed {
            self.index_remove(part, attr, tid)?;
        }
        let vector = chunk.vector(attr);
        match (&value, self.shared.cfg.eager_string_compression) {
            (Value::Str(s), true) => {
                let dict = self.dicts[attr].as_ref().expect("string attribute");
                let mut scratch = Vec::new();
                if let Cell::Key(old) = vector.read_slot_quiet(slot, &mut scratch) {
                    dict.release(old)?;
                }
                let key = dict.intern(s);
                vector.write_key(slot, key, &self.shared);
            }
            _ => {
                let ty = self.schema.attr_type(attr);
                let mut buf = vec![0u8; ty.slot_width()];
                value.encode_slot(ty, &mut buf);
                vector.write_slot(slot, &buf, &self.shared);
            }
        }
        if indexed {
            let mut guard = part.indexes[attr].write();
            let idx = guard.as_mut().unwrap();
            idx.insert(tid, &Resolver { relation: self, partition: part.id(), attr })
                .expect("re-inserting an updated index entry");
        }
        if let Some((old_key, new_key)) = pk_change {
            let mut pk = part.pk.write();
            pk.remove(&old_key);
            pk.insert(new_key, tid);
        }
        self.shared.counters.in_place_updates.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Move a live tuple out of a cooling/cold/frozen chunk into the
    /// insertion head, optionally replacing one attribute on the way. The
    /// origin is bitmap-deleted (cooling) or invalidated (cold/frozen);
    /// primary-key and secondary indexes are repointed to the fresh TID.
    fn relocate_locked(
        &self,
        part: &Partition,
        chunk: &Chunk,
        slot: usize,
        tid: Tid,
        replace: Option<(usize, Value)>,
    ) -> Result<Tid> {
        let mut tuple: Vec<Value> = (0..self.schema.attr_count())
            .map(|a| self.read_value_at(chunk, a, slot, true))
            .collect::<Result<_>>()?;
        let old_key = self.schema.pk_of(&tuple);
        if let Some((attr, v)) = replace {
            tuple[attr] = v;
        }
        let new_key = self.schema.pk_of(&tuple);
        if new_key != old_key && part.pk.read().contains_key(&new_key) {
            return Err(Error::DuplicateKey);
        }
        match chunk.temperature() {
            Temperature::Cooling => {
                chunk.clear_slot_bit(slot);
                self.release_eager_keys(chunk, slot);
            }
            Temperature::Cold | Temperature::Frozen => {
                // Out-of-place: frozen bytes stay untouched, the range list
                // hides the stale version. Dictionary references of
                // invalidated frozen slots are retained with the chunk.
                part.invalid.write().insert(tid.0, tid.0);
                self.shared.counters.invalidations.fetch_add(1, Ordering::Relaxed);
            }
            Temperature::Hot => unreachable!("relocation never starts from a hot chunk"),
        }
        let new_tid = self.append_tuple(part, &tuple);
        {
            let mut pk = part.pk.write();
            pk.remove(&old_key);
            pk.insert(new_key, new_tid);
        }
        for attr in 0..self.schema.attr_count() {
            if part.indexes[attr].read().is_some() {
                self.index_remove(part, attr, tid)?;
                let mut guard = part.indexes[attr].write();
                guard
                    .as_mut()
                    .unwrap()
                    .insert(new_tid, &Resolver { relation: self, partition: part.id(), attr })
                    .expect("relocated index entry");
            }
        }
        self.shared.counters.relocations.fetch_add(1, Ordering::Relaxed);
        Ok(new_tid)
    }

    /// Relocation of an unmodified tuple (maintenance / cooling access path).
    pub fn relocate_tuple(&self, p: usize, tid: Tid) -> Result<Tid> {
        let part = self.partition(p)?;
        let _w = part.writer.lock();
        let (chunk, slot) = self.locate(part, tid)?;
        self.require_live(part, &chunk, slot, tid)?;
        if chunk.temperature() == Temperature::Hot {
            return Err(Error::FreezeIneligible {
                chunk: chunk.index(),
                reason: "relocation source must be cooling, cold or frozen".into(),
            });
        }
        self.relocate_locked(part, &chunk, slot, tid, None)
    }

    pub fn delete(&self, p: usize, tid: Tid) -> Result<()> {
        let part = self.partition(p)?;
        let _w = part.writer.lock();
        let (chunk, slot) = self.locate(part, tid)?;
        self.require_live(part, &chunk, slot, tid)?;
        let key: Box<[Value]> = self
            .schema
            .primary_key()
            .iter()
            .map(|&a| self.read_value_at(&chunk, a, slot, false))
            .collect::<Result<_>>()?;
        match chunk.temperature() {
            Temperature::Hot | Temperature::Cooling => {
                chunk.clear_slot_bit(slot);
                self.release_eager_keys(&chunk, slot);
            }
            Temperature::Cold | Temperature::Frozen => {
                part.invalid.write().insert(tid.0, tid.0);
                self.shared.counters.invalidations.fetch_add(1, Ordering::Relaxed);
            }
        }
        part.pk.write().remove(&key);
        for attr in 0..self.schema.attr_count() {
            if part.indexes[attr].read().is_some() {
                self.index_remove(part, attr, tid)?;
            }
        }
        self.shared.counters.deletes.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// In eager mode a bitmap-deleted slot gives up its dictionary
    /// references immediately; invalidated cold/frozen slots keep theirs.
    fn release_eager_keys(&self, chunk: &Chunk, slot: usize) {
        if !self.shared.cfg.eager_string_compression {
            return;
        }
        let mut scratch = Vec::new();
        for attr in 0..self.schema.attr_count() {
            if let Some(dict) = &self.dicts[attr] {
                if let Cell::Key(k) = chunk.vector(attr).read_slot_quiet(slot, &mut scratch) {
                    if k != DEAD_SLOT_KEY {
                        dict.release(k).expect("eager slot key is live");
                    }
                }
            }
        }
    }

    /// Record an inclusive TID range as invalid. Structural operation:
    /// merging is handled by the range list, re-invalidation is a no-op,
    /// and primary-key/secondary-index maintenance stays with callers that
    /// know the tuples involved.
    pub fn invalidate_range(&self, p: usize, begin: u64, end: u64) -> Result<()> {
        let part = self.partition(p)?;
        let _w = part.writer.lock();
        part.invalid.write().insert(begin, end);
        self.shared.counters.invalidations.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Maximal contiguous spans of valid TIDs within one chunk, ascending.
    pub fn valid_runs(&self, p: usize, chunk_index: usize) -> Result<Vec<(Tid, Tid)>> {
        let part = self.partition(p)?;
        let chunk = part.chunk(chunk_index).ok_or(Error::UnknownChunk(chunk_index))?;
        let bitmap = (!chunk.is_frozen()).then(|| chunk.bitmap_words());
        let invalid = part.invalid.read();
        Ok(compute_valid_runs(chunk.base_tid(), chunk.count() as u64, bitmap.as_deref(), &invalid)
            .into_iter()
            .map(|(b, e)| (Tid(b), Tid(e)))
            .collect())
    }

    pub fn pk_lookup(&self, p: usize, key: &[Value]) -> Result<Option<Tid>> {
        let part = self.partition(p)?;
        Ok(part.pk.read().get(key).copied())
    }

    // ---- secondary indexes ----

    pub fn create_index(&self, attr_name: &str) -> Result<()> {
        let attr = self
            .schema
            .attr_index(attr_name)
            .ok_or_else(|| Error::UnknownAttribute(attr_name.into()))?;
        for part in &self.partitions {
            let _w = part.writer.lock();
            let mut idx = TidIndex::new();
            let resolver = Resolver { relation: self, partition: part.id(), attr };
            for chunk_index in 0..part.chunk_count() {
                for (b, e) in self.valid_runs(part.id(), chunk_index)? {
                    for t in b.0..=e.0 {
                        idx.insert(Tid(t), &resolver)?;
                    }
                }
            }
            *part.indexes[attr].write() = Some(idx);
        }
        Ok(())
    }

    pub fn has_index(&self, attr: usize) -> bool {
        self.partitions.iter().all(|p| p.indexes[attr].read().is_some())
    }

    fn index_remove(&self, part: &Partition, attr: usize, tid: Tid) -> Result<()> {
        let mut guard = part.indexes[attr].write();
        let idx = guard.as_mut().ok_or_else(|| {
            Error::IndexMissing(self.schema.attr(attr).0.to_string())
        })?;
        idx.remove(tid, &Resolver { relation: self, partition: part.id(), attr })?;
        part.index_removal_epoch
            .store(self.shared.epoch.load(Ordering::SeqCst), Ordering::SeqCst);
        Ok(())
    }

    fn index_insert_all(&self, part: &Partition, tid: Tid) {
        for attr in 0..self.schema.attr_count() {
            let mut guard = part.indexes[attr].write();
            if let Some(idx) = guard.as_mut() {
                idx.insert(tid, &Resolver { relation: self, partition: part.id(), attr })
                    .expect("fresh TID is absent from the index");
            }
        }
    }

    /// Inclusive value-range lookup through the live index.
    pub fn index_range_lookup(&self, p: usize, attr: usize, low: &Value, high: &Value) -> Result<Vec<Tid>> {
        let part = self.partition(p)?;
        if low.cmp_same_type(high) == std::cmp::Ordering::Greater {
            return Ok(Vec::new());
        }
        let guard = part.indexes[attr].read();
        let idx = guard
            .as_ref()
            .ok_or_else(|| Error::IndexMissing(self.schema.attr(attr).0.to_string()))?;
        Ok(idx.range(low, std::ops::Bound::Included(high), &Resolver {
            relation: self,
            partition: p,
            attr,
        }))
    }

    pub fn index_prefix_lookup(&self, p: usize, attr: usize, prefix: &str) -> Result<Vec<Tid>> {
        if prefix.is_empty() {
            return Err(Error::Config("prefix lookups need a non-empty prefix".into()));
        }
        let part = self.partition(p)?;
        let guard = part.indexes[attr].read();
        let idx = guard
            .as_ref()
            .ok_or_else(|| Error::IndexMissing(self.schema.attr(attr).0.to_string()))?;
        Ok(idx.prefix(prefix, &Resolver { relation: self, partition: p, attr }))
    }

    pub fn index_bytes_per_entry(&self, p: usize, attr: usize) -> Result<f64> {
        let part = self.partition(p)?;
        let guard = part.indexes[attr].read();
        let idx = guard
            .as_ref()
            .ok_or_else(|| Error::IndexMissing(self.schema.attr(attr).0.to_string()))?;
        Ok(idx.bytes_per_entry())
    }

    // ---- accounting ----

    /// Per-attribute and relation-total memory accounting. The plain side
    /// prices every chunk at its uncompressed slot width; the actual side
    /// prices current representations plus dictionary bytes. Row-independent
    /// structures (primary-key index, bitmaps, range lists, secondary
    /// indexes) count identically on both sides.
    pub fn memory_report(&self) -> MemoryReport {
        let mut attrs: Vec<AttrMemory> = (0..self.schema.attr_count())
            .map(|a| AttrMemory {
                name: self.schema.attr(a).0.to_string(),
                plain_bytes: 0,
                actual_bytes: 0,
            })
            .collect();
        let mut metadata = 0u64;
        for part in &self.partitions {
            for chunk in part.chunk_list() {
                for (a, vector) in chunk.vectors().iter().enumerate() {
                    attrs[a].plain_bytes += (vector.width() * vector.capacity()) as u64;
                    attrs[a].actual_bytes += vector.logical_bytes() as u64;
                }
                metadata += (chunk.capacity().div_ceil(64) * 8) as u64;
            }
            metadata += part.pk_index_bytes() as u64;
            metadata += (part.invalid.read().len() * 16) as u64;
            for attr in 0..self.schema.attr_count() {
                if let Some(idx) = part.indexes[attr].read().as_ref() {
                    if !idx.is_empty() {
                        metadata += (idx.bytes_per_entry() * idx.len() as f64) as u64;
                    }
                }
            }
        }
        let dictionary_bytes: u64 =
            self.dicts.iter().flatten().map(|d| d.heap_bytes() as u64).sum();
        let plain_total: u64 = attrs.iter().map(|a| a.plain_bytes).sum::<u64>() + metadata;
        let actual_total: u64 =
            attrs.iter().map(|a| a.actual_bytes).sum::<u64>() + dictionary_bytes + metadata;
        MemoryReport { attrs, dictionary_bytes, metadata_bytes: metadata, plain_total, actual_total }
    }

    /// Descriptor count over all vectors (this relation's share of the
    /// page-table copy cost).
    pub fn descriptor_count(&self) -> u64 {
        self.partitions
            .iter()
            .map(|p| p.chunk_list().iter().map(|c| c.descriptor_count() as u64).sum::<u64>())
            .sum()
    }

    /// Deterministic digest over logical content (pages, bitmaps, counts,
    /// invalidation ranges).
    pub fn digest(&self) -> u64 {
        let mut acc = fnv1a(self.name.as_bytes());
        for part in &self.partitions {
            for chunk in part.chunk_list() {
                acc = acc.rotate_left(11) ^ chunk.count() as u64;
                for w in chunk.bitmap_words().iter() {
                    acc = acc.rotate_left(3) ^ w;
                }
                for v in chunk.vectors() {
                    acc = acc.rotate_left(5) ^ v.data().pages().fingerprint();
                }
            }
            for &(b, e) in part.invalid.read().ranges() {
                acc = acc.rotate_left(9) ^ fnv1a(&b.to_le_bytes()) ^ e;
            }
        }
        acc
    }

    pub fn total_valid_tuples(&self) -> u64 {
        self.partitions.iter().map(|p| p.valid_tuple_count()).sum()
    }

    /// Apply a chunk-level temperature transition under the writer lock.
    pub(crate) fn apply_transition(&self, p: usize, chunk_index: usize, to: Temperature) {
        let part = &self.partitions[p];
        let _w = part.writer.lock();
        if let Some(chunk) = part.chunk(chunk_index) {
            if !chunk.is_frozen() {
                chunk.set_temperature(to);
                self.shared.counters.transitions.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}

/// Value resolution for index comparators: reads through the live storage
/// layer, ignoring validity.
pub(crate) struct Resolver<'a> {
    pub relation: &'a Relation,
    pub partition: usize,
    pub attr: usize,
}

impl ValueSource for Resolver<'_> {
    fn value_at(&self, tid: Tid) -> Value {
        self.relation.raw_value(self.partition, tid, self.attr)
    }
}

#[derive(Debug, Clone)]
pub struct AttrMemory {
    pub name: String,
    pub plain_bytes: u64,
    pub actual_bytes: u64,
}

impl AttrMemory {
    pub fn ratio(&self) -> f64 {
        self.plain_bytes as f64 / self.actual_bytes as f64
    }
}

#[derive(Debug, Clone)]
pub struct MemoryReport {
    pub attrs: Vec<AttrMemory>,
    pub dictionary_bytes: u64,
    pub metadata_bytes: u64,
    pub plain_total: u64,
    pub actual_total: u64,
}

impl MemoryReport {
    pub fn total_ratio(&self) -> f64 {
        self.plain_total as f64 / self.actual_total as f64
    }

    pub fn attr_ratio(&self, name: &str) -> Option<f64> {
        self.attrs.iter().find(|a| a.name == name).map(AttrMemory::ratio)
    }
}

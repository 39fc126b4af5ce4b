//! Scan execution: chunk-wise strategy evaluation over a snapshot view.

use std::collections::HashMap;
use std::collections::HashSet;

use crate::codec::dictionary::{DictKey, DEAD_SLOT_KEY};
use crate::error::{Error, Result};
use crate::query::{Predicate, ScanStrategy};
use crate::snapshot::{ChunkView, DictView, RelationView, SnapshotHandle};
use crate::storage::relation::Relation;
use crate::storage::tid::Tid;
use crate::storage::vector::{Cell, VectorData};
use crate::value::Value;

/// Cursor-style column reader over a captured vector. Plain and key
/// vectors read directly; run-encoded vectors cache the current run so
/// ascending scans advance in O(1) amortized.
pub struct ColReader<'a> {
    data: &'a VectorData,
    width: usize,
    scratch: Vec<u8>,
    /// (first_slot, end_slot_exclusive, cell) of the cached run.
    run: Option<(u64, u64, CachedCell)>,
}

#[derive(Clone)]
enum CachedCell {
    Bytes(Vec<u8>),
    Key(DictKey),
}

impl<'a> ColReader<'a> {
    pub fn new(view: &'a crate::snapshot::VectorView) -> Self {
        Self { data: &view.data, width: view.width, scratch: Vec::new(), run: None }
    }

    pub fn cell(&mut self, slot: u64) -> Cell {
        if let VectorData::Rle { pages, runs, value_width, keys } = self.data {
            if let Some((b, e, cached)) = &self.run {
                if (*b..*e).contains(&slot) {
                    return match cached {
                        CachedCell::Key(k) => Cell::Key(*k),
                        CachedCell::Bytes(bytes) => {
                            self.scratch.clear();
                            self.scratch.extend_from_slice(bytes);
                            Cell::Bytes
                        }
                    };
                }
            }
            let run = self.data.rle_run_of(slot).expect("slot within encoded range");
            let mut pos = [0u8; 8];
            let start = if run == 0 {
                0
            } else {
                pages.read((run - 1) * 8, &mut pos);
                u64::from_le_bytes(pos)
            };
            pages.read(run * 8, &mut pos);
            let end = u64::from_le_bytes(pos);
            let off = runs * 8 + run * value_width;
            if *keys {
                let mut k = [0u8; 4];
                pages.read(off, &mut k);
                let key = DictKey::from_le_bytes(k);
                self.run = Some((start, end, CachedCell::Key(key)));
                Cell::Key(key)
            } else {
                self.scratch.resize(*value_width, 0);
                pages.read(off, &mut self.scratch);
                self.run = Some((start, end, CachedCell::Bytes(self.scratch.clone())));
                Cell::Bytes
            }
        } else {
            self.data.read_cell(slot as usize, self.width, &mut self.scratch).0
        }
    }

    fn value(&mut self, rel: &RelationView, attr: usize, slot: u64) -> Result<Value> {
        let ty = rel.schema.attr_type(attr);
        match self.cell(slot) {
            Cell::Bytes => Ok(Value::decode_slot(ty, &self.scratch)),
            Cell::Key(k) => {
                if k == DEAD_SLOT_KEY {
                    return Err(Error::DeadDictKey(k));
                }
                let dict = rel.dicts[attr].as_ref().expect("key cell implies dictionary");
                Ok(Value::Str(dict.value_of(k)?))
            }
        }
    }
}

/// Per-chunk access context handed to row visitors.
pub struct RowCtx<'a> {
    pub rel: &'a RelationView,
    pub chunk: &'a ChunkView,
    readers: Vec<Option<ColReader<'a>>>,
}

impl<'a> RowCtx<'a> {
    fn new(rel: &'a RelationView, chunk: &'a ChunkView) -> Self {
        let readers = (0..chunk.vectors.len()).map(|_| None).collect();
        Self { rel, chunk, readers }
    }

    /// Decoded value of one attribute at a chunk slot.
    pub fn value(&mut self, attr: usize, slot: u64) -> Result<Value> {
        let reader = self.readers[attr]
            .get_or_insert_with(|| ColReader::new(&self.chunk.vectors[attr]));
        reader.value(self.rel, attr, slot)
    }
}

/// Key-space filter evaluation, applied inside chunks whose filter column
/// is key-coded; plain chunks of the same scan evaluate values directly.
enum Probe {
    KeyEq(Option<DictKey>),
    KeySet(HashSet<DictKey>),
    KeyRange(Option<(DictKey, DictKey)>),
}

impl Probe {
    fn test_key(&self, key: DictKey) -> bool {
        match self {
            Probe::KeyEq(k) => Some(key) == *k,
            Probe::KeySet(set) => set.contains(&key),
            Probe::KeyRange(r) => r.map(|(lo, hi)| (lo..=hi).contains(&key)).unwrap_or(false),
        }
    }

    /// Can any key of a compressed chunk match at all?
    fn can_match(&self) -> bool {
        match self {
            Probe::KeyEq(k) => k.is_some(),
            Probe::KeySet(set) => !set.is_empty(),
            Probe::KeyRange(r) => r.is_some(),
        }
    }
}

fn key_space_probe(
    predicate: &Predicate,
    strategy: ScanStrategy,
    dict: Option<&DictView>,
) -> Result<Option<Probe>> {
    let out = match (strategy, predicate) {
        (ScanStrategy::EqDictProbe, Predicate::Equality { value, .. }) => {
            let key = value.as_str().and_then(|s| dict.and_then(|d| d.key_of(s)));
            Some(Probe::KeyEq(key))
        }
        (ScanStrategy::HashSetProbe, p) => {
            let dict = dict.expect("hash-set probe over a dictionary attribute");
            let keys = dict.collect_matching_keys(|s| p.test(&Value::Str(s.to_string())));
            Some(Probe::KeySet(keys.into_iter().collect()))
        }
        (ScanStrategy::OrderedRange, Predicate::Range { low, high, .. }) => {
            let dict = dict.expect("ordered probe over a dictionary attribute");
            let (low, high) = match (low, high) {
                (Value::Str(l), Value::Str(h)) => (l.as_str(), h.as_str()),
                _ => {
                    return Err(Error::TypeMismatch {
                        attr: "<range>".into(),
                        reason: "ordered-dictionary probes need string bounds".into(),
                    })
                }
            };
            Some(Probe::KeyRange(dict.ordered_key_range(low, Some(high))?))
        }
        (ScanStrategy::OrderedRange, Predicate::Prefix { prefix, .. }) => {
            let dict = dict.expect("ordered probe over a dictionary attribute");
            Some(Probe::KeyRange(dict.ordered_prefix_range(prefix)?))
        }
        _ => None,
    };
    Ok(out)
}

/// Drive `visit` over every row matching the predicate under the given
/// strategy. Visit order is chunk-ascending for chunk strategies and
/// (value, TID) order for the index probe; row multisets are identical.
pub fn for_each_match(
    handle: &SnapshotHandle,
    relation: &Relation,
    predicate: &Predicate,
    strategy: ScanStrategy,
    mut visit: impl FnMut(&mut RowCtx<'_>, Tid, u64) -> Result<()>,
) -> Result<()> {
    let view = handle.relation_view(relation.name())?;
    if let Some(attr) = predicate.attr() {
        if attr >= view.schema.attr_count() {
            return Err(Error::UnknownAttribute(format!("#{attr}")));
        }
    }
    if strategy == ScanStrategy::SecondaryIndexProbe {
        return index_probe(handle, relation, view, predicate, &mut visit);
    }
    let attr = predicate.attr();
    let dict = attr.and_then(|a| view.dicts[a].as_ref());
    // One key-space probe per scan; chunks whose filter column is not
    // key-coded fall back to direct evaluation.
    let key_probe = match (attr, predicate) {
        (Some(_), p) if !matches!(p, Predicate::None) => {
            if dict.is_some() {
                key_space_probe(predicate, strategy, dict)?
            } else {
                None
            }
        }
        _ => None,
    };
    let capacity = handle.chunk_capacity() as u64;
    for part in &view.partitions {
        for chunk in &part.chunks {
            let mut ctx = RowCtx::new(view, chunk);
            let runs = chunk.valid_runs(&part.invalid);
            if runs.is_empty() {
                continue;
            }
            let key_coded = attr
                .map(|a| {
                    matches!(
                        chunk.vectors[a].data,
                        VectorData::DictKeys { .. } | VectorData::Rle { keys: true, .. }
                    )
                })
                .unwrap_or(false);
            // An unmatchable key probe rules out the whole compressed chunk.
            if key_coded {
                if let Some(probe) = &key_probe {
                    if !probe.can_match() {
                        continue;
                    }
                }
            }
            let mut filter_reader = attr.map(|a| ColReader::new(&chunk.vectors[a]));
            for (b, e) in runs {
                for t in b..=e {
                    let slot = t % capacity;
                    let passes = match &mut filter_reader {
                        None => true,
                        Some(reader) => {
                            let a = attr.unwrap();
                            let cell = reader.cell(slot);
                            match (&key_probe, &cell, key_coded) {
                                (Some(probe), Cell::Key(k), true) => probe.test_key(*k),
                                _ => {
                                    let v = match cell {
                                        Cell::Bytes => Value::decode_slot(
                                            view.schema.attr_type(a),
                                            &reader.scratch,
                                        ),
                                        Cell::Key(k) => {
                                            let d = view.dicts[a]
                                                .as_ref()
                                                .expect("key cell implies dictionary");
                                            Value::Str(d.value_of(k)?)
                                        }
                                    };
                                    predicate.test(&v)
                                }
                            }
                        }
                    };
                    if passes {
                        visit(&mut ctx, Tid(t), slot)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Probe the live secondary index, validate candidates against the
/// snapshot, re-verify the predicate through snapshot reads, and visit
/// survivors.
fn index_probe(
    handle: &SnapshotHandle,
    relation: &Relation,
    view: &RelationView,
    predicate: &Predicate,
    visit: &mut dyn FnMut(&mut RowCtx<'_>, Tid, u64) -> Result<()>,
) -> Result<()> {
    let attr = predicate.attr().expect("index probe needs a filter attribute");
    let capacity = handle.chunk_capacity() as u64;
    for (p, part) in view.partitions.iter().enumerate() {
        let tids: Vec<Tid> = match predicate {
            Predicate::Equality { value, .. } => {
                relation.index_range_lookup(p, attr, value, value)?
            }
            Predicate::Range { low, high, .. } => {
                relation.index_range_lookup(p, attr, low, high)?
            }
            Predicate::Prefix { prefix, .. } => relation.index_prefix_lookup(p, attr, prefix)?,
            _ => {
                return Err(Error::Config(
                    "secondary-index probes support equality, range and prefix filters".into(),
                ))
            }
        };
        let mut ctx_cache: HashMap<usize, usize> = HashMap::new();
        let mut ctxs: Vec<RowCtx<'_>> = Vec::new();
        for tid in tids {
            if tid.0 >= part.next_tid {
                continue;
            }
            let chunk_index = (tid.0 / capacity) as usize;
            let slot = tid.0 % capacity;
            let Some(chunk) = part.chunks.get(chunk_index) else { continue };
            if slot >= chunk.count || !chunk.slot_live(slot as usize) || part.invalid.contains(tid)
            {
                continue;
            }
            let ctx_pos = *ctx_cache.entry(chunk_index).or_insert_with(|| {
                ctxs.push(RowCtx::new(view, chunk));
                ctxs.len() - 1
            });
            let ctx = &mut ctxs[ctx_pos];
            // The live index may be newer than the snapshot; the snapshot
            // value is authoritative.
            let v = ctx.value(attr, slot)?;
            if predicate.test(&v) {
                visit(ctx, tid, slot)?;
            }
        }
    }
    Ok(())
}

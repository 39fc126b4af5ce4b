//! Asynchronous reorganization: freezing cold chunks into compressed,
//! immutable, huge-page form, and the maintenance tick that drives
//! observation cycles, temperature transitions and freezing.
//!
//! Freezing is optimistic. The task encodes a chunk without taking the
//! partition writer lock: string vectors are re-encoded as dictionary
//! keys (interning every non-deleted slot, including invalidated ones,
//! whose references are retained until the chunk is dropped), numeric and
//! key vectors get position-based RLE where the gain clears the
//! threshold. Writers that touch the source chunk meanwhile are caught by
//! the observer's dirty channel; every dirty page is re-read and mended —
//! a stale interned key is released and the current value interned. A
//! task that keeps finding dirty pages aborts after a bounded number of
//! rounds, releasing everything it interned and marking the chunk hot
//! again. Commit runs as a brief temporary writer of the partition: it
//! re-checks cleanliness, converts bitmap deletions into invalidation
//! ranges, installs the huge-page representations and marks the chunk
//! frozen in one step that snapshot creation can never straddle.

use std::sync::atomic::Ordering;
use std::time::Instant;

use crate::codec::dictionary::DEAD_SLOT_KEY;
use crate::codec::rle::PositionalRuns;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::observer::{classify, run_cycle, Temperature};
use crate::page::{table_from_bytes, PageClass};
use crate::storage::chunk::Chunk;
use crate::storage::relation::Relation;
use crate::storage::vector::VectorData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreezePhase {
    Encoding,
    Rework,
    Commit,
    Aborted,
}

#[derive(Debug, Clone)]
pub struct FreezeReport {
    pub relation: String,
    pub partition: usize,
    pub chunk: usize,
    pub phase: FreezePhase,
    pub tuples_frozen: u64,
    pub bytes_before: u64,
    pub bytes_after: u64,
    pub reworked_pages: u64,
    pub dirty_rounds: u32,
    pub duration_micros: u64,
}

/// Hook points a test can use to interleave writes deterministically with
/// the optimistic protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreezeEvent {
    /// The initial encode pass finished; dirty pages not yet collected.
    EncodePassDone,
    /// One rework round finished (argument: dirty rounds so far).
    ReworkRoundDone(u32),
}

/// Per-attribute working state of a freeze task.
enum AttrPlan {
    /// Dictionary keys for a string attribute. `owns_refs` is true when the
    /// task interned them (lazy mode) and must release on abort.
    Keys { keys: Vec<u32>, owns_refs: bool },
    /// Raw fixed-width cells, held as little-endian bit patterns.
    Cells { bits: Vec<u64> },
}

pub fn freeze_chunk(relation: &Relation, partition: usize, chunk_index: usize) -> Result<FreezeReport> {
    freeze_chunk_hooked(relation, partition, chunk_index, |_| {})
}

pub fn freeze_chunk_hooked(
    relation: &Relation,
    partition: usize,
    chunk_index: usize,
    mut hook: impl FnMut(FreezeEvent),
) -> Result<FreezeReport> {
    let start = Instant::now();
    let shared = relation.shared().clone();
    let part = relation.partition(partition)?;
    let chunk = part.chunk(chunk_index).ok_or(Error::UnknownChunk(chunk_index))?;
    if chunk.is_frozen() {
        return Err(Error::FreezeIneligible { chunk: chunk_index, reason: "already frozen".into() });
    }
    if chunk.temperature() != Temperature::Cold {
        return Err(Error::FreezeIneligible { chunk: chunk_index, reason: "chunk is not cold".into() });
    }
    if !chunk.is_full() {
        return Err(Error::FreezeIneligible { chunk: chunk_index, reason: "chunk is not full".into() });
    }

    // Arm dirty tracking before the first read so no concurrent write can
    // slip between observation and encoding.
    for v in chunk.vectors() {
        v.arm_freeze_tracking();
    }
    let capacity = chunk.capacity();
    let deleted: Vec<bool> = {
        let mut d = vec![false; capacity];
        for s in chunk.deleted_slots() {
            d[s] = true;
        }
        d
    };
    let schema = relation.schema();

    // Encode pass: read through descriptor-table clones, never holding a
    // vector lock while touching page data, never taking the writer lock.
    let mut plans: Vec<AttrPlan> = Vec::with_capacity(schema.attr_count());
    for attr in 0..schema.attr_count() {
        let vector = chunk.vector(attr);
        let data = vector.clone_data();
        let plan = match (&data, schema.attr_type(attr).is_string()) {
            (VectorData::Plain { .. }, true) => {
                let dict = relation.dictionary(attr).expect("string attribute");
                let mut keys = vec![DEAD_SLOT_KEY; capacity];
                let mut scratch = Vec::new();
                for (slot, key) in keys.iter_mut().enumerate() {
                    if !deleted[slot] {
                        data.read_cell(slot, vector.width(), &mut scratch);
                        *key = dict.intern(&string_from_slot(&scratch));
                    }
                }
                AttrPlan::Keys { keys, owns_refs: true }
            }
            (VectorData::DictKeys { .. }, _) => {
                // Eager mode: slots already hold keys whose references they own.
                let mut keys = vec![DEAD_SLOT_KEY; capacity];
                let mut scratch = Vec::new();
                for (slot, key) in keys.iter_mut().enumerate() {
                    if !deleted[slot] {
                        if let crate::storage::vector::Cell::Key(k) =
                            data.read_cell(slot, vector.width(), &mut scratch).0
                        {
                            *key = k;
                        }
                    }
                }
                AttrPlan::Keys { keys, owns_refs: false }
            }
            _ => {
                let width = vector.width();
                let mut bits = vec![0u64; capacity];
                let mut scratch = Vec::new();
                for (slot, b) in bits.iter_mut().enumerate() {
                    data.read_cell(slot, width, &mut scratch);
                    *b = bits_from_le(&scratch);
                }
                AttrPlan::Cells { bits }
            }
        };
        plans.push(plan);
    }
    hook(FreezeEvent::EncodePassDone);

    // Optimistic rework: mend pages written during encoding until a round
    // comes up clean or the round budget runs out.
    let mut dirty_rounds = 0u32;
    let mut reworked_pages = 0u64;
    loop {
        let dirty = collect_dirty(&chunk);
        if dirty.iter().all(|d| d.is_empty()) {
            break;
        }
        dirty_rounds += 1;
        if dirty_rounds >= shared.cfg.max_rework_rounds {
            // Abort: undo every insert this task made and hand the chunk back hot.
            for (attr, plan) in plans.iter().enumerate() {
                if let AttrPlan::Keys { keys, owns_refs: true } = plan {
                    let dict = relation.dictionary(attr).expect("string attribute");
                    for &k in keys.iter().filter(|&&k| k != DEAD_SLOT_KEY) {
                        dict.release(k).expect("provisional key is live");
                    }
                }
            }
            chunk.set_temperature(Temperature::Hot);
            chunk.obs_state().lock().reset();
            shared.counters.freezes_aborted.fetch_add(1, Ordering::Relaxed);
            return Ok(FreezeReport {
                relation: relation.name().to_string(),
                partition,
                chunk: chunk_index,
                phase: FreezePhase::Aborted,
                tuples_frozen: 0,
                bytes_before: plain_bytes(&chunk) as u64,
                bytes_after: plain_bytes(&chunk) as u64,
                reworked_pages,
                dirty_rounds,
                duration_micros: start.elapsed().as_micros() as u64,
            });
        }
        reworked_pages += rework(relation, &chunk, &deleted, &mut plans, &dirty) as u64;
        hook(FreezeEvent::ReworkRoundDone(dirty_rounds));
    }

    // Commit as a temporary partition writer: a final clean-up rework (no
    // writer can interleave now), then the atomic representation swap.
    let writer_guard = part.writer.lock();
    let final_dirty = collect_dirty(&chunk);
    if final_dirty.iter().any(|d| !d.is_empty()) {
        reworked_pages += rework(relation, &chunk, &deleted, &mut plans, &final_dirty) as u64;
    }
    let epoch = shared.epoch.load(Ordering::SeqCst);
    let huge = shared.cfg.huge_page_size;
    let threshold = shared.cfg.rle_gain_threshold;
    let bytes_before = plain_bytes(&chunk) as u64;
    let mut bytes_after = 0u64;
    for (attr, plan) in plans.iter().enumerate() {
        let vector = chunk.vector(attr);
        let new_data = match plan {
            AttrPlan::Keys { keys, .. } => {
                let runs = PositionalRuns::encode(keys);
                let encoded = runs.run_count() * (8 + 4);
                if (keys.len() * 4) as f64 / encoded as f64 >= threshold {
                    rle_table(&runs, 4, huge, epoch, &shared.census, true)
                } else {
                    let mut bytes = Vec::with_capacity(keys.len() * 4);
                    for k in keys {
                        bytes.extend_from_slice(&k.to_le_bytes());
                    }
                    VectorData::DictKeys {
                        pages: table_from_bytes(&bytes, huge, PageClass::Huge, epoch, &shared.census),
                    }
                }
            }
            AttrPlan::Cells { bits } => {
                let width = vector.width();
                let runs = PositionalRuns::encode(bits);
                let encoded = runs.run_count() * (8 + width);
                if (bits.len() * width) as f64 / encoded as f64 >= threshold {
                    rle_table(&runs, width, huge, epoch, &shared.census, false)
                } else {
                    let mut bytes = Vec::with_capacity(bits.len() * width);
                    for b in bits {
                        bytes.extend_from_slice(&b.to_le_bytes()[..width]);
                    }
                    VectorData::Plain {
                        pages: table_from_bytes(&bytes, huge, PageClass::Huge, epoch, &shared.census),
                    }
                }
            }
        };
        bytes_after += new_data.pages().total_bytes() as u64;
        vector.swap_data(new_data);
    }
    // Bitmap deletions become invalidation ranges; the bitmap reads fully
    // set from now on.
    {
        let mut invalid = part.invalid.write();
        let base = chunk.base_tid();
        let mut run: Option<(u64, u64)> = None;
        for (slot, &dead) in deleted.iter().enumerate() {
            let t = base + slot as u64;
            match (dead, run) {
                (true, None) => run = Some((t, t)),
                (true, Some((b, _))) => run = Some((b, t)),
                (false, Some((b, e))) => {
                    invalid.insert(b, e);
                    run = None;
                }
                (false, None) => {}
            }
        }
        if let Some((b, e)) = run {
            invalid.insert(b, e);
        }
    }
    chunk.fill_bitmap();
    chunk.mark_frozen(chunk.current_fingerprint());
    drop(writer_guard);

    let tuples_frozen = deleted.iter().filter(|&&d| !d).count() as u64;
    shared.counters.freezes_committed.fetch_add(1, Ordering::Relaxed);
    shared.counters.tuples_frozen.fetch_add(tuples_frozen, Ordering::Relaxed);
    shared.counters.rework_pages.fetch_add(reworked_pages, Ordering::Relaxed);
    Ok(FreezeReport {
        relation: relation.name().to_string(),
        partition,
        chunk: chunk_index,
        phase: FreezePhase::Commit,
        tuples_frozen,
        bytes_before,
        bytes_after,
        reworked_pages,
        dirty_rounds,
        duration_micros: start.elapsed().as_micros() as u64,
    })
}

fn string_from_slot(raw: &[u8]) -> String {
    let end = raw.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    String::from_utf8_lossy(&raw[..end]).into_owned()
}

fn bits_from_le(raw: &[u8]) -> u64 {
    let mut b = [0u8; 8];
    b[..raw.len()].copy_from_slice(raw);
    u64::from_le_bytes(b)
}

fn plain_bytes(chunk: &Chunk) -> usize {
    chunk.vectors().iter().map(|v| v.width() * v.capacity()).sum()
}

/// Dirty pages per attribute since arming / the previous round.
fn collect_dirty(chunk: &Chunk) -> Vec<Vec<u32>> {
    chunk.vectors().iter().map(|v| v.take_freeze_dirty()).collect()
}

/// Re-read every slot on a dirty page and mend the plan: mismatched string
/// slots release the stale key and intern the current value; numeric cells
/// are refreshed in place. Returns the number of pages mended.
fn rework(
    relation: &Relation,
    chunk: &Chunk,
    deleted: &[bool],
    plans: &mut [AttrPlan],
    dirty: &[Vec<u32>],
) -> usize {
    let capacity = chunk.capacity();
    let mut pages = 0usize;
    for (attr, dirty_pages) in dirty.iter().enumerate() {
        if dirty_pages.is_empty() {
            continue;
        }
        let vector = chunk.vector(attr);
        let data = vector.clone_data();
        let page_bytes = data.pages().page_bytes();
        let slot_width = match &data {
            VectorData::Plain { .. } => vector.width(),
            VectorData::DictKeys { .. } => 4,
            VectorData::Rle { .. } => unreachable!("source vectors are never run-encoded"),
        };
        let mut scratch = Vec::new();
        for &page in dirty_pages {
            pages += 1;
            let first = page as usize * page_bytes / slot_width;
            let last = (((page as usize + 1) * page_bytes - 1) / slot_width).min(capacity - 1);
            for slot in first..=last {
                if deleted[slot] {
                    continue;
                }
                match (&mut plans[attr], data.read_cell(slot, vector.width(), &mut scratch).0) {
                    (AttrPlan::Keys { keys, owns_refs: true }, crate::storage::vector::Cell::Bytes) => {
                        let dict = relation.dictionary(attr).expect("string attribute");
                        let current = string_from_slot(&scratch);
                        let stale = keys[slot];
                        if dict.value_of(stale).map(|v| v != current).unwrap_or(true) {
                            dict.release(stale).expect("provisional key is live");
                            keys[slot] = dict.intern(&current);
                        }
                    }
                    (AttrPlan::Keys { keys, .. }, crate::storage::vector::Cell::Key(k)) => {
                        keys[slot] = k;
                    }
                    (AttrPlan::Cells { bits }, crate::storage::vector::Cell::Bytes) => {
                        bits[slot] = bits_from_le(&scratch);
                    }
                    _ => unreachable!("plan and representation agree"),
                }
            }
        }
    }
    pages
}

/// Serialize positional runs into a huge-page table: run-end positions
/// first, then the run values.
fn rle_table(
    runs: &PositionalRuns<impl Copy + Into<u64> + PartialEq>,
    value_width: usize,
    huge: usize,
    epoch: u64,
    census: &std::sync::Arc<crate::page::PageCensus>,
    keys: bool,
) -> VectorData {
    let mut bytes = Vec::with_capacity(runs.run_count() * (8 + value_width));
    for &p in runs.positions() {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    for &v in runs.values() {
        let b: u64 = v.into();
        bytes.extend_from_slice(&b.to_le_bytes()[..value_width]);
    }
    VectorData::Rle {
        pages: table_from_bytes(&bytes, huge, PageClass::Huge, epoch, census),
        runs: runs.run_count(),
        value_width,
        keys,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EngineConfig;
    use crate::value::{AttrType, Schema, Value};

    fn cfg() -> EngineConfig {
        EngineConfig {
            page_size: 64,
            huge_page_size: 512,
            chunk_capacity: 8,
            // Classification only; freezing is driven by hand here.
            max_freezes_per_tick: 0,
            ..EngineConfig::default()
        }
    }

    fn schema() -> Schema {
        Schema::new(
            vec![("id".into(), AttrType::Int64), ("info".into(), AttrType::Varchar { len: 24 })],
            vec![0],
        )
        .unwrap()
    }

    fn cold_filled_engine() -> (Engine, std::sync::Arc<crate::storage::relation::Relation>) {
        let e = Engine::new(cfg()).unwrap();
        let rel = e.create_relation("t", schema(), 1).unwrap();
        for i in 0..8 {
            rel.insert(0, &[Value::Int64(i), Value::Str(format!("val{i}"))]).unwrap();
        }
        for _ in 0..6 {
            e.maintenance_tick();
        }
        assert_eq!(
            rel.partition(0).unwrap().chunk(0).unwrap().temperature(),
            Temperature::Cold
        );
        (e, rel)
    }

    fn raw_overwrite_info(rel: &Relation, slot: usize, value: &str) {
        let chunk = rel.partition(0).unwrap().chunk(0).unwrap();
        let mut bytes = vec![0u8; 24];
        bytes[..value.len()].copy_from_slice(value.as_bytes());
        chunk.vector(1).write_slot(slot, &bytes, rel.shared());
    }

    #[test]
    fn dirty_page_is_reworked_to_match_quiescent_result() {
        let (_e, rel) = cold_filled_engine();
        let mut wrote = false;
        let report = freeze_chunk_hooked(&rel, 0, 0, |ev| {
            if ev == FreezeEvent::EncodePassDone && !wrote {
                // The writer is not blocked while the task encodes.
                assert!(rel.partition(0).unwrap().writer.try_lock().is_some());
                raw_overwrite_info(&rel, 3, "CHANGED");
                wrote = true;
            }
        })
        .unwrap();
        assert_eq!(report.phase, FreezePhase::Commit);
        assert_eq!(report.dirty_rounds, 1);
        assert_eq!(report.reworked_pages, 1, "one 24-byte slot touches one 64-byte page");
        // Oracle: a quiescent freeze over the post-write state.
        let e2 = Engine::new(cfg()).unwrap();
        let rel2 = e2.create_relation("t", schema(), 1).unwrap();
        for i in 0..8 {
            let v = if i == 3 { "CHANGED".to_string() } else { format!("val{i}") };
            rel2.insert(0, &[Value::Int64(i), Value::Str(v)]).unwrap();
        }
        for _ in 0..6 {
            e2.maintenance_tick();
        }
        freeze_chunk(&rel2, 0, 0).unwrap();
        for t in 0..8 {
            assert_eq!(
                rel.point_read(0, crate::storage::tid::Tid(t), 1).unwrap(),
                rel2.point_read(0, crate::storage::tid::Tid(t), 1).unwrap()
            );
        }
        let d1 = rel.dictionary(1).unwrap();
        let d2 = rel2.dictionary(1).unwrap();
        assert_eq!(d1.total_refs(), d2.total_refs());
        assert_eq!(d1.key_of("val3"), None, "stale value released during rework");
    }

    #[test]
    fn persistent_dirt_aborts_and_restores_refcounts() {
        let (_e, rel) = cold_filled_engine();
        let mut n = 0;
        let report = freeze_chunk_hooked(&rel, 0, 0, |_| {
            n += 1;
            raw_overwrite_info(&rel, 1, &format!("storm{n}"));
        })
        .unwrap();
        assert_eq!(report.phase, FreezePhase::Aborted);
        assert_eq!(report.dirty_rounds, rel.shared().cfg.max_rework_rounds);
        let chunk = rel.partition(0).unwrap().chunk(0).unwrap();
        assert!(!chunk.is_frozen());
        assert_eq!(chunk.temperature(), Temperature::Hot);
        let dict = rel.dictionary(1).unwrap();
        assert_eq!(dict.total_refs(), 0, "every provisional intern was released");
        assert_eq!(dict.live_count(), 0);
    }

    #[test]
    fn freeze_preconditions() {
        let e = Engine::new(cfg()).unwrap();
        let rel = e.create_relation("t", schema(), 1).unwrap();
        rel.insert(0, &[Value::Int64(1), Value::Str("x".into())]).unwrap();
        // Hot chunk.
        assert!(matches!(freeze_chunk(&rel, 0, 0), Err(Error::FreezeIneligible { .. })));
        // Partially filled cold chunk.
        for _ in 0..6 {
            e.maintenance_tick();
        }
        assert_eq!(rel.partition(0).unwrap().chunk(0).unwrap().temperature(), Temperature::Cold);
        assert!(matches!(freeze_chunk(&rel, 0, 0), Err(Error::FreezeIneligible { .. })));
    }
}

/// One maintenance tick: observation cycle, chunk classification,
/// transition application, then up to `max_freezes_per_tick` eligible
/// freezes (cold and full).
pub fn maintenance_tick(engine: &Engine) -> Vec<FreezeReport> {
    let report = run_cycle(engine);
    let transitions = classify(engine, &report);
    let relations = engine.relations();
    for t in &transitions {
        relations[t.relation].apply_transition(t.partition, t.chunk, t.to);
    }
    let mut out = Vec::new();
    let mut budget = engine.config().max_freezes_per_tick;
    'outer: for rel in &relations {
        for part in rel.partitions() {
            for chunk in part.chunk_list() {
                if budget == 0 {
                    break 'outer;
                }
                if !chunk.is_frozen()
                    && chunk.temperature() == Temperature::Cold
                    && chunk.is_full()
                {
                    match freeze_chunk(rel, part.id(), chunk.index()) {
                        Ok(r) => {
                            budget -= 1;
                            out.push(r);
                        }
                        Err(Error::FreezeIneligible { .. }) => {}
                        Err(e) => panic!("freeze failed: {e}"),
                    }
                }
            }
        }
    }
    out
}

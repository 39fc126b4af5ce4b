//! Engine façade: relation registry, epochs, snapshot registry, counters
//! and the writer quiesce barrier.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::freeze::FreezeReport;
use crate::observer::CycleReport;
use crate::page::PageCensus;
use crate::snapshot::{self, SnapshotHandle, SnapshotStats};
use crate::storage::chunk::Chunk;
use crate::storage::relation::Relation;
use crate::value::Schema;

/// Monotone counters exposed through `stats`.
#[derive(Debug, Default)]
pub struct EngineCounters {
    pub inserts: AtomicU64,
    pub in_place_updates: AtomicU64,
    pub relocations: AtomicU64,
    pub invalidations: AtomicU64,
    pub deletes: AtomicU64,
    pub pages_replicated: AtomicU64,
    pub snapshots_created: AtomicU64,
    pub snapshots_dropped: AtomicU64,
    pub freezes_committed: AtomicU64,
    pub freezes_aborted: AtomicU64,
    pub tuples_frozen: AtomicU64,
    pub rework_pages: AtomicU64,
    pub transitions: AtomicU64,
    pub cycles: AtomicU64,
    pub persist_passes: AtomicU64,
    pub persist_chunks: AtomicU64,
}

/// Plain value snapshot of the counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub inserts: u64,
    pub in_place_updates: u64,
    pub relocations: u64,
    pub invalidations: u64,
    pub deletes: u64,
    pub pages_replicated: u64,
    pub snapshots_created: u64,
    pub snapshots_dropped: u64,
    pub freezes_committed: u64,
    pub freezes_aborted: u64,
    pub tuples_frozen: u64,
    pub rework_pages: u64,
    pub transitions: u64,
    pub cycles: u64,
    pub persist_passes: u64,
    pub persist_chunks: u64,
    pub fork_cost: u64,
    pub live_pages: i64,
}

pub(crate) struct SnapshotReg {
    pub epoch: u64,
    pub stats: Arc<SnapshotStats>,
}

/// State shared by every component of one engine instance.
pub struct EngineShared {
    pub cfg: EngineConfig,
    /// Current engine epoch; bumped at snapshot creation.
    pub epoch: AtomicU64,
    /// Largest epoch of any live snapshot, 0 when none. Writers compare
    /// descriptor epochs against this before in-place writes.
    pub max_live_snapshot: AtomicU64,
    pub census: Arc<PageCensus>,
    pub(crate) snapshots: Mutex<Vec<SnapshotReg>>,
    pub counters: EngineCounters,
    cycle: AtomicU64,
    persist_pass: AtomicU64,
}

impl EngineShared {
    /// A writer cloned a shared page: tally globally and per live snapshot
    /// that still references the old buffer.
    pub(crate) fn record_page_replication(&self, descriptor_epoch: u64) {
        self.counters.pages_replicated.fetch_add(1, Ordering::Relaxed);
        let reg = self.snapshots.lock();
        for s in reg.iter() {
            if s.epoch > descriptor_epoch {
                s.stats.pages_replicated.fetch_add(1, Ordering::Relaxed);
            }
        }
    }

    pub(crate) fn next_cycle(&self) -> u64 {
        self.counters.cycles.fetch_add(1, Ordering::Relaxed);
        self.cycle.fetch_add(1, Ordering::SeqCst) + 1
    }

    pub(crate) fn next_persist_pass(&self) -> u64 {
        self.counters.persist_passes.fetch_add(1, Ordering::Relaxed);
        self.persist_pass.fetch_add(1, Ordering::SeqCst) + 1
    }
}

pub struct Engine {
    shared: Arc<EngineShared>,
    relations: RwLock<Vec<Arc<Relation>>>,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            shared: Arc::new(EngineShared {
                cfg,
                epoch: AtomicU64::new(1),
                max_live_snapshot: AtomicU64::new(0),
                census: Arc::new(PageCensus::default()),
                snapshots: Mutex::new(Vec::new()),
                counters: EngineCounters::default(),
                cycle: AtomicU64::new(0),
                persist_pass: AtomicU64::new(0),
            }),
            relations: RwLock::new(Vec::new()),
        })
    }

    pub fn with_defaults() -> Self {
        Self::new(EngineConfig::default()).expect("default configuration is valid")
    }

    pub fn config(&self) -> &EngineConfig {
        &self.shared.cfg
    }

    pub(crate) fn shared(&self) -> &Arc<EngineShared> {
        &self.shared
    }

    pub fn create_relation(&self, name: &str, schema: Schema, partitions: usize) -> Result<Arc<Relation>> {
        self.create_relation_inner(name, schema, partitions, None)
    }

    /// Create a relation whose string dictionaries are pre-built sorted from
    /// a fixed value pool (benchmark-only ordered-dictionary mode; inserts
    /// must draw string values from the pool).
    pub fn create_relation_ordered(
        &self,
        name: &str,
        schema: Schema,
        partitions: usize,
        pool: &[String],
    ) -> Result<Arc<Relation>> {
        self.create_relation_inner(name, schema, partitions, Some(pool))
    }

    fn create_relation_inner(
        &self,
        name: &str,
        schema: Schema,
        partitions: usize,
        pool: Option<&[String]>,
    ) -> Result<Arc<Relation>> {
        let mut rels = self.relations.write();
        if rels.iter().any(|r| r.name() == name) {
            return Err(Error::DuplicateRelation(name.into()));
        }
        let rel = Arc::new(Relation::new(
            rels.len(),
            name.to_string(),
            schema,
            partitions,
            pool,
            self.shared.clone(),
        )?);
        rels.push(rel.clone());
        Ok(rel)
    }

    pub fn relation(&self, name: &str) -> Result<Arc<Relation>> {
        self.relations
            .read()
            .iter()
            .find(|r| r.name() == name)
            .cloned()
            .ok_or_else(|| Error::UnknownRelation(name.into()))
    }

    pub fn relations(&self) -> Vec<Arc<Relation>> {
        self.relations.read().clone()
    }

    /// Visit every chunk of every relation.
    pub(crate) fn for_each_chunk(&self, mut f: impl FnMut(usize, usize, usize, &Chunk)) {
        for rel in self.relations.read().iter() {
            for part in rel.partitions() {
                for (ci, chunk) in part.chunk_list().into_iter().enumerate() {
                    f(rel.id(), part.id(), ci, &chunk);
                }
            }
        }
    }

    /// Quiesce every partition writer (all writer locks held in a canonical
    /// order) and run `f` at the barrier.
    pub(crate) fn quiesce<R>(&self, f: impl FnOnce() -> R) -> R {
        let rels = self.relations.read().clone();
        let mut guards = Vec::new();
        for rel in &rels {
            for part in rel.partitions() {
                guards.push(part.writer.lock());
            }
        }
        let out = f();
        drop(guards);
        out
    }

    /// One observation cycle: read and reset every access bit.
    pub fn run_cycle(&self) -> CycleReport {
        crate::observer::run_cycle(self)
    }

    /// Observation cycle, classification, transition application and
    /// bounded freezing.
    pub fn maintenance_tick(&self) -> Vec<FreezeReport> {
        crate::freeze::maintenance_tick(self)
    }

    pub fn create_snapshot(&self) -> SnapshotHandle {
        snapshot::create_snapshot(self)
    }

    /// Total page descriptors across all live vectors: the model of the
    /// page-table bytes a snapshot must copy.
    pub fn fork_cost(&self) -> u64 {
        self.relations.read().iter().map(|r| r.descriptor_count()).sum()
    }

    pub fn live_pages(&self) -> i64 {
        self.shared.census.live_pages()
    }

    pub fn current_epoch(&self) -> u64 {
        self.shared.epoch.load(Ordering::SeqCst)
    }

    pub fn stats(&self) -> EngineStats {
        let c = &self.shared.counters;
        let ld = |a: &AtomicU64| a.load(Ordering::Relaxed);
        EngineStats {
            inserts: ld(&c.inserts),
            in_place_updates: ld(&c.in_place_updates),
            relocations: ld(&c.relocations),
            invalidations: ld(&c.invalidations),
            deletes: ld(&c.deletes),
            pages_replicated: ld(&c.pages_replicated),
            snapshots_created: ld(&c.snapshots_created),
            snapshots_dropped: ld(&c.snapshots_dropped),
            freezes_committed: ld(&c.freezes_committed),
            freezes_aborted: ld(&c.freezes_aborted),
            tuples_frozen: ld(&c.tuples_frozen),
            rework_pages: ld(&c.rework_pages),
            transitions: ld(&c.transitions),
            cycles: ld(&c.cycles),
            persist_passes: ld(&c.persist_passes),
            persist_chunks: ld(&c.persist_chunks),
            fork_cost: self.fork_cost(),
            live_pages: self.live_pages(),
        }
    }

    /// Deterministic digest of all relation contents.
    pub fn digest(&self) -> u64 {
        let mut acc = 0u64;
        for rel in self.relations.read().iter() {
            acc = acc.rotate_left(17) ^ rel.digest();
        }
        acc
    }
}

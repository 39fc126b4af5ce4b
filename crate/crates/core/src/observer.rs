//! The access observer: page-granular read/write monitoring of OLTP
//! operations and the hot/cooling/cold temperature state machine.
//!
//! Writers record accesses into per-vector bit arrays (see
//! [`crate::storage::vector::AccessBits`]); an observation cycle reads and
//! resets those bits. Classification works on whole chunks: a chunk turns
//! cooling once the same small page set (possibly empty) is touched for a
//! configured number of consecutive cycles, cold once further cycles see
//! no access at all, and back to hot when a cycle touches more than the
//! configured fraction of its pages. Frozen is entered and left only by
//! the freeze pipeline.
//!
//! Snapshot readers never reach these code paths at all — analytical scans
//! read captured page tables — so OLAP traffic cannot disturb temperatures.

use std::collections::BTreeMap;

use crate::config::EngineConfig;
use crate::engine::Engine;

/// Vector / chunk temperature. Ordering: `Hot > Cooling > Cold > Frozen`,
/// so a chunk's temperature is the maximum over its vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum Temperature {
    Frozen = 0,
    Cold = 1,
    Cooling = 2,
    Hot = 3,
}

impl Temperature {
    pub fn from_u8(v: u8) -> Self {
        match v {
            0 => Temperature::Frozen,
            1 => Temperature::Cold,
            2 => Temperature::Cooling,
            _ => Temperature::Hot,
        }
    }
}

/// Identifies one vector in an observation report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VectorId {
    pub relation: usize,
    pub partition: usize,
    pub chunk: usize,
    pub attr: usize,
}

/// Accesses recorded for one vector during one cycle.
#[derive(Debug, Clone)]
pub struct VectorAccess {
    pub read_pages: Vec<u32>,
    pub written_pages: Vec<u32>,
}

impl VectorAccess {
    /// Union of read and written pages, ascending.
    pub fn accessed(&self) -> Vec<u32> {
        let mut all = self.read_pages.clone();
        all.extend_from_slice(&self.written_pages);
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Result of one read-and-reset observation cycle. Vectors without any
/// access are absent.
#[derive(Debug, Clone)]
pub struct CycleReport {
    pub cycle: u64,
    pub vectors: BTreeMap<VectorId, VectorAccess>,
}

impl CycleReport {
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn pages_read(&self) -> usize {
        self.vectors.values().map(|v| v.read_pages.len()).sum()
    }

    pub fn pages_written(&self) -> usize {
        self.vectors.values().map(|v| v.written_pages.len()).sum()
    }
}

/// A chunk-level temperature transition decided by classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub relation: usize,
    pub partition: usize,
    pub chunk: usize,
    pub from: Temperature,
    pub to: Temperature,
}

/// Per-chunk classification memory, touched only by the maintenance worker.
#[derive(Debug, Default)]
pub struct ChunkObsState {
    /// Accessed-page set of each vector in the previous cycle.
    prev_sets: Vec<Vec<u32>>,
    /// Consecutive cycles with a stable, small accessed set.
    stable_cycles: u32,
    /// Consecutive cycles with zero accesses (for cooling -> cold).
    empty_cycles: u32,
}

impl ChunkObsState {
    pub fn reset(&mut self) {
        self.prev_sets.clear();
        self.stable_cycles = 0;
        self.empty_cycles = 0;
    }
}

/// Read and reset all access bits engine-wide. Wait-free with respect to
/// writers: every bit observed exactly once.
pub fn run_cycle(engine: &Engine) -> CycleReport {
    let cycle = engine.shared().next_cycle();
    let mut vectors = BTreeMap::new();
    engine.for_each_chunk(|rel_id, part_id, chunk_id, chunk| {
        for (attr, vector) in chunk.vectors().iter().enumerate() {
            let (read_pages, written_pages) = vector.take_cycle_sets();
            if !read_pages.is_empty() || !written_pages.is_empty() {
                vectors.insert(
                    VectorId { relation: rel_id, partition: part_id, chunk: chunk_id, attr },
                    VectorAccess { read_pages, written_pages },
                );
            }
        }
    });
    CycleReport { cycle, vectors }
}

/// Fold a cycle report into the per-chunk streak state and emit transitions.
/// Chunks absent from the report were not accessed at all.
pub fn classify(engine: &Engine, report: &CycleReport) -> Vec<Transition> {
    let cfg: EngineConfig = engine.shared().cfg.clone();
    let mut transitions = Vec::new();
    engine.for_each_chunk(|rel_id, part_id, chunk_id, chunk| {
        let temp = chunk.temperature();
        if temp == Temperature::Frozen {
            return;
        }
        let attr_count = chunk.vectors().len();
        let sets: Vec<Vec<u32>> = (0..attr_count)
            .map(|attr| {
                report
                    .vectors
                    .get(&VectorId { relation: rel_id, partition: part_id, chunk: chunk_id, attr })
                    .map(|a| a.accessed())
                    .unwrap_or_default()
            })
            .collect();
        let small = |attr: usize, set: &Vec<u32>| {
            set.len() as f64
                <= cfg.cooling_max_fraction
                    * chunk.vectors()[attr].plain_page_count(cfg.page_size) as f64
        };
        let all_empty = sets.iter().all(|s| s.is_empty());
        let mut obs = chunk.obs_state().lock();
        match temp {
            Temperature::Hot => {
                let all_small = sets.iter().enumerate().all(|(a, s)| small(a, s));
                let same_as_prev = obs.prev_sets.len() == attr_count && obs.prev_sets == sets;
                if all_small && (obs.stable_cycles == 0 || same_as_prev) {
                    obs.stable_cycles += 1;
                } else if all_small {
                    obs.stable_cycles = 1;
                } else {
                    obs.stable_cycles = 0;
                }
                if obs.stable_cycles >= cfg.cooling_confirm_cycles {
                    transitions.push(Transition {
                        relation: rel_id,
                        partition: part_id,
                        chunk: chunk_id,
                        from: Temperature::Hot,
                        to: Temperature::Cooling,
                    });
                    obs.empty_cycles = u32::from(all_empty);
                }
            }
            Temperature::Cooling => {
                let any_large = sets.iter().enumerate().any(|(a, s)| !small(a, s));
                if any_large {
                    // Warm-up: relocation pressure exceeded the small fraction.
                    transitions.push(Transition {
                        relation: rel_id,
                        partition: part_id,
                        chunk: chunk_id,
                        from: Temperature::Cooling,
                        to: Temperature::Hot,
                    });
                    obs.reset();
                } else if all_empty {
                    obs.empty_cycles += 1;
                    if obs.empty_cycles >= cfg.cold_confirm_cycles {
                        transitions.push(Transition {
                            relation: rel_id,
                            partition: part_id,
                            chunk: chunk_id,
                            from: Temperature::Cooling,
                            to: Temperature::Cold,
                        });
                    }
                } else {
                    obs.empty_cycles = 0;
                }
            }
            // Cold never warms implicitly: accesses relocate tuples instead.
            Temperature::Cold | Temperature::Frozen => {}
        }
        obs.prev_sets = sets;
    });
    transitions
}

//! Engine tuning knobs.

use crate::error::{Error, Result};

/// Engine-wide configuration. The defaults match the intended production
/// sizing; tests shrink pages and chunks to keep fixtures small.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Bytes per regular page; unit of access observation and copy-on-write.
    pub page_size: usize,
    /// Bytes per huge page; frozen vectors are placed on these.
    pub huge_page_size: usize,
    /// Tuples per chunk. All chunks of a partition except the last are full.
    pub chunk_capacity: usize,
    /// A chunk may turn cooling only while the fraction of its pages touched
    /// per observation cycle stays at or below this.
    pub cooling_max_fraction: f64,
    /// Consecutive cycles with an identical, small accessed-page set before
    /// a hot chunk turns cooling.
    pub cooling_confirm_cycles: u32,
    /// Consecutive cycles without any access before a cooling chunk turns cold.
    pub cold_confirm_cycles: u32,
    /// Dirty-page rework rounds a freeze task tolerates before aborting.
    pub max_rework_rounds: u32,
    /// Upper bound on chunks frozen per maintenance tick.
    pub max_freezes_per_tick: usize,
    /// Run-length encoding is applied to a frozen vector only when
    /// `plain_bytes / encoded_bytes` reaches this ratio. Set to `f64::INFINITY`
    /// to restrict freezing to dictionary encoding.
    pub rle_gain_threshold: f64,
    /// Intern string attributes at insert time instead of at freeze time.
    /// Hot string vectors then hold dictionary keys and every insert takes
    /// the shared dictionary lock.
    pub eager_string_compression: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            page_size: 4096,
            huge_page_size: 2 * 1024 * 1024,
            chunk_capacity: 65_536,
            cooling_max_fraction: 0.05,
            cooling_confirm_cycles: 2,
            cold_confirm_cycles: 3,
            max_rework_rounds: 3,
            max_freezes_per_tick: 4,
            rle_gain_threshold: 2.0,
            eager_string_compression: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.page_size < 16 || self.page_size % 8 != 0 {
            return Err(Error::Config("page_size must be a multiple of 8 and at least 16".into()));
        }
        if self.huge_page_size < self.page_size || self.huge_page_size % 8 != 0 {
            return Err(Error::Config("huge_page_size must be a multiple of 8 and at least page_size".into()));
        }
        if self.chunk_capacity == 0 {
            return Err(Error::Config("chunk_capacity must be positive".into()));
        }
        if !(self.cooling_max_fraction > 0.0 && self.cooling_max_fraction < 1.0) {
            return Err(Error::Config("cooling_max_fraction must be in (0, 1)".into()));
        }
        if self.cooling_confirm_cycles == 0 || self.cold_confirm_cycles == 0 {
            return Err(Error::Config("confirm cycle counts must be at least 1".into()));
        }
        if !(self.rle_gain_threshold >= 1.0) {
            return Err(Error::Config("rle_gain_threshold must be at least 1.0".into()));
        }
        Ok(())
    }
}

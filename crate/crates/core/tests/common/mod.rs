//! Shared fixtures: a shrunken engine configuration, a small orderline-ish
//! schema, and a naive single-array row-store oracle for equivalence
//! checks.

use std::collections::HashMap;

use permafrost::{AttrType, EngineConfig, Schema, Value};

/// Tiny pages and chunks so a handful of tuples exercise every boundary.
pub fn small_config() -> EngineConfig {
    EngineConfig {
        page_size: 64,
        huge_page_size: 512,
        chunk_capacity: 8,
        cooling_confirm_cycles: 2,
        cold_confirm_cycles: 3,
        max_freezes_per_tick: 64,
        ..EngineConfig::default()
    }
}

pub fn mini_schema() -> Schema {
    Schema::new(
        vec![
            ("id".into(), AttrType::Int64),
            ("qty".into(), AttrType::Int32),
            ("info".into(), AttrType::Varchar { len: 24 }),
        ],
        vec![0],
    )
    .unwrap()
}

pub fn row(id: i64, qty: i32, info: &str) -> Vec<Value> {
    vec![Value::Int64(id), Value::Int32(qty), Value::Str(info.into())]
}

/// Enough idle maintenance ticks to take quiet full chunks all the way to
/// frozen under `small_config`.
pub fn settle(engine: &permafrost::Engine) {
    let cfg = engine.config();
    for _ in 0..(cfg.cooling_confirm_cycles + cfg.cold_confirm_cycles + 1) {
        engine.maintenance_tick();
    }
}

/// Naive row store replaying the same logical operations; the equivalence
/// oracle for scans.
#[derive(Default, Clone)]
pub struct RowStoreOracle {
    rows: HashMap<u64, Vec<Value>>,
}

impl RowStoreOracle {
    pub fn insert(&mut self, logical: u64, row: Vec<Value>) {
        assert!(self.rows.insert(logical, row).is_none());
    }

    pub fn update(&mut self, logical: u64, attr: usize, value: Value) {
        self.rows.get_mut(&logical).expect("logical row exists")[attr] = value;
    }

    pub fn delete(&mut self, logical: u64) {
        assert!(self.rows.remove(&logical).is_some());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// All live rows, sorted for multiset comparison.
    pub fn sorted_rows(&self) -> Vec<Vec<Value>> {
        let mut rows: Vec<Vec<Value>> = self.rows.values().cloned().collect();
        rows.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
        rows
    }
}

/// Sort engine scan output the same way the oracle sorts.
pub fn sorted(mut rows: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    rows.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    rows
}

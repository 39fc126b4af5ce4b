//! An embeddable in-memory column store for mixed transactional/analytical
//! workloads.
//!
//! Data lives in a hierarchy of relations, partitions, chunks and vectors.
//! A page-granular access observer classifies chunks as hot, cooling, cold
//! or frozen; cold chunks are compressed asynchronously (shared ref-counted
//! dictionaries plus position-based run-length encoding) and moved onto
//! huge pages, where they are immutable. Analytical queries run against
//! epoch-tagged copy-on-write snapshots and never disturb the write path.
//!
//! The [`Engine`] type is the entry point; see the `bench` crate for a
//! workload driver and CLI built on top of it.

pub mod codec;
pub mod config;
pub mod engine;
pub mod error;
pub mod freeze;
pub mod index;
pub mod observer;
pub mod page;
pub mod persist;
pub mod query;
pub mod snapshot;
pub mod storage;
pub mod value;

pub use config::EngineConfig;
pub use engine::{Engine, EngineStats};
pub use error::{Error, Result};
pub use observer::Temperature;
pub use snapshot::SnapshotHandle;
pub use storage::tid::Tid;
pub use value::{AttrType, Schema, Value};

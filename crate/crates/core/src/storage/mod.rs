//! The partition/chunk/vector storage hierarchy and tuple lifecycle.

pub mod chunk;
pub mod invalid;
pub mod partition;
pub mod relation;
pub mod tid;
pub mod vector;

pub use invalid::InvalidRangeList;
pub use relation::{AttrMemory, MemoryReport, Relation};
pub use tid::Tid;

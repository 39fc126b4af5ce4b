//! Compression primitives: the shared ref-counted dictionary and
//! position-based run-length encoding, plus the Zipf string pool used by
//! benchmark data generators.

pub mod dictionary;
pub mod rle;
pub mod zipf;

pub use dictionary::{DictKey, Dictionary};
pub use rle::PositionalRuns;
pub use zipf::ZipfPool;

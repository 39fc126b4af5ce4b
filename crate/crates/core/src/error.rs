//! Error type shared across the engine.

use crate::storage::tid::Tid;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("duplicate attribute name `{0}` in schema")]
    DuplicateAttribute(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("partition count must be at least 1")]
    InvalidPartitionCount,
    #[error("relation `{0}` already exists")]
    DuplicateRelation(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("partition index {0} out of range")]
    UnknownPartition(usize),
    #[error("chunk index {0} out of range")]
    UnknownChunk(usize),
    #[error("duplicate primary key")]
    DuplicateKey,
    #[error("type mismatch for attribute `{attr}`: {reason}")]
    TypeMismatch { attr: String, reason: String },
    #[error("tuple {0:?} not found (deleted or invalidated)")]
    TupleNotFound(Tid),
    #[error("tuple {0:?} is already deleted or invalidated")]
    AlreadyInvalid(Tid),
    #[error("dictionary key {0} is not live")]
    DeadDictKey(u32),
    #[error("dictionary key {0} has no references to release")]
    ReleaseUnderflow(u32),
    #[error("run-length index {index} out of range (element count {len})")]
    RleOutOfRange { index: u64, len: u64 },
    #[error("index entry for {0:?} already present")]
    IndexEntryExists(Tid),
    #[error("index entry for {0:?} not found")]
    IndexEntryMissing(Tid),
    #[error("no secondary index on attribute `{0}`")]
    IndexMissing(String),
    #[error("ordered-dictionary mode is not active for this relation")]
    OrderedModeInactive,
    #[error("chunk {chunk} is not eligible to freeze: {reason}")]
    FreezeIneligible { chunk: usize, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("persist stream is corrupt: {0}")]
    PersistCorrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

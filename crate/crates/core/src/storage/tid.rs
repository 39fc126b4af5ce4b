//! Tuple identifiers.
//!
//! A TID is a partition-local logical position assigned densely at append
//! time and never reused: chunk index and slot offset are pure arithmetic
//! over the partition's chunk capacity. Relocating a tuple assigns a fresh
//! TID; the old one stays permanently invalid.

use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tid(pub u64);

impl Tid {
    pub fn new(chunk: usize, offset: usize, capacity: usize) -> Self {
        Tid(chunk as u64 * capacity as u64 + offset as u64)
    }

    pub fn chunk(self, capacity: usize) -> usize {
        (self.0 / capacity as u64) as usize
    }

    pub fn offset(self, capacity: usize) -> usize {
        (self.0 % capacity as u64) as usize
    }
}

impl fmt::Debug for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tid:{}", self.0)
    }
}

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

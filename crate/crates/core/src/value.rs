//! Schemas, attribute types and runtime values.
//!
//! All attributes occupy fixed-width slots in their uncompressed form:
//! 4 bytes for `int32`, 8 bytes for `int64`, `decimal` and `timestamp`,
//! and `n` bytes for `char(n)`/`varchar(n)` (NUL-padded, so values may not
//! contain NUL bytes). Decimals are scaled 64-bit integers; the schema
//! carries precision and scale for formatting.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrType {
    Int32,
    Int64,
    /// Scaled 64-bit integer with `precision` digits, `scale` of them fractional.
    Decimal { precision: u8, scale: u8 },
    Char { len: u32 },
    Varchar { len: u32 },
    /// Seconds since the Unix epoch.
    Timestamp,
}

impl AttrType {
    /// Width in bytes of one uncompressed slot.
    pub fn slot_width(&self) -> usize {
        match self {
            AttrType::Int32 => 4,
            AttrType::Int64 | AttrType::Decimal { .. } | AttrType::Timestamp => 8,
            AttrType::Char { len } | AttrType::Varchar { len } => *len as usize,
        }
    }

    pub fn is_string(&self) -> bool {
        matches!(self, AttrType::Char { .. } | AttrType::Varchar { .. })
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrType::Int32 => write!(f, "int32"),
            AttrType::Int64 => write!(f, "int64"),
            AttrType::Decimal { precision, scale } => write!(f, "decimal({precision},{scale})"),
            AttrType::Char { len } => write!(f, "char({len})"),
            AttrType::Varchar { len } => write!(f, "varchar({len})"),
            AttrType::Timestamp => write!(f, "timestamp"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int32(i32),
    Int64(i64),
    /// Scaled integer; the scale lives in the schema.
    Decimal(i64),
    Str(String),
    Timestamp(i64),
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int32(v) => Some(*v as i64),
            Value::Int64(v) | Value::Decimal(v) | Value::Timestamp(v) => Some(*v),
            Value::Str(_) => None,
        }
    }

    /// Total order among values of the same attribute type. Strings compare
    /// bytewise, everything else numerically.
    pub fn cmp_same_type(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Str(a), Value::Str(b)) => a.as_bytes().cmp(b.as_bytes()),
            (a, b) => a
                .as_i64()
                .expect("comparable value")
                .cmp(&b.as_i64().expect("comparable value")),
        }
    }

    /// Encode into a fixed-width slot.
    pub(crate) fn encode_slot(&self, ty: &AttrType, out: &mut [u8]) {
        debug_assert_eq!(out.len(), ty.slot_width());
        match (self, ty) {
            (Value::Int32(v), AttrType::Int32) => out.copy_from_slice(&v.to_le_bytes()),
            (Value::Int64(v), AttrType::Int64)
            | (Value::Decimal(v), AttrType::Decimal { .. })
            | (Value::Timestamp(v), AttrType::Timestamp) => out.copy_from_slice(&v.to_le_bytes()),
            (Value::Str(s), AttrType::Char { .. } | AttrType::Varchar { .. }) => {
                let bytes = s.as_bytes();
                out[..bytes.len()].copy_from_slice(bytes);
                out[bytes.len()..].fill(0);
            }
            _ => unreachable!("value validated against schema before encoding"),
        }
    }

    /// Decode from a fixed-width slot.
    pub(crate) fn decode_slot(ty: &AttrType, raw: &[u8]) -> Value {
        debug_assert_eq!(raw.len(), ty.slot_width());
        match ty {
            AttrType::Int32 => Value::Int32(i32::from_le_bytes(raw.try_into().unwrap())),
            AttrType::Int64 => Value::Int64(i64::from_le_bytes(raw.try_into().unwrap())),
            AttrType::Decimal { .. } => Value::Decimal(i64::from_le_bytes(raw.try_into().unwrap())),
            AttrType::Timestamp => Value::Timestamp(i64::from_le_bytes(raw.try_into().unwrap())),
            AttrType::Char { .. } | AttrType::Varchar { .. } => {
                let end = raw.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
                Value::Str(String::from_utf8_lossy(&raw[..end]).into_owned())
            }
        }
    }

    /// Rough in-memory footprint, used by the memory reports.
    pub fn heap_bytes(&self) -> usize {
        match self {
            Value::Str(s) => s.len(),
            _ => 0,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int32(v) => write!(f, "{v}"),
            Value::Int64(v) => write!(f, "{v}"),
            Value::Decimal(v) => write!(f, "{v}"),
            Value::Str(s) => write!(f, "{s}"),
            Value::Timestamp(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Schema {
    attributes: Vec<(String, AttrType)>,
    primary_key: Vec<usize>,
}

impl Schema {
    pub fn new(attributes: Vec<(String, AttrType)>, primary_key: Vec<usize>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidSchema("schema needs at least one attribute".into()));
        }
        for (i, (name, ty)) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::DuplicateAttribute(name.clone()));
            }
            match ty {
                AttrType::Char { len } | AttrType::Varchar { len } if *len == 0 => {
                    return Err(Error::InvalidSchema(format!("attribute `{name}` has zero length")));
                }
                _ => {}
            }
        }
        if primary_key.is_empty() {
            return Err(Error::InvalidSchema("primary key must not be empty".into()));
        }
        if primary_key.iter().any(|&i| i >= attributes.len()) {
            return Err(Error::InvalidSchema("primary key references unknown attribute".into()));
        }
        Ok(Self { attributes, primary_key })
    }

    pub fn attr_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn attr(&self, index: usize) -> (&str, &AttrType) {
        let (name, ty) = &self.attributes[index];
        (name, ty)
    }

    pub fn attr_type(&self, index: usize) -> &AttrType {
        &self.attributes[index].1
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|(n, _)| n == name)
    }

    pub fn attr_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|(n, _)| n.as_str())
    }

    pub fn primary_key(&self) -> &[usize] {
        &self.primary_key
    }

    /// Bytes per tuple in the uncompressed representation.
    pub fn row_width(&self) -> usize {
        self.attributes.iter().map(|(_, ty)| ty.slot_width()).sum()
    }

    /// Check one value against one attribute.
    pub fn check_value(&self, attr: usize, value: &Value) -> Result<()> {
        let (name, ty) = self.attr(attr);
        let mismatch = |reason: &str| Error::TypeMismatch { attr: name.to_string(), reason: reason.into() };
        match (ty, value) {
            (AttrType::Int32, Value::Int32(_))
            | (AttrType::Int64, Value::Int64(_))
            | (AttrType::Decimal { .. }, Value::Decimal(_))
            | (AttrType::Timestamp, Value::Timestamp(_)) => Ok(()),
            (AttrType::Char { len } | AttrType::Varchar { len }, Value::Str(s)) => {
                if s.len() > *len as usize {
                    Err(mismatch(&format!("string of {} bytes exceeds length {len}", s.len())))
                } else if s.as_bytes().contains(&0) {
                    Err(mismatch("string values may not contain NUL bytes"))
                } else {
                    Ok(())
                }
            }
            _ => Err(mismatch(&format!("expected {ty}"))),
        }
    }

    /// Check a whole tuple.
    pub fn check_tuple(&self, tuple: &[Value]) -> Result<()> {
        if tuple.len() != self.attributes.len() {
            return Err(Error::TypeMismatch {
                attr: "<tuple>".into(),
                reason: format!("expected {} values, got {}", self.attributes.len(), tuple.len()),
            });
        }
        for (i, v) in tuple.iter().enumerate() {
            self.check_value(i, v)?;
        }
        Ok(())
    }

    pub fn pk_of(&self, tuple: &[Value]) -> Box<[Value]> {
        self.primary_key.iter().map(|&i| tuple[i].clone()).collect()
    }
}

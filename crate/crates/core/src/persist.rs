//! Recovery-oriented persistence of frozen chunks.
//!
//! Frozen chunks never change in place, so a persist pass writes only the
//! chunks that have never been persisted, plus — always — the current
//! invalidation ranges of every partition covered. Everything else on disk
//! stays valid.
//!
//! Stream layout (all integers little-endian):
//!
//! ```text
//! stream  := magic "PFZ1" frame*
//! frame   := kind:u8 len:u64 payload[len] fnv1a64(payload):u64
//! kind 1  := chunk payload:
//!            name_len:u16 name partition:u32 chunk:u32 tuples:u64
//!            attr_count:u32 attr*
//! attr    := repr:u8 (0 plain | 1 dict-keys | 2 rle)
//!            width:u32 [runs:u64 value_width:u32 keys:u8]  (rle only)
//!            data_len:u64 data
//! kind 2  := invalidation payload:
//!            name_len:u16 name partition:u32 count:u64 (begin:u64 end:u64)*
//! ```

use std::io::{Read, Write};
use std::sync::atomic::Ordering;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::page::fnv1a;
use crate::storage::relation::Relation;
use crate::storage::vector::VectorData;

const MAGIC: &[u8; 4] = b"PFZ1";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersistReport {
    pub partition: usize,
    pub chunks_written: u64,
    pub invalidation_records: u64,
    pub bytes_written: u64,
}

/// Write the stream header once per sink.
pub fn write_header(sink: &mut dyn Write) -> Result<()> {
    sink.write_all(MAGIC)?;
    Ok(())
}

/// Persist one partition: frozen chunks not yet persisted, then the
/// current invalidation record. `pass` tags the chunks written.
pub fn persist_partition(
    relation: &Relation,
    partition: usize,
    pass: u64,
    sink: &mut dyn Write,
) -> Result<PersistReport> {
    let part = relation.partition(partition)?;
    let mut report = PersistReport { partition, ..Default::default() };
    for chunk in part.chunk_list() {
        if !chunk.is_frozen() || chunk.persist_epoch() != 0 {
            continue;
        }
        let payload = chunk_payload(relation, partition, &chunk);
        report.bytes_written += write_frame(sink, 1, &payload)?;
        chunk.set_persist_epoch(pass);
        report.chunks_written += 1;
        relation.shared().counters.persist_chunks.fetch_add(1, Ordering::Relaxed);
    }
    let mut payload = Vec::new();
    push_name(&mut payload, relation.name());
    payload.extend_from_slice(&(partition as u32).to_le_bytes());
    let invalid = part.invalid_ranges();
    payload.extend_from_slice(&(invalid.len() as u64).to_le_bytes());
    for &(b, e) in invalid.ranges() {
        payload.extend_from_slice(&b.to_le_bytes());
        payload.extend_from_slice(&e.to_le_bytes());
    }
    report.bytes_written += write_frame(sink, 2, &payload)?;
    report.invalidation_records = 1;
    Ok(report)
}

/// Persist every partition of a relation in one pass.
pub fn persist_relation(relation: &Relation, sink: &mut dyn Write) -> Result<Vec<PersistReport>> {
    let pass = relation.shared().next_persist_pass();
    (0..relation.partition_count())
        .map(|p| persist_partition(relation, p, pass, sink))
        .collect()
}

/// Persist every relation of the engine. Writes the stream header first.
pub fn persist_engine(engine: &Engine, sink: &mut dyn Write) -> Result<Vec<PersistReport>> {
    write_header(sink)?;
    let mut out = Vec::new();
    for rel in engine.relations() {
        out.extend(persist_relation(&rel, sink)?);
    }
    Ok(out)
}

fn push_name(buf: &mut Vec<u8>, name: &str) {
    buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
    buf.extend_from_slice(name.as_bytes());
}

fn chunk_payload(relation: &Relation, partition: usize, chunk: &crate::storage::chunk::Chunk) -> Vec<u8> {
    let mut payload = Vec::new();
    push_name(&mut payload, relation.name());
    payload.extend_from_slice(&(partition as u32).to_le_bytes());
    payload.extend_from_slice(&(chunk.index() as u32).to_le_bytes());
    payload.extend_from_slice(&(chunk.count() as u64).to_le_bytes());
    payload.extend_from_slice(&(chunk.vectors().len() as u32).to_le_bytes());
    for vector in chunk.vectors() {
        let data = vector.data();
        match &*data {
            VectorData::Plain { pages } => {
                payload.push(0);
                payload.extend_from_slice(&(vector.width() as u32).to_le_bytes());
                push_pages(&mut payload, pages);
            }
            VectorData::DictKeys { pages } => {
                payload.push(1);
                payload.extend_from_slice(&(vector.width() as u32).to_le_bytes());
                push_pages(&mut payload, pages);
            }
            VectorData::Rle { pages, runs, value_width, keys } => {
                payload.push(2);
                payload.extend_from_slice(&(vector.width() as u32).to_le_bytes());
                payload.extend_from_slice(&(*runs as u64).to_le_bytes());
                payload.extend_from_slice(&(*value_width as u32).to_le_bytes());
                payload.push(u8::from(*keys));
                push_pages(&mut payload, pages);
            }
        }
    }
    payload
}

fn push_pages(buf: &mut Vec<u8>, pages: &crate::page::PageTable) {
    let mut data = vec![0u8; pages.total_bytes()];
    pages.read(0, &mut data);
    buf.extend_from_slice(&(data.len() as u64).to_le_bytes());
    buf.extend_from_slice(&data);
}

fn write_frame(sink: &mut dyn Write, kind: u8, payload: &[u8]) -> Result<u64> {
    sink.write_all(&[kind])?;
    sink.write_all(&(payload.len() as u64).to_le_bytes())?;
    sink.write_all(payload)?;
    sink.write_all(&fnv1a(payload).to_le_bytes())?;
    Ok(1 + 8 + payload.len() as u64 + 8)
}

// ---- reader ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Chunk {
        relation: String,
        partition: u32,
        chunk: u32,
        tuples: u64,
        attrs: Vec<PersistedAttr>,
    },
    Invalidation {
        relation: String,
        partition: u32,
        ranges: Vec<(u64, u64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistedAttr {
    pub repr: u8,
    pub width: u32,
    pub rle: Option<(u64, u32, bool)>,
    pub data: Vec<u8>,
}

/// Parse and checksum-verify a persist stream.
pub fn read_stream(source: &mut dyn Read) -> Result<Vec<Frame>> {
    let mut magic = [0u8; 4];
    source.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::PersistCorrupt("bad magic".into()));
    }
    let mut frames = Vec::new();
    loop {
        let mut kind = [0u8; 1];
        match source.read_exact(&mut kind) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let len = read_u64(source)? as usize;
        let mut payload = vec![0u8; len];
        source.read_exact(&mut payload)?;
        let checksum = read_u64(source)?;
        if checksum != fnv1a(&payload) {
            return Err(Error::PersistCorrupt("payload checksum mismatch".into()));
        }
        frames.push(parse_frame(kind[0], &payload)?);
    }
    Ok(frames)
}

fn parse_frame(kind: u8, payload: &[u8]) -> Result<Frame> {
    let mut cur = Cursor { buf: payload, pos: 0 };
    match kind {
        1 => {
            let relation = cur.name()?;
            let partition = cur.u32()?;
            let chunk = cur.u32()?;
            let tuples = cur.u64()?;
            let attr_count = cur.u32()?;
            let mut attrs = Vec::with_capacity(attr_count as usize);
            for _ in 0..attr_count {
                let repr = cur.u8()?;
                let width = cur.u32()?;
                let rle = if repr == 2 {
                    let runs = cur.u64()?;
                    let vw = cur.u32()?;
                    let keys = cur.u8()? != 0;
                    Some((runs, vw, keys))
                } else {
                    None
                };
                let dlen = cur.u64()? as usize;
                attrs.push(PersistedAttr { repr, width, rle, data: cur.bytes(dlen)?.to_vec() });
            }
            cur.finish()?;
            Ok(Frame::Chunk { relation, partition, chunk, tuples, attrs })
        }
        2 => {
            let relation = cur.name()?;
            let partition = cur.u32()?;
            let count = cur.u64()?;
            let mut ranges = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let b = cur.u64()?;
                let e = cur.u64()?;
                ranges.push((b, e));
            }
            cur.finish()?;
            Ok(Frame::Invalidation { relation, partition, ranges })
        }
        other => Err(Error::PersistCorrupt(format!("unknown frame kind {other}"))),
    }
}

/// Re-serialize a parsed frame; round-trips bit-exact with the writer.
pub fn frame_payload(frame: &Frame) -> Vec<u8> {
    let mut payload = Vec::new();
    match frame {
        Frame::Chunk { relation, partition, chunk, tuples, attrs } => {
            push_name(&mut payload, relation);
            payload.extend_from_slice(&partition.to_le_bytes());
            payload.extend_from_slice(&chunk.to_le_bytes());
            payload.extend_from_slice(&tuples.to_le_bytes());
            payload.extend_from_slice(&(attrs.len() as u32).to_le_bytes());
            for a in attrs {
                payload.push(a.repr);
                payload.extend_from_slice(&a.width.to_le_bytes());
                if let Some((runs, vw, keys)) = a.rle {
                    payload.extend_from_slice(&runs.to_le_bytes());
                    payload.extend_from_slice(&vw.to_le_bytes());
                    payload.push(u8::from(keys));
                }
                payload.extend_from_slice(&(a.data.len() as u64).to_le_bytes());
                payload.extend_from_slice(&a.data);
            }
        }
        Frame::Invalidation { relation, partition, ranges } => {
            push_name(&mut payload, relation);
            payload.extend_from_slice(&partition.to_le_bytes());
            payload.extend_from_slice(&(ranges.len() as u64).to_le_bytes());
            for (b, e) in ranges {
                payload.extend_from_slice(&b.to_le_bytes());
                payload.extend_from_slice(&e.to_le_bytes());
            }
        }
    }
    payload
}

fn read_u64(source: &mut dyn Read) -> Result<u64> {
    let mut b = [0u8; 8];
    source.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn bytes(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::PersistCorrupt("truncated payload".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn name(&mut self) -> Result<String> {
        let len = u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()) as usize;
        Ok(String::from_utf8_lossy(self.bytes(len)?).into_owned())
    }

    fn finish(&self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(Error::PersistCorrupt("trailing bytes in payload".into()))
        }
    }
}

//! Persist pass semantics: skip of already-persisted frozen chunks,
//! always-fresh invalidation records, and bit-exact framing.

mod common;

use common::{mini_schema, row, settle, small_config};
use permafrost::persist::{persist_engine, read_stream, frame_payload, Frame};
use permafrost::{Engine, Tid, Value};

fn loaded_engine(chunks: usize) -> (Engine, std::sync::Arc<permafrost::storage::Relation>) {
    let e = Engine::new(small_config()).unwrap();
    let rel = e.create_relation("t", mini_schema(), 2).unwrap();
    let c = e.config().chunk_capacity;
    for i in 0..(chunks * c) {
        rel.insert(i % 2, &row(i as i64, i as i32, &format!("v{}", i % 5))).unwrap();
    }
    settle(&e);
    (e, rel)
}

fn count_kinds(frames: &[Frame]) -> (usize, usize) {
    let chunks = frames.iter().filter(|f| matches!(f, Frame::Chunk { .. })).count();
    let invs = frames.iter().filter(|f| matches!(f, Frame::Invalidation { .. })).count();
    (chunks, invs)
}

#[test]
fn consecutive_persists_skip_stable_chunks() {
    let (e, rel) = loaded_engine(4);
    let frozen = e.stats().freezes_committed as usize;
    assert!(frozen >= 2);

    let mut first = Vec::new();
    persist_engine(&e, &mut first).unwrap();
    let frames = read_stream(&mut first.as_slice()).unwrap();
    let (chunks, invs) = count_kinds(&frames);
    assert_eq!(chunks, frozen);
    assert_eq!(invs, rel.partition_count(), "one invalidation record per partition");

    // No new freezes: zero chunk payloads, invalidation records only.
    let mut second = Vec::new();
    persist_engine(&e, &mut second).unwrap();
    let (chunks2, invs2) = count_kinds(&read_stream(&mut second.as_slice()).unwrap());
    assert_eq!(chunks2, 0);
    assert_eq!(invs2, rel.partition_count());

    // An invalidation between passes shows up in the record, still no
    // chunk payloads.
    rel.delete(0, Tid(1)).unwrap();
    let mut third = Vec::new();
    persist_engine(&e, &mut third).unwrap();
    let frames = read_stream(&mut third.as_slice()).unwrap();
    let (chunks3, _) = count_kinds(&frames);
    assert_eq!(chunks3, 0);
    let ranges: Vec<_> = frames
        .iter()
        .filter_map(|f| match f {
            Frame::Invalidation { partition: 0, ranges, .. } => Some(ranges.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(ranges, vec![vec![(1, 1)]]);
}

#[test]
fn one_new_frozen_chunk_writes_one_payload() {
    let (e, rel) = loaded_engine(2);
    let mut first = Vec::new();
    persist_engine(&e, &mut first).unwrap();
    // Grow one more full chunk per partition and freeze it.
    let c = e.config().chunk_capacity;
    for i in 0..(2 * c) {
        rel.insert(i % 2, &row(100_000 + i as i64, 0, "w")).unwrap();
    }
    settle(&e);
    let mut second = Vec::new();
    persist_engine(&e, &mut second).unwrap();
    let (chunks, _) = count_kinds(&read_stream(&mut second.as_slice()).unwrap());
    assert_eq!(chunks, 2, "exactly the newly frozen chunks are written");
}

#[test]
fn frames_round_trip_bit_exact() {
    let (e, _rel) = loaded_engine(3);
    let mut stream = Vec::new();
    persist_engine(&e, &mut stream).unwrap();
    let frames = read_stream(&mut stream.as_slice()).unwrap();
    assert!(!frames.is_empty());
    // Re-serialize each frame and compare to the original byte run.
    let mut replayed = Vec::new();
    replayed.extend_from_slice(b"PFZ1");
    for f in &frames {
        let payload = frame_payload(f);
        let kind = match f {
            Frame::Chunk { .. } => 1u8,
            Frame::Invalidation { .. } => 2u8,
        };
        replayed.push(kind);
        replayed.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        replayed.extend_from_slice(&payload);
        replayed.extend_from_slice(&permafrost::page::fnv1a(&payload).to_le_bytes());
    }
    assert_eq!(replayed, stream);
    // Corruption is detected.
    let mut corrupt = stream.clone();
    let n = corrupt.len();
    corrupt[n / 2] ^= 0xFF;
    assert!(read_stream(&mut corrupt.as_slice()).is_err());
}

#[test]
fn chunk_payloads_carry_representations() {
    let (e, _rel) = loaded_engine(2);
    let mut stream = Vec::new();
    persist_engine(&e, &mut stream).unwrap();
    let frames = read_stream(&mut stream.as_slice()).unwrap();
    for f in frames {
        if let Frame::Chunk { attrs, tuples, .. } = f {
            assert_eq!(tuples, e.config().chunk_capacity as u64);
            assert_eq!(attrs.len(), 3);
            for a in &attrs {
                match a.repr {
                    0 | 1 => assert!(a.rle.is_none()),
                    2 => {
                        let (runs, vw, _) = a.rle.unwrap();
                        assert_eq!(a.data.len() as u64, runs * (8 + vw as u64));
                    }
                    other => panic!("unexpected repr {other}"),
                }
            }
        }
    }
}

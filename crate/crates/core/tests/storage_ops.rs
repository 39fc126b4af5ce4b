//! Tuple lifecycle: inserts, temperature-dispatched updates and deletes,
//! invalidation ranges and valid-run iteration.

mod common;

use common::{mini_schema, row, settle, small_config, sorted, RowStoreOracle};
use permafrost::error::Error;
use permafrost::query::{table_scan, Predicate};
use permafrost::{AttrType, Engine, Schema, Tid, Value};

fn engine() -> Engine {
    Engine::new(small_config()).unwrap()
}

#[test]
fn create_relation_shapes() {
    let e = engine();
    let rel = e.create_relation("orderline", mini_schema(), 5).unwrap();
    assert_eq!(rel.partition_count(), 5);
    for p in rel.partitions() {
        assert_eq!(p.chunk_count(), 0);
    }
    // One dictionary per string attribute.
    let two_strings = Schema::new(
        vec![
            ("k".into(), AttrType::Int32),
            ("a".into(), AttrType::Varchar { len: 8 }),
            ("b".into(), AttrType::Varchar { len: 8 }),
        ],
        vec![0],
    )
    .unwrap();
    let rel2 = e.create_relation("two", two_strings, 1).unwrap();
    assert!(rel2.dictionary(0).is_none());
    assert!(rel2.dictionary(1).is_some());
    assert!(rel2.dictionary(2).is_some());

    assert!(matches!(
        Schema::new(vec![("x".into(), AttrType::Int32), ("x".into(), AttrType::Int32)], vec![0]),
        Err(Error::DuplicateAttribute(_))
    ));
    assert!(matches!(
        e.create_relation("bad", mini_schema(), 0),
        Err(Error::InvalidPartitionCount)
    ));
    assert!(matches!(
        e.create_relation("orderline", mini_schema(), 1),
        Err(Error::DuplicateRelation(_))
    ));
}

#[test]
fn insert_tid_assignment() {
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 1).unwrap();
    assert_eq!(rel.insert(0, &row(1, 1, "a")).unwrap(), Tid(0));
    let capacity = e.config().chunk_capacity as u64;
    // Capacity + 1 consecutive inserts: the last lands in chunk 1.
    for i in 1..=capacity {
        let tid = rel.insert(0, &row(1 + i as i64, 1, "a")).unwrap();
        assert_eq!(tid, Tid(i));
    }
    assert_eq!(Tid(capacity).chunk(capacity as usize), 1);
    assert_eq!(rel.partition(0).unwrap().chunk_count(), 2);
}

#[test]
fn insert_after_frozen_chunk_opens_fresh_one() {
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 1).unwrap();
    let capacity = e.config().chunk_capacity as u64;
    for i in 0..capacity {
        rel.insert(0, &row(i as i64, 1, "x")).unwrap();
    }
    settle(&e);
    let part = rel.partition(0).unwrap();
    assert!(part.chunk(0).unwrap().is_frozen());
    let tid = rel.insert(0, &row(1000, 1, "y")).unwrap();
    assert_eq!(tid, Tid(capacity), "fresh hot chunk starts at chunkCount * capacity");
    assert!(matches!(rel.insert(0, &row(1000, 1, "y")), Err(Error::DuplicateKey)));
}

#[test]
fn point_read_across_representations() {
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 1).unwrap();
    let c = e.config().chunk_capacity as i64;
    for i in 0..c {
        rel.insert(0, &row(i, i as i32, if i % 2 == 0 { "BBB" } else { "CCC" })).unwrap();
    }
    // Hot, uncompressed: identity.
    assert_eq!(rel.point_read(0, Tid(1), 2).unwrap(), Value::Str("CCC".into()));
    settle(&e);
    // Frozen: the slot holds a key that refers to CCC.
    assert!(rel.partition(0).unwrap().chunk(0).unwrap().is_frozen());
    let dict = rel.dictionary(2).unwrap();
    assert!(dict.key_of("CCC").is_some());
    assert_eq!(rel.point_read(0, Tid(1), 2).unwrap(), Value::Str("CCC".into()));
    assert_eq!(rel.point_read(0, Tid(2), 1).unwrap(), Value::Int32(2));
    // Invalidated TID reads as not-found.
    rel.invalidate_range(0, 1, 1).unwrap();
    assert!(matches!(rel.point_read(0, Tid(1), 2), Err(Error::TupleNotFound(_))));
}

#[test]
fn update_dispatch_by_temperature() {
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 1).unwrap();
    let c = e.config().chunk_capacity as i64;
    for i in 0..c {
        rel.insert(0, &row(i, 0, "v")).unwrap();
    }
    // Hot: in place, same TID, no invalidation entry.
    let t = rel.update(0, Tid(3), 1, Value::Int32(77)).unwrap();
    assert_eq!(t, Tid(3));
    assert_eq!(rel.point_read(0, Tid(3), 1).unwrap(), Value::Int32(77));
    assert!(rel.partition(0).unwrap().invalid_ranges().is_empty());

    settle(&e);
    assert!(rel.partition(0).unwrap().chunk(0).unwrap().is_frozen());
    // Frozen: updates of TIDs 1, 2 and 3 leave a single merged range and
    // three fresh TIDs in a hot chunk.
    let n1 = rel.update(0, Tid(1), 1, Value::Int32(10)).unwrap();
    let n2 = rel.update(0, Tid(2), 1, Value::Int32(20)).unwrap();
    let n3 = rel.update(0, Tid(3), 1, Value::Int32(30)).unwrap();
    assert_eq!(rel.partition(0).unwrap().invalid_ranges().ranges(), &[(1, 3)]);
    for (tid, v) in [(n1, 10), (n2, 20), (n3, 30)] {
        assert!(tid.0 >= c as u64);
        assert_eq!(rel.point_read(0, tid, 1).unwrap(), Value::Int32(v));
    }
    // Stale TIDs are gone.
    assert!(matches!(rel.update(0, Tid(2), 1, Value::Int32(9)), Err(Error::AlreadyInvalid(_))));
}

#[test]
fn delete_dispatch_by_temperature() {
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 1).unwrap();
    let c = e.config().chunk_capacity;
    for i in 0..(2 * c) {
        rel.insert(0, &row(i as i64, 0, "v")).unwrap();
    }
    settle(&e);
    let part = rel.partition(0).unwrap();
    assert!(part.chunk(0).unwrap().is_frozen());
    assert!(part.chunk(1).unwrap().is_frozen());
    // A third, hot chunk.
    rel.insert(0, &row(900, 0, "v")).unwrap();
    let hot_tid = Tid(2 * c as u64);

    // Hot delete: bitmap only, no range.
    rel.delete(0, hot_tid).unwrap();
    assert!(part.invalid_ranges().is_empty());
    assert!(!part.chunk(2).unwrap().slot_bit(0));
    assert!(matches!(rel.delete(0, hot_tid), Err(Error::AlreadyInvalid(_))));

    // Frozen delete: range [7, 7].
    rel.delete(0, Tid(7)).unwrap();
    assert_eq!(part.invalid_ranges().ranges(), &[(7, 7)]);
    assert!(matches!(rel.delete(0, Tid(7)), Err(Error::AlreadyInvalid(_))));
}

#[test]
fn invalidate_range_merging() {
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 1).unwrap();
    rel.invalidate_range(0, 1, 2).unwrap();
    rel.invalidate_range(0, 3, 4).unwrap();
    assert_eq!(rel.partition(0).unwrap().invalid_ranges().ranges(), &[(1, 4)]);
    rel.invalidate_range(0, 2, 2).unwrap();
    assert_eq!(rel.partition(0).unwrap().invalid_ranges().ranges(), &[(1, 4)]);
}

#[test]
fn valid_runs_examples() {
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 1).unwrap();
    for i in 0..6 {
        rel.insert(0, &row(i, 0, "v")).unwrap();
    }
    assert_eq!(rel.valid_runs(0, 0).unwrap(), vec![(Tid(0), Tid(5))]);
    rel.invalidate_range(0, 1, 3).unwrap();
    assert_eq!(rel.valid_runs(0, 0).unwrap(), vec![(Tid(0), Tid(0)), (Tid(4), Tid(5))]);
    rel.invalidate_range(0, 0, 5).unwrap();
    assert_eq!(rel.valid_runs(0, 0).unwrap(), vec![]);
    assert!(matches!(rel.valid_runs(0, 9), Err(Error::UnknownChunk(9))));
}

#[test]
fn relocation_copies_tuples_and_repoints_indexes() {
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 1).unwrap();
    let c = e.config().chunk_capacity;
    rel.create_index("info").unwrap();
    for i in 0..c {
        rel.insert(0, &row(i as i64, i as i32, &format!("s{i}"))).unwrap();
    }
    settle(&e);
    let before = rel.read_tuple(0, Tid(2)).unwrap();
    let new_tid = rel.relocate_tuple(0, Tid(2)).unwrap();
    assert_ne!(new_tid, Tid(2));
    assert_eq!(rel.read_tuple(0, new_tid).unwrap(), before);
    assert!(matches!(rel.point_read(0, Tid(2), 0), Err(Error::TupleNotFound(_))));
    // Index now finds the new TID, not the old one.
    let hits = rel.index_prefix_lookup(0, 2, "s2").unwrap();
    assert_eq!(hits, vec![new_tid]);
    // pk follows.
    assert_eq!(rel.pk_lookup(0, &[Value::Int64(2)]).unwrap(), Some(new_tid));
    // Relocating from a hot chunk is refused.
    assert!(rel.relocate_tuple(0, new_tid).is_err());
}

#[test]
fn multiset_equivalence_against_row_store_oracle() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let e = engine();
    let rel = e.create_relation("t", mini_schema(), 2).unwrap();
    let mut oracle = RowStoreOracle::default();
    let mut rng = StdRng::seed_from_u64(0xfeed);
    // logical id -> (partition, tid)
    let mut live: Vec<(u64, usize, Tid)> = Vec::new();
    let mut next_logical = 0u64;
    for step in 0..4_000 {
        let op = rng.gen_range(0..100);
        if live.is_empty() || op < 50 {
            let p = rng.gen_range(0..2);
            let r = row(next_logical as i64, rng.gen_range(0..100), &format!("v{}", rng.gen_range(0..40)));
            let tid = rel.insert(p, &r).unwrap();
            oracle.insert(next_logical, r);
            live.push((next_logical, p, tid));
            next_logical += 1;
        } else if op < 80 {
            let i = rng.gen_range(0..live.len());
            let (logical, p, tid) = live[i];
            let v = Value::Int32(rng.gen_range(0..1000));
            let new_tid = rel.update(p, tid, 1, v.clone()).unwrap();
            oracle.update(logical, 1, v);
            live[i] = (logical, p, new_tid);
        } else {
            let i = rng.gen_range(0..live.len());
            let (logical, p, tid) = live.swap_remove(i);
            rel.delete(p, tid).unwrap();
            oracle.delete(logical);
        }
        if step % 500 == 250 {
            e.maintenance_tick();
        }
    }
    settle(&e);
    let snap = e.create_snapshot();
    let rows = table_scan(&snap, &rel, &Predicate::None, None).unwrap();
    assert_eq!(rows.len(), oracle.len());
    assert_eq!(sorted(rows), oracle.sorted_rows());
    assert_eq!(rel.total_valid_tuples(), oracle.len() as u64);
}

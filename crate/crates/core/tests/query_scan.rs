//! Scan strategies, planning rules, secondary-index integration and the
//! orderline aggregation.

mod common;

use std::sync::Arc;

use common::{settle, small_config, sorted};
use permafrost::query::{
    eq_dict_probe, hash_set_probe, ordered_range_probe, plan_predicate, q1_aggregate, table_scan,
    Predicate, ScanStrategy,
};
use permafrost::{AttrType, Engine, EngineConfig, Schema, Tid, Value};

fn orderline_schema() -> Schema {
    Schema::new(
        vec![
            ("ol_o_id".into(), AttrType::Int32),
            ("ol_number".into(), AttrType::Int32),
            ("ol_quantity".into(), AttrType::Int32),
            ("ol_amount".into(), AttrType::Decimal { precision: 6, scale: 2 }),
            ("ol_delivery_d".into(), AttrType::Timestamp),
            ("ol_dist_info".into(), AttrType::Varchar { len: 24 }),
        ],
        vec![0, 1],
    )
    .unwrap()
}

fn orderline(o: i32, n: i32, qty: i32, amount: i64, d: i64, info: &str) -> Vec<Value> {
    vec![
        Value::Int32(o),
        Value::Int32(n),
        Value::Int32(qty),
        Value::Decimal(amount),
        Value::Timestamp(d),
        Value::Str(info.into()),
    ]
}

/// A mixed hot/frozen relation with a known value distribution.
fn populated(ordered_pool: Option<Vec<String>>) -> (Engine, Arc<permafrost::storage::Relation>) {
    let e = Engine::new(small_config()).unwrap();
    let schema = orderline_schema();
    let rel = match &ordered_pool {
        Some(pool) => e.create_relation_ordered("orderline", schema, 1, pool).unwrap(),
        None => e.create_relation("orderline", schema, 1).unwrap(),
    };
    let names = ["Baker", "Bates", "Carter", "Diaz", "Drew"];
    for o in 0..12 {
        for n in 1..=5 {
            let info = names[(o as usize * 5 + n as usize) % names.len()];
            rel.insert(0, &orderline(o, n, n * 2, (100 * n) as i64, 1_500_000_000 + o as i64, info))
                .unwrap();
        }
    }
    settle(&e); // freezes all full chunks, leaving a hot tail
    assert!(e.stats().freezes_committed > 0);
    (e, rel)
}

#[test]
fn planner_strategy_table() {
    let (_e, rel) = populated(None);
    let eq = Predicate::Equality { attr: 5, value: Value::Str("Baker".into()) };
    let prefix = Predicate::Prefix { attr: 5, prefix: "Ba".into() };
    let arb = Predicate::Arbitrary { attr: 5, test: Arc::new(|v: &Value| v.as_str().unwrap().contains('a')) };
    assert_eq!(plan_predicate(&rel, &eq).unwrap().strategy, ScanStrategy::EqDictProbe);
    assert_eq!(plan_predicate(&rel, &prefix).unwrap().strategy, ScanStrategy::HashSetProbe);
    assert_eq!(plan_predicate(&rel, &arb).unwrap().strategy, ScanStrategy::HashSetProbe);
    assert_eq!(plan_predicate(&rel, &Predicate::None).unwrap().strategy, ScanStrategy::PlainFilter);
    rel.create_index("ol_dist_info").unwrap();
    assert_eq!(plan_predicate(&rel, &eq).unwrap().strategy, ScanStrategy::SecondaryIndexProbe);
    assert_eq!(plan_predicate(&rel, &prefix).unwrap().strategy, ScanStrategy::SecondaryIndexProbe);
    assert_eq!(plan_predicate(&rel, &arb).unwrap().strategy, ScanStrategy::HashSetProbe);
}

#[test]
fn ordered_mode_planner_prefers_key_ranges() {
    let pool: Vec<String> = ["Baker", "Bates", "Carter", "Diaz", "Drew"].map(String::from).into();
    let (_e, rel) = populated(Some(pool));
    let prefix = Predicate::Prefix { attr: 5, prefix: "B".into() };
    assert_eq!(plan_predicate(&rel, &prefix).unwrap().strategy, ScanStrategy::OrderedRange);
}

#[test]
fn strategies_agree_on_row_multisets() {
    let pool: Vec<String> = ["Baker", "Bates", "Carter", "Diaz", "Drew"].map(String::from).into();
    let (e, rel) = populated(Some(pool));
    let snap = e.create_snapshot();
    // Equality.
    let via_dict = eq_dict_probe(&snap, &rel, 5, &Value::Str("Carter".into())).unwrap();
    let via_plain = table_scan(
        &snap,
        &rel,
        &Predicate::Arbitrary { attr: 5, test: Arc::new(|v: &Value| v.as_str() == Some("Carter")) },
        None,
    )
    .unwrap();
    assert!(!via_dict.is_empty());
    assert_eq!(sorted(via_dict), sorted(via_plain));
    // Range: ordered-dictionary probe vs hash-set probe.
    let low = Value::Str("Bak".into());
    let high = Value::Str("D".into());
    let via_ordered = ordered_range_probe(&snap, &rel, 5, &low, &high).unwrap();
    let via_hash = hash_set_probe(
        &snap,
        &rel,
        5,
        Arc::new(|v: &Value| {
            let s = v.as_str().unwrap();
            s >= "Bak" && s <= "D"
        }),
    )
    .unwrap();
    assert!(!via_ordered.is_empty());
    assert_eq!(sorted(via_ordered), sorted(via_hash));
    // Range covering everything returns every valid row.
    let all = ordered_range_probe(&snap, &rel, 5, &Value::Str("".into()), &Value::Str("~".into())).unwrap();
    assert_eq!(all.len(), 60);
}

#[test]
fn eq_probe_unions_hot_and_frozen_representations() {
    let (e, rel) = populated(None);
    // "Unseen" exists only in the hot tail, never in the dictionary.
    rel.insert(0, &orderline(99, 1, 1, 1, 1_600_000_000, "Unseen")).unwrap();
    let snap = e.create_snapshot();
    assert_eq!(rel.dictionary(5).unwrap().key_of("Unseen"), None);
    let rows = eq_dict_probe(&snap, &rel, 5, &Value::Str("Unseen".into())).unwrap();
    assert_eq!(rows.len(), 1, "hot matches are returned even without a dictionary key");
    // A value with zero refcount contributes nothing from frozen chunks.
    let rows = eq_dict_probe(&snap, &rel, 5, &Value::Str("Absent".into())).unwrap();
    assert!(rows.is_empty());
}

#[test]
fn hash_set_probe_examples() {
    let (e, rel) = populated(None);
    let snap = e.create_snapshot();
    let everything = hash_set_probe(&snap, &rel, 5, Arc::new(|_| true)).unwrap();
    let unfiltered = table_scan(&snap, &rel, &Predicate::None, None).unwrap();
    assert_eq!(sorted(everything), sorted(unfiltered));
    let nothing = hash_set_probe(&snap, &rel, 5, Arc::new(|_| false)).unwrap();
    assert!(nothing.is_empty());
}

#[test]
fn index_probe_matches_chunk_scan_and_respects_snapshots() {
    let (e, rel) = populated(None);
    rel.create_index("ol_dist_info").unwrap();
    let snap = e.create_snapshot();
    let pred = Predicate::Prefix { attr: 5, prefix: "B".into() };
    assert_eq!(
        permafrost::query::plan_for_snapshot(&snap, &rel, &pred).unwrap().strategy,
        ScanStrategy::SecondaryIndexProbe
    );
    let via_index = table_scan(&snap, &rel, &pred, None).unwrap();
    let via_hash =
        permafrost::query::scan_with_strategy(&snap, &rel, &pred, ScanStrategy::HashSetProbe, None)
            .unwrap();
    assert!(!via_index.is_empty());
    assert_eq!(sorted(via_index.clone()), sorted(via_hash));
    // After an index removal (update of an indexed attribute), plans for
    // the old snapshot stop trusting the index but results stay correct.
    rel.update(0, Tid(0), 5, Value::Str("Zed".into())).unwrap();
    assert_eq!(
        permafrost::query::plan_for_snapshot(&snap, &rel, &pred).unwrap().strategy,
        ScanStrategy::HashSetProbe
    );
    let after = table_scan(&snap, &rel, &pred, None).unwrap();
    assert_eq!(sorted(after), sorted(via_index));
    // A fresh snapshot trusts the index again.
    let snap2 = e.create_snapshot();
    assert_eq!(
        permafrost::query::plan_for_snapshot(&snap2, &rel, &pred).unwrap().strategy,
        ScanStrategy::SecondaryIndexProbe
    );
}

#[test]
fn index_lookup_examples() {
    // TID 0 -> CCC, TID 1 -> BBB: the range [BBB, BBB] finds TID 1.
    let e = Engine::new(small_config()).unwrap();
    let schema = Schema::new(
        vec![("id".into(), AttrType::Int32), ("name".into(), AttrType::Varchar { len: 8 })],
        vec![0],
    )
    .unwrap();
    let rel = e.create_relation("t", schema, 1).unwrap();
    rel.insert(0, &[Value::Int32(0), Value::Str("CCC".into())]).unwrap();
    rel.insert(0, &[Value::Int32(1), Value::Str("BBB".into())]).unwrap();
    rel.create_index("name").unwrap();
    let low = Value::Str("BBB".into());
    assert_eq!(rel.index_range_lookup(0, 1, &low, &low).unwrap(), vec![Tid(1)]);
    // Empty range: low above all values.
    let z = Value::Str("ZZZ".into());
    assert_eq!(rel.index_range_lookup(0, 1, &z, &z).unwrap(), vec![]);
    assert_eq!(rel.index_prefix_lookup(0, 1, "B").unwrap(), vec![Tid(1)]);
    assert_eq!(rel.index_prefix_lookup(0, 1, "Q").unwrap(), vec![]);
    // Per-entry memory stays within the value-free budget.
    let bpe = rel.index_bytes_per_entry(0, 1).unwrap();
    assert!((8.0..=48.0).contains(&bpe), "bytes per entry {bpe}");
}

#[test]
fn q1_aggregation_matches_naive_evaluation() {
    let (e, rel) = populated(None);
    let snap = e.create_snapshot();
    // Naive oracle over a plain scan.
    let rows = table_scan(&snap, &rel, &Predicate::None, None).unwrap();
    let mut expect: std::collections::BTreeMap<i32, (i64, i64, u64)> = Default::default();
    for r in &rows {
        let (info, d) = (r[5].as_str().unwrap(), r[4].as_i64().unwrap());
        if info.starts_with('B') && d > 1_500_000_003 {
            let e = expect.entry(match r[1] {
                Value::Int32(n) => n,
                _ => unreachable!(),
            });
            let slot = e.or_insert((0, 0, 0));
            slot.0 += r[2].as_i64().unwrap();
            slot.1 += r[3].as_i64().unwrap();
            slot.2 += 1;
        }
    }
    let got = q1_aggregate(&snap, &rel, "B", 1_500_000_003).unwrap();
    assert_eq!(got.len(), expect.len());
    for row in &got {
        let (sq, sa, n) = expect[&row.ol_number];
        assert_eq!((row.sum_qty, row.sum_amount, row.count_order), (sq, sa, n));
        // Exact average arithmetic under scaled integers.
        assert_eq!(row.avg_qty() * row.count_order as f64, row.sum_qty as f64);
    }
    // Group ordering.
    for w in got.windows(2) {
        assert!(w[0].ol_number < w[1].ol_number);
    }
    // Empty relation gives an empty result.
    let empty = Engine::new(small_config()).unwrap();
    let r2 = empty.create_relation("orderline", orderline_schema(), 1).unwrap();
    let s2 = empty.create_snapshot();
    assert!(q1_aggregate(&s2, &r2, "B", 0).unwrap().is_empty());
    // Single qualifying orderline.
    r2.insert(0, &orderline(1, 1, 5, 1000, 10, "Ba")).unwrap();
    let s3 = empty.create_snapshot();
    let one = q1_aggregate(&s3, &r2, "B", 0).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!((one[0].ol_number, one[0].sum_qty, one[0].sum_amount, one[0].count_order), (1, 5, 1000, 1));
    assert_eq!(one[0].avg_qty(), 5.0);
    assert_eq!(one[0].avg_amount(), 10.0);
}

#[test]
fn scans_skip_invalidated_rows_and_stale_versions() {
    let (e, rel) = populated(None);
    // Update three frozen tuples: stale versions never reappear.
    let before = {
        let snap = e.create_snapshot();
        table_scan(&snap, &rel, &Predicate::None, None).unwrap().len()
    };
    for t in [1u64, 2, 3] {
        rel.update(0, Tid(t), 2, Value::Int32(500)).unwrap();
    }
    let snap = e.create_snapshot();
    let rows = table_scan(&snap, &rel, &Predicate::None, None).unwrap();
    assert_eq!(rows.len(), before, "relocated tuples appear once, stale versions never");
    let updated: Vec<_> =
        rows.iter().filter(|r| r[2] == Value::Int32(500)).collect();
    assert_eq!(updated.len(), 3);
    // Unknown attribute errors.
    assert!(table_scan(&snap, &rel, &Predicate::Equality { attr: 99, value: Value::Int32(0) }, None).is_err());
}

#[test]
fn projection_selects_attributes() {
    let (e, rel) = populated(None);
    let snap = e.create_snapshot();
    let rows = table_scan(&snap, &rel, &Predicate::None, Some(&[1, 5])).unwrap();
    assert!(rows.iter().all(|r| r.len() == 2));
    assert!(rows.iter().all(|r| matches!(r[0], Value::Int32(_)) && matches!(r[1], Value::Str(_))));
}

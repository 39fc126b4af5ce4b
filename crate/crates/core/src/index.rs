//! Memory-frugal secondary index: a balanced tree whose entries are bare
//! TIDs. Ordering is determined by the attribute values those TIDs
//! reference, resolved through the storage layer (and dictionary for
//! frozen tuples) at comparison time; the TID itself breaks ties, giving a
//! strict total order so deletes can locate an entry in O(log n)
//! resolutions. Entries never store values, so index size is independent
//! of the indexed attribute's width.

use std::ops::Bound;

use crate::error::{Error, Result};
use crate::storage::tid::Tid;
use crate::value::Value;

/// Resolves the attribute value a TID references, ignoring validity (a
/// just-invalidated tuple's bytes remain readable until its chunk is
/// dropped, which keeps delete-after-invalidate well defined).
pub trait ValueSource {
    fn value_at(&self, tid: Tid) -> Value;
}

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    tid: u64,
    left: u32,
    right: u32,
    height: u8,
}

/// AVL tree over arena-allocated nodes with 32-bit links.
pub struct TidIndex {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    len: usize,
}

impl Default for TidIndex {
    fn default() -> Self {
        Self::new()
    }
}

impl TidIndex {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), free: Vec::new(), root: NIL, len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Deterministic estimate of entry-storage bytes per entry (node arena
    /// plus free list). Nothing here depends on the indexed values' width.
    pub fn bytes_per_entry(&self) -> f64 {
        assert!(self.len > 0, "memory report needs at least one entry");
        let bytes = self.nodes.len() * std::mem::size_of::<Node>()
            + self.free.len() * std::mem::size_of::<u32>();
        bytes as f64 / self.len as f64
    }

    fn node(&self, i: u32) -> &Node {
        &self.nodes[i as usize]
    }

    fn height(&self, i: u32) -> i32 {
        if i == NIL {
            0
        } else {
            self.node(i).height as i32
        }
    }

    fn fix_height(&mut self, i: u32) {
        let h = 1 + self.height(self.node(i).left).max(self.height(self.node(i).right));
        self.nodes[i as usize].height = h as u8;
    }

    fn balance_factor(&self, i: u32) -> i32 {
        self.height(self.node(i).left) - self.height(self.node(i).right)
    }

    fn rotate_right(&mut self, y: u32) -> u32 {
        let x = self.node(y).left;
        self.nodes[y as usize].left = self.node(x).right;
        self.nodes[x as usize].right = y;
        self.fix_height(y);
        self.fix_height(x);
        x
    }

    fn rotate_left(&mut self, x: u32) -> u32 {
        let y = self.node(x).right;
        self.nodes[x as usize].right = self.node(y).left;
        self.nodes[y as usize].left = x;
        self.fix_height(x);
        self.fix_height(y);
        y
    }

    fn rebalance(&mut self, i: u32) -> u32 {
        self.fix_height(i);
        let bf = self.balance_factor(i);
        if bf > 1 {
            if self.balance_factor(self.node(i).left) < 0 {
                let l = self.node(i).left;
                self.nodes[i as usize].left = self.rotate_left(l);
            }
            self.rotate_right(i)
        } else if bf < -1 {
            if self.balance_factor(self.node(i).right) > 0 {
                let r = self.node(i).right;
                self.nodes[i as usize].right = self.rotate_right(r);
            }
            self.rotate_left(i)
        } else {
            i
        }
    }

    fn alloc(&mut self, tid: Tid) -> u32 {
        let node = Node { tid: tid.0, left: NIL, right: NIL, height: 1 };
        match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    /// Strict order: (value, tid).
    fn cmp_entry(&self, a: Tid, b_node: u32, src: &dyn ValueSource) -> std::cmp::Ordering {
        let b = Tid(self.node(b_node).tid);
        src.value_at(a).cmp_same_type(&src.value_at(b)).then(a.cmp(&b))
    }

    pub fn insert(&mut self, tid: Tid, src: &dyn ValueSource) -> Result<()> {
        let root = self.root;
        let new_root = self.insert_rec(root, tid, src)?;
        self.root = new_root;
        self.len += 1;
        Ok(())
    }

    fn insert_rec(&mut self, at: u32, tid: Tid, src: &dyn ValueSource) -> Result<u32> {
        if at == NIL {
            return Ok(self.alloc(tid));
        }
        match self.cmp_entry(tid, at, src) {
            std::cmp::Ordering::Less => {
                let child = self.insert_rec(self.node(at).left, tid, src)?;
                self.nodes[at as usize].left = child;
            }
            std::cmp::Ordering::Greater => {
                let child = self.insert_rec(self.node(at).right, tid, src)?;
                self.nodes[at as usize].right = child;
            }
            std::cmp::Ordering::Equal => return Err(Error::IndexEntryExists(tid)),
        }
        Ok(self.rebalance(at))
    }

    pub fn remove(&mut self, tid: Tid, src: &dyn ValueSource) -> Result<()> {
        let root = self.root;
        let new_root = self.remove_rec(root, tid, src)?;
        self.root = new_root;
        self.len -= 1;
        Ok(())
    }

    fn remove_rec(&mut self, at: u32, tid: Tid, src: &dyn ValueSource) -> Result<u32> {
        if at == NIL {
            return Err(Error::IndexEntryMissing(tid));
        }
        match self.cmp_entry(tid, at, src) {
            std::cmp::Ordering::Less => {
                let child = self.remove_rec(self.node(at).left, tid, src)?;
                self.nodes[at as usize].left = child;
            }
            std::cmp::Ordering::Greater => {
                let child = self.remove_rec(self.node(at).right, tid, src)?;
                self.nodes[at as usize].right = child;
            }
            std::cmp::Ordering::Equal => {
                let (left, right) = (self.node(at).left, self.node(at).right);
                self.free.push(at);
                if left == NIL {
                    return Ok(right);
                }
                if right == NIL {
                    return Ok(left);
                }
                // Two children: splice out the in-order successor.
                let (succ_tid, new_right) = self.take_min(right);
                let replacement = self.alloc_at(at, succ_tid, left, new_right);
                return Ok(self.rebalance(replacement));
            }
        }
        Ok(self.rebalance(at))
    }

    /// Reuse the freed slot `at` for the successor entry.
    fn alloc_at(&mut self, at: u32, tid: u64, left: u32, right: u32) -> u32 {
        debug_assert_eq!(self.free.last(), Some(&at));
        self.free.pop();
        self.nodes[at as usize] = Node { tid, left, right, height: 1 };
        at
    }

    /// Remove and return the minimum entry of a subtree.
    fn take_min(&mut self, at: u32) -> (u64, u32) {
        if self.node(at).left == NIL {
            let tid = self.node(at).tid;
            let right = self.node(at).right;
            return (tid, right);
        }
        let (tid, new_left) = self.take_min(self.node(at).left);
        self.nodes[at as usize].left = new_left;
        (tid, self.rebalance(at))
    }

    pub fn contains(&self, tid: Tid, src: &dyn ValueSource) -> bool {
        let mut at = self.root;
        while at != NIL {
            match self.cmp_entry(tid, at, src) {
                std::cmp::Ordering::Less => at = self.node(at).left,
                std::cmp::Ordering::Greater => at = self.node(at).right,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// TIDs whose value `v` satisfies `low <= v` and `v` within `high`,
    /// ascending in (value, TID) order.
    pub fn range(&self, low: &Value, high: Bound<&Value>, src: &dyn ValueSource) -> Vec<Tid> {
        let mut out = Vec::new();
        self.range_rec(self.root, low, high, src, &mut out);
        out
    }

    fn range_rec(&self, at: u32, low: &Value, high: Bound<&Value>, src: &dyn ValueSource, out: &mut Vec<Tid>) {
        if at == NIL {
            return;
        }
        let tid = Tid(self.node(at).tid);
        let v = src.value_at(tid);
        let above_low = v.cmp_same_type(low) != std::cmp::Ordering::Less;
        let below_high = match high {
            Bound::Unbounded => true,
            Bound::Included(h) => v.cmp_same_type(h) != std::cmp::Ordering::Greater,
            Bound::Excluded(h) => v.cmp_same_type(h) == std::cmp::Ordering::Less,
        };
        if above_low {
            self.range_rec(self.node(at).left, low, high, src, out);
        }
        if above_low && below_high {
            out.push(tid);
        }
        if below_high {
            self.range_rec(self.node(at).right, low, high, src, out);
        }
    }

    /// TIDs whose string value starts with `prefix`: the range
    /// `[prefix, successor(prefix))` where the successor increments the
    /// last byte, carrying (and shortening) on overflow. Compared bytewise,
    /// since the successor need not be valid UTF-8.
    pub fn prefix(&self, prefix: &str, src: &dyn ValueSource) -> Vec<Tid> {
        let succ = prefix_successor(prefix.as_bytes());
        let mut out = Vec::new();
        self.prefix_rec(self.root, prefix.as_bytes(), succ.as_deref(), src, &mut out);
        out
    }

    fn prefix_rec(&self, at: u32, low: &[u8], high_excl: Option<&[u8]>, src: &dyn ValueSource, out: &mut Vec<Tid>) {
        if at == NIL {
            return;
        }
        let tid = Tid(self.node(at).tid);
        let v = src.value_at(tid);
        let bytes = v.as_str().expect("prefix lookup over a string attribute").as_bytes();
        let above_low = bytes >= low;
        let below_high = high_excl.is_none_or(|h| bytes < h);
        if above_low {
            self.prefix_rec(self.node(at).left, low, high_excl, src, out);
        }
        if above_low && below_high {
            out.push(tid);
        }
        if below_high {
            self.prefix_rec(self.node(at).right, low, high_excl, src, out);
        }
    }

    /// All entries in (value, TID) order.
    pub fn in_order(&self) -> Vec<Tid> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack = Vec::new();
        let mut at = self.root;
        while at != NIL || !stack.is_empty() {
            while at != NIL {
                stack.push(at);
                at = self.node(at).left;
            }
            at = stack.pop().unwrap();
            out.push(Tid(self.node(at).tid));
            at = self.node(at).right;
        }
        out
    }
}

/// Smallest byte string strictly greater than every string with this
/// prefix; `None` when no such bound exists (empty or all bytes 0xFF).
pub fn prefix_successor(prefix: &[u8]) -> Option<Vec<u8>> {
    let mut bytes = prefix.to_vec();
    while let Some(last) = bytes.pop() {
        if last < 0xFF {
            bytes.push(last + 1);
            return Some(bytes);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng as _, SeedableRng as _};
    use std::collections::BTreeSet;

    /// Test resolver: value = table[tid].
    struct Table(Vec<Value>);

    impl ValueSource for Table {
        fn value_at(&self, tid: Tid) -> Value {
            self.0[tid.0 as usize].clone()
        }
    }

    #[test]
    fn tie_break_by_tid() {
        let t = Table(vec![Value::Str("CCC".into()), Value::Str("BBB".into()), Value::Str("BBB".into())]);
        let mut idx = TidIndex::new();
        for i in [0, 1, 2] {
            idx.insert(Tid(i), &t).unwrap();
        }
        // Entry 1 compares less than entry 0: it references the smaller value.
        assert_eq!(idx.in_order(), vec![Tid(1), Tid(2), Tid(0)]);
        assert_eq!(idx.range(&Value::Str("BBB".into()), Bound::Included(&Value::Str("BBB".into())), &t), vec![Tid(1), Tid(2)]);
    }

    #[test]
    fn duplicate_insert_and_missing_delete() {
        let t = Table(vec![Value::Int32(5)]);
        let mut idx = TidIndex::new();
        idx.insert(Tid(0), &t).unwrap();
        assert!(matches!(idx.insert(Tid(0), &t), Err(Error::IndexEntryExists(_))));
        idx.remove(Tid(0), &t).unwrap();
        assert!(matches!(idx.remove(Tid(0), &t), Err(Error::IndexEntryMissing(_))));
        assert!(idx.is_empty());
    }

    #[test]
    fn prefix_successor_carries() {
        assert_eq!(prefix_successor(b"B").as_deref(), Some(b"C".as_slice()));
        assert_eq!(prefix_successor(b"AZ").as_deref(), Some(b"A[".as_slice()));
        assert_eq!(prefix_successor(b"A\xff").as_deref(), Some(b"B".as_slice()));
        assert_eq!(prefix_successor(b"\xff\xff"), None);
        assert_eq!(prefix_successor(b""), None);
    }

    #[test]
    fn random_ops_match_btreeset_oracle() {
        let mut rng = StdRng::seed_from_u64(0xa11);
        let values: Vec<Value> = (0..800).map(|_| Value::Int32(rng.gen_range(0..50))).collect();
        let t = Table(values.clone());
        let mut idx = TidIndex::new();
        let mut oracle: BTreeSet<(i32, u64)> = BTreeSet::new();
        for _ in 0..5_000 {
            let tid = rng.gen_range(0..800u64);
            let v = match values[tid as usize] {
                Value::Int32(v) => v,
                _ => unreachable!(),
            };
            if oracle.contains(&(v, tid)) {
                idx.remove(Tid(tid), &t).unwrap();
                oracle.remove(&(v, tid));
            } else {
                idx.insert(Tid(tid), &t).unwrap();
                oracle.insert((v, tid));
            }
            if oracle.len() % 97 == 0 {
                let got = idx.in_order();
                let expect: Vec<Tid> = oracle.iter().map(|&(_, t)| Tid(t)).collect();
                assert_eq!(got, expect);
            }
        }
        // Range agreement with a linear filter.
        let low = Value::Int32(10);
        let high = Value::Int32(30);
        let got = idx.range(&low, Bound::Included(&high), &t);
        let expect: Vec<Tid> =
            oracle.iter().filter(|&&(v, _)| (10..=30).contains(&v)).map(|&(_, t)| Tid(t)).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn prefix_lookup_matches_linear_filter() {
        let mut rng = StdRng::seed_from_u64(0xbee);
        let pool = ["Alpha", "Alto", "Beta", "Bell", "Gamma", "Al", "B"];
        let values: Vec<Value> =
            (0..2_000).map(|_| Value::Str(pool[rng.gen_range(0..pool.len())].into())).collect();
        let t = Table(values.clone());
        let mut idx = TidIndex::new();
        for i in 0..values.len() as u64 {
            idx.insert(Tid(i), &t).unwrap();
        }
        for prefix in ["Al", "B", "Bet", "Z", "Alpha"] {
            let got = idx.prefix(prefix, &t);
            let mut expect: Vec<(String, u64)> = values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.as_str().unwrap().starts_with(prefix))
                .map(|(i, v)| (v.as_str().unwrap().to_string(), i as u64))
                .collect();
            expect.sort();
            let expect: Vec<Tid> = expect.into_iter().map(|(_, i)| Tid(i)).collect();
            assert_eq!(got, expect, "prefix {prefix}");
        }
        assert!(idx.prefix("nothing", &t).is_empty());
    }

    #[test]
    fn entry_bytes_independent_of_value_width() {
        let short = Table((0..1_000).map(|i| Value::Str(format!("s{i}"))).collect());
        let long = Table((0..1_000).map(|i| Value::Str(format!("{:0>240}", i))).collect());
        let mut a = TidIndex::new();
        let mut b = TidIndex::new();
        for i in 0..1_000u64 {
            a.insert(Tid(i), &short).unwrap();
            b.insert(Tid(i), &long).unwrap();
        }
        assert_eq!(a.bytes_per_entry(), b.bytes_per_entry());
        assert!(a.bytes_per_entry() >= 8.0 && a.bytes_per_entry() <= 48.0);
    }
}

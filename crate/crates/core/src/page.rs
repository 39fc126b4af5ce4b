//! Page buffers, descriptors and per-vector page tables.
//!
//! A vector's bytes live in a table of pages. Regular pages back mutable
//! (hot/cooling/cold) vectors, huge pages back frozen ones. Buffers store
//! 64-bit words accessed with relaxed atomics: the single partition writer
//! mutates them in place while the freeze worker may read the same chunk
//! concurrently. A torn multi-byte read during that race is tolerated by
//! the optimistic freeze protocol, which re-reads every dirtied page.
//!
//! Snapshots clone descriptor *tables*, never buffers; a buffer is copied
//! only when a writer first touches a page that an earlier epoch may still
//! see (copy-on-write). Frozen (huge) pages are never written, hence never
//! copied.

use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};
use std::sync::Arc;

/// Engine-wide census of live page buffers; tests audit reclamation with it.
#[derive(Debug, Default)]
pub struct PageCensus {
    live: AtomicI64,
}

impl PageCensus {
    pub fn live_pages(&self) -> i64 {
        self.live.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PageClass {
    Regular,
    Huge,
}

/// One page worth of bytes, stored as relaxed-atomic words.
#[derive(Debug)]
pub struct PageBuf {
    words: Box<[AtomicU64]>,
    bytes: usize,
    census: Arc<PageCensus>,
}

impl PageBuf {
    pub fn zeroed(bytes: usize, census: Arc<PageCensus>) -> Arc<Self> {
        let words = (0..bytes.div_ceil(8)).map(|_| AtomicU64::new(0)).collect();
        census.live.fetch_add(1, Ordering::SeqCst);
        Arc::new(Self { words, bytes, census })
    }

    pub fn len(&self) -> usize {
        self.bytes
    }

    pub fn is_empty(&self) -> bool {
        self.bytes == 0
    }

    /// Bytewise copy of this page.
    pub fn duplicate(&self) -> Arc<Self> {
        let copy = Self::zeroed(self.bytes, self.census.clone());
        for (i, w) in self.words.iter().enumerate() {
            copy.words[i].store(w.load(Ordering::Relaxed), Ordering::Relaxed);
        }
        copy
    }

    pub fn read(&self, offset: usize, out: &mut [u8]) {
        debug_assert!(offset + out.len() <= self.bytes);
        let mut pos = 0;
        while pos < out.len() {
            let byte = offset + pos;
            let word = self.words[byte / 8].load(Ordering::Relaxed).to_le_bytes();
            let start = byte % 8;
            let take = (8 - start).min(out.len() - pos);
            out[pos..pos + take].copy_from_slice(&word[start..start + take]);
            pos += take;
        }
    }

    /// Write bytes. Word boundaries are handled with read-modify-write; only
    /// the single partition writer ever stores into a live page, so the
    /// read-modify-write cannot lose concurrent updates.
    pub fn write(&self, offset: usize, data: &[u8]) {
        debug_assert!(offset + data.len() <= self.bytes);
        let mut pos = 0;
        while pos < data.len() {
            let byte = offset + pos;
            let idx = byte / 8;
            let start = byte % 8;
            let take = (8 - start).min(data.len() - pos);
            if take == 8 {
                let w = u64::from_le_bytes(data[pos..pos + 8].try_into().unwrap());
                self.words[idx].store(w, Ordering::Relaxed);
            } else {
                let mut word = self.words[idx].load(Ordering::Relaxed).to_le_bytes();
                word[start..start + take].copy_from_slice(&data[pos..pos + take]);
                self.words[idx].store(u64::from_le_bytes(word), Ordering::Relaxed);
            }
            pos += take;
        }
    }

    /// Stable content fingerprint (FNV-1a over the byte image).
    pub fn fingerprint(&self) -> u64 {
        let mut buf = vec![0u8; self.bytes];
        self.read(0, &mut buf);
        fnv1a(&buf)
    }
}

impl Drop for PageBuf {
    fn drop(&mut self) {
        self.census.live.fetch_sub(1, Ordering::SeqCst);
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct PageDescriptor {
    pub buf: Arc<PageBuf>,
    /// Engine epoch of the last copy (or creation). A descriptor with an
    /// epoch older than a live snapshot is shared and must not be written.
    pub epoch: u64,
    pub class: PageClass,
}

/// An ordered list of pages jointly backing one vector's bytes.
#[derive(Debug, Clone)]
pub struct PageTable {
    pages: Vec<PageDescriptor>,
    page_bytes: usize,
    total_bytes: usize,
}

impl PageTable {
    /// Allocate `total_bytes` of zeroed pages of `page_bytes` each (the last
    /// page holds the remainder).
    pub fn alloc(
        total_bytes: usize,
        page_bytes: usize,
        class: PageClass,
        epoch: u64,
        census: &Arc<PageCensus>,
    ) -> Self {
        let count = total_bytes.div_ceil(page_bytes);
        let pages = (0..count)
            .map(|i| {
                let span = page_bytes.min(total_bytes - i * page_bytes);
                PageDescriptor { buf: PageBuf::zeroed(span, census.clone()), epoch, class }
            })
            .collect();
        Self { pages, page_bytes, total_bytes }
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn total_bytes(&self) -> usize {
        self.total_bytes
    }

    pub fn page_bytes(&self) -> usize {
        self.page_bytes
    }

    pub fn descriptor(&self, index: usize) -> &PageDescriptor {
        &self.pages[index]
    }

    pub fn descriptors(&self) -> &[PageDescriptor] {
        &self.pages
    }

    pub fn replace_descriptor(&mut self, index: usize, desc: PageDescriptor) {
        self.pages[index] = desc;
    }

    /// Page index containing a byte offset.
    pub fn page_of(&self, byte_offset: usize) -> usize {
        byte_offset / self.page_bytes
    }

    /// Inclusive page index range touched by `[offset, offset+len)`.
    pub fn pages_touched(&self, offset: usize, len: usize) -> (usize, usize) {
        debug_assert!(len > 0);
        (offset / self.page_bytes, (offset + len - 1) / self.page_bytes)
    }

    pub fn read(&self, offset: usize, out: &mut [u8]) {
        debug_assert!(offset + out.len() <= self.total_bytes);
        let mut pos = 0;
        while pos < out.len() {
            let byte = offset + pos;
            let page = byte / self.page_bytes;
            let within = byte % self.page_bytes;
            let take = (self.page_bytes - within).min(out.len() - pos);
            self.pages[page].buf.read(within, &mut out[pos..pos + take]);
            pos += take;
        }
    }

    /// Write without any copy-on-write check; callers resolve sharing first.
    pub fn write(&self, offset: usize, data: &[u8]) {
        debug_assert!(offset + data.len() <= self.total_bytes);
        let mut pos = 0;
        while pos < data.len() {
            let byte = offset + pos;
            let page = byte / self.page_bytes;
            let within = byte % self.page_bytes;
            let take = (self.page_bytes - within).min(data.len() - pos);
            debug_assert!(
                self.pages[page].class == PageClass::Regular,
                "write through a huge (frozen) page"
            );
            self.pages[page].buf.write(within, &data[pos..pos + take]);
            pos += take;
        }
    }

    /// Concatenated fingerprint of all pages.
    pub fn fingerprint(&self) -> u64 {
        let mut acc = 0xcbf2_9ce4_8422_2325u64;
        for p in &self.pages {
            acc = acc.rotate_left(7) ^ p.buf.fingerprint();
        }
        acc
    }
}

/// Build a page table over existing bytes (used when freezing).
pub fn table_from_bytes(
    bytes: &[u8],
    page_bytes: usize,
    class: PageClass,
    epoch: u64,
    census: &Arc<PageCensus>,
) -> PageTable {
    let table = PageTable::alloc(bytes.len(), page_bytes, class, epoch, census);
    if !bytes.is_empty() {
        let mut pos = 0;
        while pos < bytes.len() {
            let take = page_bytes.min(bytes.len() - pos);
            table.descriptor(pos / page_bytes).buf.write(0, &bytes[pos..pos + take]);
            pos += take;
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn census() -> Arc<PageCensus> {
        Arc::new(PageCensus::default())
    }

    #[test]
    fn read_write_straddles_words_and_pages() {
        let c = census();
        let t = PageTable::alloc(100, 16, PageClass::Regular, 1, &c);
        assert_eq!(t.page_count(), 7);
        let data: Vec<u8> = (0..37).collect();
        t.write(13, &data); // crosses page 0..3 and word boundaries
        let mut out = vec![0u8; 37];
        t.read(13, &mut out);
        assert_eq!(out, data);
        let mut head = vec![0u8; 13];
        t.read(0, &mut head);
        assert!(head.iter().all(|&b| b == 0));
    }

    #[test]
    fn census_tracks_buffers() {
        let c = census();
        let t = PageTable::alloc(64, 16, PageClass::Regular, 1, &c);
        assert_eq!(c.live_pages(), 4);
        let dup = t.descriptor(0).buf.duplicate();
        assert_eq!(c.live_pages(), 5);
        drop(dup);
        drop(t);
        assert_eq!(c.live_pages(), 0);
    }

    #[test]
    fn pages_touched_spans() {
        let c = census();
        let t = PageTable::alloc(64, 16, PageClass::Regular, 1, &c);
        assert_eq!(t.pages_touched(0, 1), (0, 0));
        assert_eq!(t.pages_touched(15, 2), (0, 1));
        assert_eq!(t.pages_touched(16, 16), (1, 1));
        assert_eq!(t.pages_touched(5, 40), (0, 2));
    }

    #[test]
    fn duplicate_preserves_bytes() {
        let c = census();
        let t = PageTable::alloc(32, 32, PageClass::Regular, 1, &c);
        t.write(3, b"hello world");
        let dup = t.descriptor(0).buf.duplicate();
        let mut out = vec![0u8; 11];
        dup.read(3, &mut out);
        assert_eq!(&out, b"hello world");
        assert_eq!(dup.fingerprint(), t.descriptor(0).buf.fingerprint());
    }

    #[test]
    fn table_from_bytes_round_trips() {
        let c = census();
        let bytes: Vec<u8> = (0..200u8).collect();
        let t = table_from_bytes(&bytes, 64, PageClass::Huge, 3, &c);
        assert_eq!(t.page_count(), 4);
        assert_eq!(t.total_bytes(), 200);
        let mut out = vec![0u8; 200];
        t.read(0, &mut out);
        assert_eq!(out, bytes);
    }
}

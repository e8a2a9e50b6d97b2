//! Binary min-heap over run-tagged records that counts key comparisons.

use std::cmp::Ordering;

use super::record::Record;

pub(crate) struct Entry {
    pub run: u64,
    pub rec: Record,
}

pub(crate) struct RunHeap {
    items: Vec<Entry>,
    /// First key column compared; earlier columns are known equal.
    from: usize,
    pub comparisons: u64,
}

impl RunHeap {
    pub fn with_capacity(cap: usize, from: usize) -> Self {
        Self {
            items: Vec::with_capacity(cap.min(4096)),
            from,
            comparisons: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// Appends without restoring heap order; call [`RunHeap::heapify`] after.
    pub fn push_unordered(&mut self, e: Entry) {
        self.items.push(e);
    }

    pub fn top(&self) -> Option<&Entry> {
        self.items.first()
    }

    fn less(&mut self, a: usize, b: usize) -> bool {
        let (x, y) = (&self.items[a], &self.items[b]);
        match x.run.cmp(&y.run) {
            Ordering::Equal => {
                self.comparisons += 1;
                x.rec.cmp_from(&y.rec, self.from) == Ordering::Less
            }
            o => o == Ordering::Less,
        }
    }

    /// Floyd's bottom-up heap construction.
    pub fn heapify(&mut self) {
        let n = self.items.len();
        for i in (0..n / 2).rev() {
            self.sift_down(i);
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.items.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                return;
            }
            let r = l + 1;
            let c = if r < n && self.less(r, l) { r } else { l };
            if self.less(c, i) {
                self.items.swap(c, i);
                i = c;
            } else {
                return;
            }
        }
    }

    pub fn pop(&mut self) -> Option<Entry> {
        if self.items.is_empty() {
            return None;
        }
        let last = self.items.len() - 1;
        self.items.swap(0, last);
        let out = self.items.pop();
        self.sift_down(0);
        out
    }

    /// Replaces the minimum with `e` and returns the old minimum.
    pub fn replace_top(&mut self, e: Entry) -> Entry {
        let out = std::mem::replace(&mut self.items[0], e);
        self.sift_down(0);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extsort::record::Value;

    fn rec(v: i64) -> Record {
        Record::new(vec![Value::Int(v)], vec![])
    }

    #[test]
    fn pops_in_run_then_key_order() {
        let mut h = RunHeap::with_capacity(8, 0);
        for (run, v) in [(1, 0), (0, 5), (0, 3), (1, -4), (0, 9)] {
            h.push_unordered(Entry { run, rec: rec(v) });
        }
        h.heapify();
        let mut out = Vec::new();
        while let Some(e) = h.pop() {
            out.push((e.run, e.rec.key[0].clone()));
        }
        let want: Vec<(u64, Value)> = [(0, 3), (0, 5), (0, 9), (1, -4), (1, 0)]
            .into_iter()
            .map(|(r, v)| (r, Value::Int(v)))
            .collect();
        assert_eq!(out, want);
        assert!(h.comparisons > 0);
    }

    #[test]
    fn replace_top_keeps_order() {
        let mut h = RunHeap::with_capacity(4, 0);
        for v in [4, 2, 8] {
            h.push_unordered(Entry { run: 0, rec: rec(v) });
        }
        h.heapify();
        let old = h.replace_top(Entry { run: 0, rec: rec(1) });
        assert_eq!(old.rec, rec(2));
        assert_eq!(h.top().unwrap().rec, rec(1));
    }
}

//! Tournament (loser) tree for k-way merging.

use std::cmp::Ordering;

use super::record::Record;

/// Merges `k` sorted sources. Slot `k` in `tree` is a virtual minimum used
/// only while the tree is built. Ties go to the lower source index.
pub(crate) struct LoserTree {
    tree: Vec<usize>,
    heads: Vec<Option<Record>>,
    from: usize,
    pub comparisons: u64,
}

impl LoserTree {
    pub fn new(heads: Vec<Option<Record>>, from: usize) -> Self {
        let k = heads.len();
        let mut t = Self {
            tree: vec![k; k.max(1)],
            heads,
            from,
            comparisons: 0,
        };
        for i in (0..k).rev() {
            t.adjust(i);
        }
        t
    }

    fn beats(&mut self, a: usize, b: usize) -> bool {
        let k = self.heads.len();
        if a == k {
            return true;
        }
        if b == k {
            return false;
        }
        match (&self.heads[a], &self.heads[b]) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(x), Some(y)) => {
                self.comparisons += 1;
                match x.cmp_from(y, self.from) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => a < b,
                }
            }
        }
    }

    fn adjust(&mut self, leaf: usize) {
        let k = self.heads.len();
        let mut winner = leaf;
        let mut t = (leaf + k) / 2;
        while t > 0 {
            if self.beats(self.tree[t], winner) {
                std::mem::swap(&mut self.tree[t], &mut winner);
            }
            t /= 2;
        }
        self.tree[0] = winner;
    }

    /// Index of the source holding the current minimum, if any remain.
    pub fn winner(&self) -> Option<usize> {
        let w = *self.tree.first()?;
        self.heads.get(w)?.as_ref().map(|_| w)
    }

    /// Takes the current minimum, refilling its slot with `next`.
    pub fn pop_and_refill(&mut self, next: Option<Record>) -> Option<Record> {
        let w = self.winner()?;
        let out = std::mem::replace(&mut self.heads[w], next);
        self.adjust(w);
        out
    }
}

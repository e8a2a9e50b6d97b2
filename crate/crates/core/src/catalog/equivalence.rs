//! Attribute equivalence classes induced by equality join predicates.

use std::collections::{BTreeMap, HashMap};

use crate::order::{Attribute, AttributeSet};

#[derive(Debug, Clone, Default)]
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn push(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        self.size.push(1);
        id
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Classes of attributes equated directly or transitively.
///
/// The representative `H(a)` of a class is its lexicographically least
/// member. Attributes never registered are their own singleton class.
#[derive(Debug, Clone, Default)]
pub struct EquivalenceClasses {
    ids: HashMap<Attribute, usize>,
    attrs: Vec<Attribute>,
    uf: UnionFind,
    reps: HashMap<Attribute, Attribute>,
}

impl EquivalenceClasses {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_predicates<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = &'a (Attribute, Attribute)>,
    {
        let mut eq = Self::new();
        for (a, b) in pairs {
            eq.union(a, b);
        }
        eq
    }

    fn id(&mut self, a: &Attribute) -> usize {
        if let Some(&id) = self.ids.get(a) {
            return id;
        }
        let id = self.uf.push();
        self.ids.insert(a.clone(), id);
        self.attrs.push(a.clone());
        id
    }

    /// Registers `a` as (at least) a singleton class.
    pub fn add(&mut self, a: &Attribute) {
        self.id(a);
        self.refresh();
    }

    pub fn union(&mut self, a: &Attribute, b: &Attribute) {
        let (x, y) = (self.id(a), self.id(b));
        self.uf.union(x, y);
        self.refresh();
    }

    fn refresh(&mut self) {
        let mut least: HashMap<usize, &Attribute> = HashMap::new();
        for (i, a) in self.attrs.iter().enumerate() {
            let root = self.uf.find(i);
            least
                .entry(root)
                .and_modify(|cur| {
                    if a < *cur {
                        *cur = a;
                    }
                })
                .or_insert(a);
        }
        self.reps = self
            .attrs
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), least[&self.uf.find(i)].clone()))
            .collect();
    }

    /// `H(a)`.
    pub fn representative(&self, a: &Attribute) -> Attribute {
        self.reps.get(a).cloned().unwrap_or_else(|| a.clone())
    }

    pub fn same_class(&self, a: &Attribute, b: &Attribute) -> bool {
        self.representative(a) == self.representative(b)
    }

    pub fn represent_set(&self, set: &AttributeSet) -> AttributeSet {
        set.iter().map(|a| self.representative(a)).collect()
    }

    /// Members of the class containing `a` (just `a` if unregistered).
    pub fn members(&self, a: &Attribute) -> AttributeSet {
        let rep = self.representative(a);
        let mut out: AttributeSet = self
            .reps
            .iter()
            .filter(|(_, r)| **r == rep)
            .map(|(m, _)| m.clone())
            .collect();
        out.insert(a.clone());
        out
    }

    /// All registered classes, keyed by representative.
    pub fn classes(&self) -> BTreeMap<Attribute, AttributeSet> {
        let mut out: BTreeMap<Attribute, AttributeSet> = BTreeMap::new();
        for (a, r) in &self.reps {
            out.entry(r.clone()).or_default().insert(a.clone());
        }
        out
    }
}

/// `{ H(a) : a appears in one of the predicates }`.
pub fn representative_join_set(
    predicates: &[(Attribute, Attribute)],
    eq: &EquivalenceClasses,
) -> AttributeSet {
    predicates
        .iter()
        .flat_map(|(a, b)| [eq.representative(a), eq.representative(b)])
        .collect()
}

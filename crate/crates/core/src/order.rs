//! Sort orders and the prefix algebra over them.
//!
//! A [`SortOrder`] is an ordered sequence of distinct [`Attribute`]s; the
//! empty sequence is the "no order" value. Sort direction is not modelled:
//! every order is ascending.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::OrderError;

/// A column, optionally qualified by a relation name or alias.
///
/// Equality and ordering are by the `(qualifier, column)` pair, case sensitive.
/// Unqualified attributes order before qualified ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Attribute {
    qualifier: Option<String>,
    column: String,
}

impl Attribute {
    pub fn new(qualifier: Option<&str>, column: &str) -> Result<Self, OrderError> {
        if column.is_empty() {
            return Err(OrderError::EmptyColumn);
        }
        if let Some(q) = qualifier {
            if q.is_empty() {
                return Err(OrderError::EmptyColumn);
            }
        }
        Ok(Self {
            qualifier: qualifier.map(str::to_owned),
            column: column.to_owned(),
        })
    }

    pub fn qualified(qualifier: &str, column: &str) -> Self {
        Self::new(Some(qualifier), column).expect("non-empty attribute name")
    }

    pub fn unqualified(column: &str) -> Self {
        Self::new(None, column).expect("non-empty attribute name")
    }

    pub fn qualifier(&self) -> Option<&str> {
        self.qualifier.as_deref()
    }

    pub fn column(&self) -> &str {
        &self.column
    }
}

impl FromStr for Attribute {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((q, c)) => Attribute::new(Some(q), c),
            None => Attribute::new(None, s),
        }
    }
}

impl TryFrom<String> for Attribute {
    type Error = OrderError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Attribute> for String {
    fn from(a: Attribute) -> String {
        a.to_string()
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{}.{}", q, self.column),
            None => f.write_str(&self.column),
        }
    }
}

/// An unordered set of attributes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeSet(BTreeSet<Attribute>);

impl AttributeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: &Attribute) -> bool {
        self.0.contains(a)
    }

    pub fn insert(&mut self, a: Attribute) -> bool {
        self.0.insert(a)
    }

    pub fn remove(&mut self, a: &Attribute) -> bool {
        self.0.remove(a)
    }

    /// Attributes in ascending `(qualifier, column)` order.
    pub fn iter(&self) -> impl Iterator<Item = &Attribute> + '_ {
        self.0.iter()
    }

    pub fn union(&self, other: &AttributeSet) -> AttributeSet {
        self.0.union(&other.0).cloned().collect()
    }

    pub fn intersection(&self, other: &AttributeSet) -> AttributeSet {
        self.0.intersection(&other.0).cloned().collect()
    }

    pub fn difference(&self, other: &AttributeSet) -> AttributeSet {
        self.0.difference(&other.0).cloned().collect()
    }

    pub fn is_subset(&self, other: &AttributeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &AttributeSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// The deterministic permutation of this set: ascending lexicographic
    /// order of `(qualifier, column)`.
    pub fn canonical_permutation(&self) -> SortOrder {
        SortOrder(self.0.iter().cloned().collect())
    }

    /// Every permutation of the set, in lexicographic order of the sequences.
    pub fn permutations(&self) -> Vec<SortOrder> {
        let items: Vec<Attribute> = self.0.iter().cloned().collect();
        let mut out = Vec::new();
        let mut used = vec![false; items.len()];
        let mut cur = Vec::with_capacity(items.len());
        permute(&items, &mut used, &mut cur, &mut out);
        out
    }
}

fn permute(items: &[Attribute], used: &mut [bool], cur: &mut Vec<Attribute>, out: &mut Vec<SortOrder>) {
    if cur.len() == items.len() {
        out.push(SortOrder(cur.clone()));
        return;
    }
    for i in 0..items.len() {
        if !used[i] {
            used[i] = true;
            cur.push(items[i].clone());
            permute(items, used, cur, out);
            cur.pop();
            used[i] = false;
        }
    }
}

impl FromIterator<Attribute> for AttributeSet {
    fn from_iter<I: IntoIterator<Item = Attribute>>(iter: I) -> Self {
        AttributeSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a AttributeSet {
    type Item = &'a Attribute;
    type IntoIter = std::collections::btree_set::Iter<'a, Attribute>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for AttributeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// An ordered sequence of distinct attributes.
///
/// Ordering between `SortOrder` values is lexicographic over the attribute
/// sequence (a strict prefix orders first); it is only used to make set
/// iteration deterministic and has no query-level meaning.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Attribute>", into = "Vec<Attribute>")]
pub struct SortOrder(Vec<Attribute>);

impl SortOrder {
    pub fn new(attrs: Vec<Attribute>) -> Result<Self, OrderError> {
        let mut seen = BTreeSet::new();
        for a in &attrs {
            if !seen.insert(a) {
                return Err(OrderError::DuplicateAttribute(a.to_string()));
            }
        }
        Ok(SortOrder(attrs))
    }

    /// The empty order.
    pub fn empty() -> Self {
        SortOrder(Vec::new())
    }

    /// Parses a list of `"REL.col"` / `"col"` names.
    pub fn parse<S: AsRef<str>>(names: &[S]) -> Result<Self, OrderError> {
        let attrs = names
            .iter()
            .map(|s| s.as_ref().parse())
            .collect::<Result<Vec<Attribute>, _>>()?;
        SortOrder::new(attrs)
    }

    pub fn attrs(&self) -> &[Attribute] {
        &self.0
    }

    pub fn attr_set(&self) -> AttributeSet {
        self.0.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: &Attribute) -> bool {
        self.0.contains(a)
    }

    /// True iff `other` is a prefix of `self`.
    pub fn subsumes(&self, other: &SortOrder) -> bool {
        other.0.len() <= self.0.len() && self.0[..other.0.len()] == other.0[..]
    }

    /// True iff `self` is a prefix of `other` and shorter than it.
    pub fn is_strict_prefix_of(&self, other: &SortOrder) -> bool {
        self.0.len() < other.0.len() && other.subsumes(self)
    }

    /// Longest common prefix.
    pub fn lcp(&self, other: &SortOrder) -> SortOrder {
        let n = self
            .0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count();
        SortOrder(self.0[..n].to_vec())
    }

    /// Length of the longest common prefix, without allocating.
    pub fn lcp_len(&self, other: &SortOrder) -> usize {
        self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count()
    }

    /// Longest prefix whose attributes all belong to `set`.
    pub fn prefix_in(&self, set: &AttributeSet) -> SortOrder {
        let n = self.0.iter().take_while(|a| set.contains(a)).count();
        SortOrder(self.0[..n].to_vec())
    }

    pub fn truncate(&self, len: usize) -> SortOrder {
        SortOrder(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn concat(&self, other: &SortOrder) -> Result<SortOrder, OrderError> {
        if let Some(a) = other.0.iter().find(|a| self.0.contains(a)) {
            return Err(OrderError::DuplicateAttribute(a.to_string()));
        }
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Ok(SortOrder(v))
    }

    /// The suffix `s` such that `prefix + s == self`.
    pub fn subtract(&self, prefix: &SortOrder) -> Result<SortOrder, OrderError> {
        if !self.subsumes(prefix) {
            return Err(OrderError::NotAPrefix {
                order: self.to_string(),
                prefix: prefix.to_string(),
            });
        }
        Ok(SortOrder(self.0[prefix.0.len()..].to_vec()))
    }

    /// Rewrites each attribute through `map`, dropping later repeats.
    pub fn map_attrs(&self, mut map: impl FnMut(&Attribute) -> Attribute) -> SortOrder {
        let mut out: Vec<Attribute> = Vec::with_capacity(self.0.len());
        for a in &self.0 {
            let m = map(a);
            if !out.contains(&m) {
                out.push(m);
            }
        }
        SortOrder(out)
    }
}

impl TryFrom<Vec<Attribute>> for SortOrder {
    type Error = OrderError;

    fn try_from(v: Vec<Attribute>) -> Result<Self, Self::Error> {
        SortOrder::new(v)
    }
}

impl From<SortOrder> for Vec<Attribute> {
    fn from(o: SortOrder) -> Self {
        o.0
    }
}

impl fmt::Display for SortOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Fixes how the "arbitrary" permutation of a set is chosen.
///
/// Attributes listed in `rank` come first, in the listed order; everything
/// else follows in lexicographic order. An empty rank is plain
/// [`AttributeSet::canonical_permutation`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PermutationRule {
    rank: Vec<Attribute>,
}

impl PermutationRule {
    pub fn lexicographic() -> Self {
        Self::default()
    }

    pub fn ranked(rank: Vec<Attribute>) -> Self {
        Self { rank }
    }

    pub fn rank(&self) -> &[Attribute] {
        &self.rank
    }

    pub fn permute(&self, set: &AttributeSet) -> SortOrder {
        if self.rank.is_empty() {
            return set.canonical_permutation();
        }
        let mut out: Vec<Attribute> = self
            .rank
            .iter()
            .filter(|a| set.contains(a))
            .cloned()
            .collect();
        for a in set.iter() {
            if !out.contains(a) {
                out.push(a.clone());
            }
        }
        SortOrder(out)
    }

    /// `prefix + ⟨set − attrs(prefix)⟩`.
    pub fn extend(&self, prefix: &SortOrder, set: &AttributeSet) -> SortOrder {
        let rest = set.difference(&prefix.attr_set());
        let mut v = prefix.0.clone();
        v.extend(self.permute(&rest).0);
        SortOrder(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(names: &[&str]) -> SortOrder {
        SortOrder::parse(names).unwrap()
    }

    fn s(names: &[&str]) -> AttributeSet {
        names.iter().map(|n| n.parse().unwrap()).collect()
    }

    #[test]
    fn subsumes_examples() {
        assert!(o(&["a", "b", "c"]).subsumes(&o(&["a", "b"])));
        assert!(o(&["a", "b"]).subsumes(&o(&["a", "b"])));
        assert!(!o(&["a", "b"]).subsumes(&o(&["b"])));
        assert!(o(&["a"]).subsumes(&SortOrder::empty()));
    }

    #[test]
    fn lcp_examples() {
        assert_eq!(o(&["a", "b", "c"]).lcp(&o(&["a", "b", "d"])), o(&["a", "b"]));
        assert_eq!(o(&["a"]).lcp(&o(&["b"])), SortOrder::empty());
        assert_eq!(o(&["m", "co", "c", "y"]).lcp(&o(&["m", "y"])), o(&["m"]));
    }

    #[test]
    fn prefix_in_examples() {
        assert_eq!(o(&["m", "co", "c", "y"]).prefix_in(&s(&["m", "y"])), o(&["m"]));
        assert_eq!(
            o(&["y", "co", "c", "m"]).prefix_in(&s(&["y", "co", "c", "m"])),
            o(&["y", "co", "c", "m"])
        );
        assert_eq!(o(&["a", "b"]).prefix_in(&AttributeSet::new()), SortOrder::empty());
    }

    #[test]
    fn concat_and_subtract() {
        assert_eq!(o(&["a"]).concat(&o(&["b", "c"])).unwrap(), o(&["a", "b", "c"]));
        assert_eq!(SortOrder::empty().concat(&o(&["x"])).unwrap(), o(&["x"]));
        assert!(matches!(
            o(&["a"]).concat(&o(&["a"])),
            Err(OrderError::DuplicateAttribute(_))
        ));
        assert_eq!(o(&["a", "b", "c"]).subtract(&o(&["a"])).unwrap(), o(&["b", "c"]));
        assert_eq!(o(&["a", "b"]).subtract(&o(&["a", "b"])).unwrap(), SortOrder::empty());
        assert!(matches!(
            o(&["a", "b"]).subtract(&o(&["b"])),
            Err(OrderError::NotAPrefix { .. })
        ));
    }

    #[test]
    fn canonical_permutation_examples() {
        assert_eq!(s(&["c", "a", "b"]).canonical_permutation(), o(&["a", "b", "c"]));
        assert_eq!(AttributeSet::new().canonical_permutation(), SortOrder::empty());
        assert_eq!(s(&["z"]).canonical_permutation(), o(&["z"]));
    }

    #[test]
    fn duplicate_attribute_rejected() {
        assert!(SortOrder::parse(&["a", "b", "a"]).is_err());
        assert!("".parse::<Attribute>().is_err());
        assert!(".x".parse::<Attribute>().is_err());
    }

    #[test]
    fn qualified_parsing_and_json() {
        let a: Attribute = "lineitem.l_suppkey".parse().unwrap();
        assert_eq!(a.qualifier(), Some("lineitem"));
        assert_eq!(a.column(), "l_suppkey");
        let ord = o(&["R.a", "b"]);
        let js = serde_json::to_string(&ord).unwrap();
        assert_eq!(js, r#"["R.a","b"]"#);
        assert_eq!(serde_json::from_str::<SortOrder>(&js).unwrap(), ord);
        assert_eq!(serde_json::to_string(&SortOrder::empty()).unwrap(), "[]");
        assert!(serde_json::from_str::<SortOrder>(r#"["a","a"]"#).is_err());
    }

    #[test]
    fn permutations_are_complete_and_sorted() {
        let p = s(&["a", "b", "c"]).permutations();
        assert_eq!(p.len(), 6);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(AttributeSet::new().permutations(), vec![SortOrder::empty()]);
    }

    #[test]
    fn ranked_rule_puts_ranked_first() {
        let rule = PermutationRule::ranked(vec!["co".parse().unwrap(), "c".parse().unwrap()]);
        assert_eq!(rule.permute(&s(&["c", "co", "m"])), o(&["co", "c", "m"]));
        assert_eq!(rule.extend(&o(&["y"]), &s(&["y", "c", "co", "m"])), o(&["y", "co", "c", "m"]));
        assert_eq!(
            PermutationRule::lexicographic().permute(&s(&["c", "co", "m"])),
            o(&["c", "co", "m"])
        );
    }
}

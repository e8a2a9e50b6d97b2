//! Favorable orders: the bottom-up approximation (afm), the interesting
//! orders tried at a sort-based operator, the exact minimal set for small
//! expressions, and the mapping onto parameter orders for nested queries.
//!
//! Every order here is in representative space.

use std::collections::{BTreeMap, BTreeSet};

use crate::catalog::{ExprKind, NodeId, QueryTree};
use crate::cost::{sort_cost_full, sort_cost_partial, CostParams};
use crate::error::Error;
use crate::optimizer::{Optimizer, OrderSource};
use crate::order::{Attribute, AttributeSet, PermutationRule, SortOrder};

pub type OrderSet = BTreeSet<SortOrder>;

/// Computes afm for every node of `tree`, indexed by node id.
pub fn afm(tree: &QueryTree) -> Vec<OrderSet> {
    let rule = tree.rule();
    let mut out: Vec<OrderSet> = Vec::with_capacity(tree.nodes().len());
    for node in tree.nodes() {
        let set = match &node.kind {
            ExprKind::Base { access, .. } => access
                .iter()
                .map(|a| a.order.clone())
                .filter(|o| !o.is_empty())
                .collect(),
            ExprKind::Select { .. } => out[node.children[0]].clone(),
            ExprKind::Project { .. } => out[node.children[0]]
                .iter()
                .map(|o| o.prefix_in(&node.rep_schema))
                .filter(|o| !o.is_empty())
                .collect(),
            ExprKind::Join { join_set, .. } => {
                let t: OrderSet = out[node.children[0]]
                    .union(&out[node.children[1]])
                    .cloned()
                    .collect();
                let mut set = extend_all(&t, join_set, rule);
                set.extend(t);
                set
            }
            ExprKind::GroupBy { attrs, .. } => {
                let l = tree.equivalence().represent_set(attrs);
                extend_all(&out[node.children[0]], &l, rule)
            }
        };
        out.push(set);
    }
    out
}

/// `{ o ∧ s + ⟨s − attrs(o ∧ s)⟩ : o ∈ orders }`, with the bare `⟨s⟩`
/// added only when no input order shares a prefix with `s`.
fn extend_all(orders: &OrderSet, s: &AttributeSet, rule: &PermutationRule) -> OrderSet {
    let prefixes: OrderSet = orders
        .iter()
        .map(|o| o.prefix_in(s))
        .filter(|p| !p.is_empty())
        .collect();
    if prefixes.is_empty() {
        return [rule.permute(s)].into_iter().collect();
    }
    prefixes.iter().map(|p| rule.extend(p, s)).collect()
}

/// Interesting orders `I(e, o)` over the attribute set `s` of a join
/// (or the grouping set of a group-by): restrict every input favorable
/// order and the required order to `s`, drop orders that are strict
/// prefixes of others, and extend the rest to full permutations of `s`.
pub fn interesting_orders<'a>(
    s: &AttributeSet,
    required: &SortOrder,
    inputs: impl IntoIterator<Item = &'a OrderSet>,
    rule: &PermutationRule,
) -> OrderSet {
    let mut t: OrderSet = inputs
        .into_iter()
        .flat_map(|set| set.iter().map(|o| o.prefix_in(s)))
        .collect();
    t.insert(required.prefix_in(s));
    let kept: Vec<&SortOrder> = t
        .iter()
        .filter(|o1| !t.iter().any(|o2| o1.is_strict_prefix_of(o2)))
        .collect();
    kept.into_iter().map(|o| rule.extend(o, s)).collect()
}

/// Largest number of orders [`ford_min_exact`] will enumerate.
pub const FORD_MIN_LIMIT: u128 = 100_000;

/// Number of orders over `n` attributes, including the empty one.
pub fn order_count(n: usize) -> u128 {
    let mut total: u128 = 1;
    let mut term: u128 = 1;
    for k in 0..n {
        term = term.saturating_mul((n - k) as u128);
        total = total.saturating_add(term);
    }
    total
}

/// Every order over `set` (every permutation of every non-empty subset),
/// shortest first.
pub fn all_orders(set: &AttributeSet) -> Vec<SortOrder> {
    let items: Vec<Attribute> = set.iter().cloned().collect();
    let mut layer = vec![SortOrder::empty()];
    let mut out = Vec::new();
    for _ in 0..items.len() {
        let mut next = Vec::new();
        for o in &layer {
            for a in &items {
                if !o.contains(a) {
                    let mut v = o.attrs().to_vec();
                    v.push(a.clone());
                    next.push(SortOrder::new(v).expect("fresh attribute"));
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// The exact minimal favorable order set of `node`, by enumerating every
/// order over its schema and costing each with the exhaustive optimizer.
pub fn ford_min_exact(tree: &QueryTree, node: NodeId, params: &CostParams<f64>) -> Result<OrderSet, Error> {
    let mut opt = Optimizer::new(tree, *params, OrderSource::Exhaustive);
    ford_min_with(&mut opt, node)
}

pub(crate) fn ford_min_with(opt: &mut Optimizer<'_>, node: NodeId) -> Result<OrderSet, Error> {
    let tree = opt.tree();
    let params = *opt.params();
    let expr = tree.node(node);
    let count = order_count(expr.rep_schema.len());
    if count > FORD_MIN_LIMIT {
        return Err(Error::TooLarge(count));
    }
    let base = opt.cbp(node, &SortOrder::empty())?.total;
    let full = sort_cost_full(expr.rows, expr.blocks, &params).total;
    let mut cbp: BTreeMap<SortOrder, f64> = BTreeMap::new();
    for o in all_orders(&expr.rep_schema) {
        let c = opt.cbp(node, &o)?.total;
        if base + full - c > 1e-9 * (base + full).max(1.0) {
            cbp.insert(o, c);
        }
    }
    let mut minimal: OrderSet = cbp.keys().cloned().collect();
    for (o, &c) in &cbp {
        for len in 1..o.len() {
            let p = o.truncate(len);
            let Some(&cp) = cbp.get(&p) else { continue };
            let d = tree.distinct(node, &p.attr_set());
            let coe = sort_cost_partial(expr.rows, expr.blocks, d, &p, o, &params).total;
            if close(cp + coe, c) {
                minimal.remove(o);
            }
            if close(cp, c) {
                minimal.remove(&p);
            }
        }
    }
    Ok(minimal)
}

/// Orders on parameters that make an inner expression cheap to evaluate
/// repeatedly, plus the outer side's favorable orders on the parameters it
/// binds (`bound`).
///
/// `bindings` pairs an inner attribute with the parameter it is equated
/// to. Each inner order contributes its longest prefix of bound
/// attributes, rewritten in parameter names.
pub fn parameter_sort_orders(
    inner_afm: &OrderSet,
    bindings: &[(Attribute, Attribute)],
    outer_afm: &OrderSet,
    bound: &AttributeSet,
) -> OrderSet {
    let mut out = OrderSet::new();
    for o in inner_afm {
        let mut params: Vec<Attribute> = Vec::new();
        for a in o.attrs() {
            match bindings.iter().find(|(x, _)| x == a) {
                Some((_, p)) if !params.contains(p) => params.push(p.clone()),
                _ => break,
            }
        }
        if !params.is_empty() {
            out.insert(SortOrder::new(params).expect("distinct parameters"));
        }
    }
    out.extend(
        outer_afm
            .iter()
            .map(|o| o.prefix_in(bound))
            .filter(|o| !o.is_empty()),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Catalog, QueryNode, QuerySpec};

    fn o(names: &[&str]) -> SortOrder {
        SortOrder::parse(names).unwrap()
    }

    fn set(names: &[&str]) -> AttributeSet {
        names.iter().map(|n| n.parse().unwrap()).collect()
    }

    fn orders(list: &[&[&str]]) -> OrderSet {
        list.iter().map(|l| o(l)).collect()
    }

    fn catalog(relation: &str) -> Catalog {
        Catalog::from_json(&format!(
            r#"{{"block_size": 100, "memory_blocks": 10, "relations": [{relation}]}}"#
        ))
        .unwrap()
    }

    fn scan(c: &Catalog) -> QueryTree {
        QueryTree::build(&QuerySpec::new(QueryNode::relation("r"), SortOrder::empty()), c).unwrap()
    }

    #[test]
    fn base_rule_takes_clustering_and_covering_indices() {
        let c = catalog(
            r#"{"name": "r", "columns": ["a", "b", "c"], "tuples": 1000, "blocks": 50,
                "avg_tuple_bytes": 5, "clustering": ["r.a"],
                "indices": [{"key": ["r.b", "r.c"], "include": ["r.a"]}, {"key": ["r.c"]}]}"#,
        );
        let t = scan(&c);
        assert_eq!(afm(&t)[0], orders(&[&["r.a"], &["r.b", "r.c"]]));
    }

    #[test]
    fn project_rule_keeps_longest_prefix() {
        let c = catalog(
            r#"{"name": "r", "columns": ["a", "b", "c"], "tuples": 1000, "blocks": 50,
                "avg_tuple_bytes": 5, "clustering": ["r.a", "r.b", "r.c"]}"#,
        );
        let q = QuerySpec::new(
            QueryNode::Project {
                input: Box::new(QueryNode::relation("r")),
                attrs: vec!["r.a".parse().unwrap(), "r.c".parse().unwrap()],
            },
            SortOrder::empty(),
        );
        let t = QueryTree::build(&q, &c).unwrap();
        assert_eq!(afm(&t)[1], orders(&[&["r.a"]]));
    }

    #[test]
    fn interesting_orders_fallback_and_dominance() {
        let rule = PermutationRule::lexicographic();
        let s = set(&["b", "a"]);
        let none = interesting_orders(&s, &o(&["z"]), [&OrderSet::new()], &rule);
        assert_eq!(none, orders(&[&["a", "b"]]));

        let input = orders(&[&["a"], &["a", "b"]]);
        let got = interesting_orders(&s, &SortOrder::empty(), [&input], &rule);
        assert_eq!(got, orders(&[&["a", "b"]]));

        let input = orders(&[&["b", "x"]]);
        let got = interesting_orders(&s, &o(&["a"]), [&input], &rule);
        assert_eq!(got, orders(&[&["a", "b"], &["b", "a"]]));
        assert!(got.iter().all(|p| p.attr_set() == s));
    }

    #[test]
    fn dominance_check_matches_brute_force() {
        // Every pair (input, required) over a tiny universe: no survivor of
        // step 2 is a strict prefix of another member of T.
        let rule = PermutationRule::lexicographic();
        let s = set(&["a", "b", "c"]);
        let universe = all_orders(&set(&["a", "b", "c", "d"]));
        for x in universe.iter().step_by(7) {
            for y in universe.iter().step_by(5) {
                let input: OrderSet = [x.clone()].into_iter().collect();
                let got = interesting_orders(&s, y, [&input], &rule);
                let t: Vec<SortOrder> = vec![x.prefix_in(&s), y.prefix_in(&s)];
                let mut want = OrderSet::new();
                for a in &t {
                    if !t.iter().any(|b| a.is_strict_prefix_of(b)) {
                        want.insert(rule.extend(a, &s));
                    }
                }
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn order_enumeration_counts() {
        assert_eq!(order_count(0), 1);
        assert_eq!(order_count(3), 16);
        assert_eq!(all_orders(&set(&["a", "b", "c"])).len(), 15);
        assert_eq!(order_count(8), 109_601);
    }

    #[test]
    fn ford_min_clustered_only() {
        let c = catalog(
            r#"{"name": "r", "columns": ["a", "b"], "tuples": 10000, "blocks": 500,
                "avg_tuple_bytes": 20, "clustering": ["r.a"], "distinct": {"a": 100}}"#,
        );
        let t = scan(&c);
        let got = ford_min_exact(&t, 0, &c.cost_params()).unwrap();
        assert_eq!(got, orders(&[&["r.a"]]));
    }

    #[test]
    fn ford_min_empty_without_access_orders() {
        let c = catalog(
            r#"{"name": "r", "columns": ["a", "b"], "tuples": 10000, "blocks": 500,
                "avg_tuple_bytes": 20}"#,
        );
        let t = scan(&c);
        assert!(ford_min_exact(&t, 0, &c.cost_params()).unwrap().is_empty());
    }

    #[test]
    fn ford_min_prefers_longer_index_order() {
        let c = catalog(
            r#"{"name": "r", "columns": ["a", "b"], "tuples": 10000, "blocks": 500,
                "avg_tuple_bytes": 20, "clustering": ["r.a"],
                "indices": [{"key": ["r.a", "r.b"]}], "distinct": {"a": 100}}"#,
        );
        let t = scan(&c);
        let got = ford_min_exact(&t, 0, &c.cost_params()).unwrap();
        assert_eq!(got, orders(&[&["r.a", "r.b"]]));
    }

    #[test]
    fn parameter_orders() {
        let none = OrderSet::new();
        let inner = orders(&[&["lineitem.l_orderkey"]]);
        let b = vec![("lineitem.l_orderkey".parse().unwrap(), "o_orderkey".parse().unwrap())];
        let bound = set(&["o_orderkey"]);
        assert_eq!(parameter_sort_orders(&inner, &b, &none, &bound), orders(&[&["o_orderkey"]]));

        let inner = orders(&[&["r.a", "r.b"]]);
        let b = vec![
            ("r.a".parse().unwrap(), "p_a".parse().unwrap()),
            ("r.c".parse().unwrap(), "p_c".parse().unwrap()),
        ];
        let bound = set(&["p_a", "p_c"]);
        assert_eq!(parameter_sort_orders(&inner, &b, &none, &bound), orders(&[&["p_a"]]));

        // No correlation predicates: only the outer side contributes.
        let outer = orders(&[&["p_x", "q"], &["q"]]);
        let got = parameter_sort_orders(&inner, &[], &outer, &set(&["p_x"]));
        assert_eq!(got, orders(&[&["p_x"]]));
    }
}

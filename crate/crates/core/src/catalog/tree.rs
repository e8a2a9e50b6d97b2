//! The validated, statistics-annotated expression tree for one query.
//!
//! Orders handed to the optimizer live in "representative space": every
//! attribute is replaced by the representative of its equivalence class, so
//! `ct1.make` and `ct2.make` name the same sort key once they are equated.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::equivalence::{representative_join_set, EquivalenceClasses};
use super::query::{QueryNode, QuerySpec};
use super::{Catalog, RelationCatalogEntry};
use crate::error::ValidationError;
use crate::order::{Attribute, AttributeSet, PermutationRule, SortOrder};

pub type NodeId = usize;

const AGGREGATE_BYTES: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    /// Full scan in clustering order.
    Clustered,
    /// Scan of a secondary index that covers the query.
    CoveringIndex { key: SortOrder },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccessPath {
    pub kind: AccessKind,
    /// Order the scan delivers, in representative space.
    pub order: SortOrder,
    pub blocks: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExprKind {
    Base {
        relation: String,
        alias: String,
        access: Vec<AccessPath>,
        /// Attributes of this relation referenced anywhere in the query.
        referenced: AttributeSet,
    },
    Select {
        predicate: String,
        attrs: AttributeSet,
        selectivity: f64,
    },
    Project {
        attrs: AttributeSet,
    },
    Join {
        on: Vec<(Attribute, Attribute)>,
        /// Representative join attribute set.
        join_set: AttributeSet,
    },
    GroupBy {
        attrs: AttributeSet,
        aggregates: Vec<String>,
        /// Attributes read by the aggregate functions.
        agg_args: AttributeSet,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExprNode {
    pub id: NodeId,
    pub kind: ExprKind,
    pub children: Vec<NodeId>,
    pub schema: AttributeSet,
    pub rep_schema: AttributeSet,
    pub rows: f64,
    pub blocks: f64,
    pub tuple_bytes: f64,
}

impl ExprNode {
    pub fn is_join(&self) -> bool {
        matches!(self.kind, ExprKind::Join { .. })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ExprKind::Base { relation, alias, .. } if relation == alias => relation.clone(),
            ExprKind::Base { relation, alias, .. } => format!("{relation} {alias}"),
            ExprKind::Select { predicate, .. } => format!("select {predicate}"),
            ExprKind::Project { attrs } => format!("project {attrs}"),
            ExprKind::Join { join_set, .. } => format!("join on {join_set}"),
            ExprKind::GroupBy { attrs, .. } => format!("group by {attrs}"),
        }
    }
}

/// A query resolved against a catalog. Nodes are stored in post-order, so
/// children always have smaller ids than their parent; the root is last.
#[derive(Clone, Debug)]
pub struct QueryTree {
    nodes: Vec<ExprNode>,
    eq: EquivalenceClasses,
    order_by: SortOrder,
    rule: PermutationRule,
    block_size: f64,
    relations: HashMap<NodeId, RelationCatalogEntry>,
}

struct Builder<'a> {
    catalog: &'a Catalog,
    nodes: Vec<ExprNode>,
    aliases: Vec<String>,
    widths: HashMap<Attribute, f64>,
    relations: HashMap<NodeId, RelationCatalogEntry>,
}

fn resolve(
    attr: &Attribute,
    scope: &AttributeSet,
    path: &str,
) -> Result<Attribute, ValidationError> {
    if scope.contains(attr) {
        return Ok(attr.clone());
    }
    if attr.qualifier().is_none() {
        let matches: Vec<&Attribute> = scope.iter().filter(|a| a.column() == attr.column()).collect();
        match matches.len() {
            1 => return Ok(matches[0].clone()),
            n if n > 1 => {
                return Err(ValidationError::new(path, format!("ambiguous column {attr}")));
            }
            _ => {}
        }
    }
    Err(ValidationError::new(path, format!("unknown column {attr}")))
}

impl<'a> Builder<'a> {
    fn push(&mut self, kind: ExprKind, children: Vec<NodeId>, schema: AttributeSet) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(ExprNode {
            id,
            kind,
            children,
            schema,
            rep_schema: AttributeSet::new(),
            rows: 0.0,
            blocks: 0.0,
            tuple_bytes: 0.0,
        });
        id
    }

    fn build(&mut self, node: &QueryNode, path: &str) -> Result<NodeId, ValidationError> {
        match node {
            QueryNode::Relation(r) => {
                let rel = self.catalog.relation(r.name()).ok_or_else(|| {
                    ValidationError::new(
                        format!("{path}.relation"),
                        format!("unknown relation {}", r.name()),
                    )
                })?;
                let alias = r.alias().to_owned();
                if alias.is_empty() || alias.contains('.') {
                    return Err(ValidationError::new(format!("{path}.relation"), "invalid alias"));
                }
                if self.aliases.contains(&alias) {
                    return Err(ValidationError::new(
                        format!("{path}.relation"),
                        format!("relation alias {alias} used twice"),
                    ));
                }
                self.aliases.push(alias.clone());
                let width = rel.avg_tuple_bytes / rel.columns.len() as f64;
                let schema: AttributeSet = rel
                    .columns
                    .iter()
                    .map(|c| Attribute::qualified(&alias, c))
                    .collect();
                for a in schema.iter() {
                    self.widths.insert(a.clone(), width);
                }
                let id = self.push(
                    ExprKind::Base {
                        relation: rel.name.clone(),
                        alias,
                        access: Vec::new(),
                        referenced: AttributeSet::new(),
                    },
                    Vec::new(),
                    schema,
                );
                self.relations.insert(id, rel.clone());
                Ok(id)
            }
            QueryNode::Join { left, right, on } => {
                let l = self.build(left, &format!("{path}.join.left"))?;
                let r = self.build(right, &format!("{path}.join.right"))?;
                if on.is_empty() {
                    return Err(ValidationError::new(
                        format!("{path}.join.on"),
                        "cross products are not supported; at least one equality is required",
                    ));
                }
                let ls = self.nodes[l].schema.clone();
                let rs = self.nodes[r].schema.clone();
                let mut preds = Vec::with_capacity(on.len());
                for (i, (a, b)) in on.iter().enumerate() {
                    let p = format!("{path}.join.on[{i}]");
                    let pair = match (resolve(a, &ls, &p), resolve(b, &rs, &p)) {
                        (Ok(x), Ok(y)) => (x, y),
                        _ => (resolve(b, &ls, &p)?, resolve(a, &rs, &p)?),
                    };
                    preds.push(pair);
                }
                let schema = ls.union(&rs);
                Ok(self.push(
                    ExprKind::Join {
                        on: preds,
                        join_set: AttributeSet::new(),
                    },
                    vec![l, r],
                    schema,
                ))
            }
            QueryNode::Select {
                input,
                predicate,
                attrs,
                selectivity,
            } => {
                let c = self.build(input, &format!("{path}.select.input"))?;
                if !(*selectivity > 0.0 && *selectivity <= 1.0) {
                    return Err(ValidationError::new(
                        format!("{path}.select.selectivity"),
                        "selectivity must be in (0, 1]",
                    ));
                }
                let scope = self.nodes[c].schema.clone();
                let attrs = attrs
                    .iter()
                    .enumerate()
                    .map(|(i, a)| resolve(a, &scope, &format!("{path}.select.attrs[{i}]")))
                    .collect::<Result<AttributeSet, _>>()?;
                Ok(self.push(
                    ExprKind::Select {
                        predicate: predicate.clone(),
                        attrs,
                        selectivity: *selectivity,
                    },
                    vec![c],
                    scope,
                ))
            }
            QueryNode::Project { input, attrs } => {
                let c = self.build(input, &format!("{path}.project.input"))?;
                let scope = self.nodes[c].schema.clone();
                let attrs = attrs
                    .iter()
                    .enumerate()
                    .map(|(i, a)| resolve(a, &scope, &format!("{path}.project.attrs[{i}]")))
                    .collect::<Result<AttributeSet, _>>()?;
                if attrs.is_empty() {
                    return Err(ValidationError::new(format!("{path}.project.attrs"), "empty projection"));
                }
                Ok(self.push(ExprKind::Project { attrs: attrs.clone() }, vec![c], attrs))
            }
            QueryNode::GroupBy {
                input,
                attrs,
                aggregates,
            } => {
                let c = self.build(input, &format!("{path}.group_by.input"))?;
                let scope = self.nodes[c].schema.clone();
                let attrs = attrs
                    .iter()
                    .enumerate()
                    .map(|(i, a)| resolve(a, &scope, &format!("{path}.group_by.attrs[{i}]")))
                    .collect::<Result<AttributeSet, _>>()?;
                if attrs.is_empty() {
                    return Err(ValidationError::new(format!("{path}.group_by.attrs"), "no grouping attributes"));
                }
                let mut schema = attrs.clone();
                let mut names = Vec::new();
                let mut args = AttributeSet::new();
                for (i, agg) in aggregates.iter().enumerate() {
                    let p = format!("{path}.group_by.aggregates[{i}]");
                    let out: Attribute = agg
                        .name
                        .parse()
                        .map_err(|_| ValidationError::new(&p, "invalid aggregate name"))?;
                    if out.qualifier().is_some() || !schema.insert(out.clone()) {
                        return Err(ValidationError::new(&p, format!("invalid or duplicate aggregate name {out}")));
                    }
                    self.widths.insert(out, AGGREGATE_BYTES);
                    for (j, a) in agg.args.iter().enumerate() {
                        args.insert(resolve(a, &scope, &format!("{p}.args[{j}]"))?);
                    }
                    names.push(agg.name.clone());
                }
                Ok(self.push(
                    ExprKind::GroupBy {
                        attrs,
                        aggregates: names,
                        agg_args: args,
                    },
                    vec![c],
                    schema,
                ))
            }
        }
    }
}

impl QueryTree {
    /// Resolves `spec` against `catalog`, computes equivalence classes,
    /// covering indices and cardinality estimates.
    pub fn build(spec: &QuerySpec, catalog: &Catalog) -> Result<Self, ValidationError> {
        let mut b = Builder {
            catalog,
            nodes: Vec::new(),
            aliases: Vec::new(),
            widths: HashMap::new(),
            relations: HashMap::new(),
        };
        let root = b.build(&spec.tree, "tree")?;
        let root_schema = b.nodes[root].schema.clone();
        let order_by = spec
            .order_by
            .attrs()
            .iter()
            .enumerate()
            .map(|(i, a)| resolve(a, &root_schema, &format!("order_by[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let order_by = SortOrder::new(order_by)
            .map_err(|e| ValidationError::new("order_by", e.to_string()))?;

        let mut eq = EquivalenceClasses::new();
        for n in &b.nodes {
            if let ExprKind::Base { .. } = n.kind {
                for a in n.schema.iter() {
                    eq.add(a);
                }
            }
        }
        for n in &b.nodes {
            if let ExprKind::Join { on, .. } = &n.kind {
                for (x, y) in on {
                    eq.union(x, y);
                }
            }
        }

        let rank = spec
            .canonical_rank
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let all: AttributeSet = b.widths.keys().cloned().collect();
                resolve(a, &all, &format!("canonical_rank[{i}]")).map(|a| eq.representative(&a))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut tree = QueryTree {
            nodes: b.nodes,
            eq,
            order_by,
            rule: PermutationRule::ranked(rank),
            block_size: catalog.block_size,
            relations: b.relations,
        };
        let widths = b.widths;
        for id in 0..tree.nodes.len() {
            let rep_schema = tree.eq.represent_set(&tree.nodes[id].schema);
            tree.nodes[id].rep_schema = rep_schema;
            if let ExprKind::Join { on, join_set } = &mut tree.nodes[id].kind {
                *join_set = representative_join_set(on, &tree.eq);
            }
        }
        let needed = tree.nodes[root].schema.union(&tree.order_by.attr_set());
        tree.mark_referenced(root, needed);
        tree.plan_access_paths();
        for id in 0..tree.nodes.len() {
            tree.estimate(id, &widths);
        }
        Ok(tree)
    }

    fn mark_referenced(&mut self, id: NodeId, needed: AttributeSet) {
        let node = &self.nodes[id];
        let needed = needed.intersection(&node.schema);
        match node.kind.clone() {
            ExprKind::Base { .. } => {
                if let ExprKind::Base { referenced, .. } = &mut self.nodes[id].kind {
                    *referenced = needed;
                }
            }
            ExprKind::Select { attrs, .. } => {
                let c = node.children[0];
                self.mark_referenced(c, needed.union(&attrs));
            }
            ExprKind::Project { attrs } => {
                let c = node.children[0];
                self.mark_referenced(c, attrs);
            }
            ExprKind::GroupBy { attrs, agg_args, .. } => {
                let c = node.children[0];
                self.mark_referenced(c, attrs.union(&agg_args));
            }
            ExprKind::Join { on, .. } => {
                let (l, r) = (node.children[0], node.children[1]);
                let preds: AttributeSet = on.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
                let all = needed.union(&preds);
                self.mark_referenced(l, all.clone());
                self.mark_referenced(r, all);
            }
        }
    }

    fn plan_access_paths(&mut self) {
        for id in 0..self.nodes.len() {
            let (alias, referenced) = match &self.nodes[id].kind {
                ExprKind::Base { alias, referenced, .. } => (alias.clone(), referenced.clone()),
                _ => continue,
            };
            let rel = &self.relations[&id];
            let localize = |o: &SortOrder| o.map_attrs(|a| Attribute::qualified(&alias, a.column()));
            let mut paths = vec![AccessPath {
                kind: AccessKind::Clustered,
                order: self.rep_order(&localize(&rel.clustering)),
                blocks: rel.blocks as f64,
            }];
            for idx in &rel.indices {
                let cols: AttributeSet = idx
                    .columns()
                    .iter()
                    .map(|a| Attribute::qualified(&alias, a.column()))
                    .collect();
                if !referenced.is_subset(&cols) {
                    continue;
                }
                let frac = cols.len() as f64 / rel.columns.len() as f64;
                let blocks = if rel.blocks == 0 {
                    0.0
                } else {
                    (rel.blocks as f64 * frac).ceil().max(1.0)
                };
                paths.push(AccessPath {
                    kind: AccessKind::CoveringIndex { key: idx.key.clone() },
                    order: self.rep_order(&localize(&idx.key)),
                    blocks,
                });
            }
            if let ExprKind::Base { access, .. } = &mut self.nodes[id].kind {
                *access = paths;
            }
        }
    }

    fn blocks_for(&self, rows: f64, tuple_bytes: f64) -> f64 {
        if rows <= 0.0 {
            0.0
        } else {
            (rows * tuple_bytes / self.block_size).ceil().max(1.0)
        }
    }

    fn estimate(&mut self, id: NodeId, widths: &HashMap<Attribute, f64>) {
        let tuple_bytes: f64 = self.nodes[id]
            .schema
            .iter()
            .map(|a| widths.get(a).copied().unwrap_or(AGGREGATE_BYTES))
            .sum();
        let node = &self.nodes[id];
        let (rows, blocks) = match &node.kind {
            ExprKind::Base { .. } => {
                let rel = &self.relations[&id];
                (rel.tuples as f64, rel.blocks as f64)
            }
            ExprKind::Select { selectivity, .. } => {
                let rows = (self.nodes[node.children[0]].rows * selectivity).ceil();
                (rows, self.blocks_for(rows, tuple_bytes))
            }
            ExprKind::Project { .. } => {
                let rows = self.nodes[node.children[0]].rows;
                (rows, self.blocks_for(rows, tuple_bytes))
            }
            ExprKind::GroupBy { attrs, .. } => {
                let c = node.children[0];
                let reps = self.eq.represent_set(attrs);
                let rows = if self.nodes[c].rows <= 0.0 { 0.0 } else { self.distinct(c, &reps) };
                (rows, self.blocks_for(rows, tuple_bytes))
            }
            ExprKind::Join { on, .. } => {
                let (l, r) = (node.children[0], node.children[1]);
                let mut rows = self.nodes[l].rows * self.nodes[r].rows;
                let mut seen = AttributeSet::new();
                for (a, b) in on {
                    let rep = self.eq.representative(a);
                    if !seen.insert(rep) {
                        continue;
                    }
                    let one = |n: NodeId, x: &Attribute| -> f64 {
                        let s: AttributeSet = [self.eq.representative(x)].into_iter().collect();
                        self.distinct(n, &s)
                    };
                    let d = one(l, a).max(one(r, b)).max(1.0);
                    rows /= d;
                }
                let rows = rows.ceil();
                (rows, self.blocks_for(rows, tuple_bytes))
            }
        };
        let node = &mut self.nodes[id];
        node.rows = rows;
        node.blocks = blocks;
        node.tuple_bytes = tuple_bytes;
    }

    /// `D(e, s)` for a set of representatives, assuming uniformity and
    /// independence where the catalog has no entry; never above `N(e)`.
    pub fn distinct(&self, id: NodeId, reps: &AttributeSet) -> f64 {
        let node = &self.nodes[id];
        let reps = reps.intersection(&node.rep_schema);
        if reps.is_empty() || node.rows <= 1.0 {
            return 1.0;
        }
        let raw = match &node.kind {
            ExprKind::Base { .. } => {
                let rel = &self.relations[&id];
                let cols: Vec<&str> = reps
                    .iter()
                    .filter_map(|r| {
                        node.schema
                            .iter()
                            .find(|a| self.eq.representative(a) == *r)
                            .map(|a| a.column())
                    })
                    .collect();
                rel.distinct_for(&cols).unwrap_or_else(|| {
                    cols.iter()
                        .map(|c| rel.distinct_for(&[c]).unwrap_or(node.rows))
                        .product()
                })
            }
            ExprKind::Select { .. } | ExprKind::Project { .. } => self.distinct(node.children[0], &reps),
            ExprKind::GroupBy { attrs, .. } => {
                let grouped = reps.intersection(&self.eq.represent_set(attrs));
                if grouped.len() < reps.len() {
                    node.rows
                } else {
                    self.distinct(node.children[0], &grouped)
                }
            }
            ExprKind::Join { .. } => {
                let (l, r) = (node.children[0], node.children[1]);
                let left = reps.intersection(&self.nodes[l].rep_schema);
                let right = reps.difference(&left);
                self.distinct(l, &left) * self.distinct(r, &right)
            }
        };
        raw.min(node.rows).max(1.0)
    }

    pub fn nodes(&self) -> &[ExprNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &ExprNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.nodes.len() - 1
    }

    pub fn equivalence(&self) -> &EquivalenceClasses {
        &self.eq
    }

    pub fn rule(&self) -> &PermutationRule {
        &self.rule
    }

    /// Required output order of the query, as written.
    pub fn order_by(&self) -> &SortOrder {
        &self.order_by
    }

    /// Required output order in representative space.
    pub fn order_by_rep(&self) -> SortOrder {
        self.rep_order(&self.order_by)
    }

    pub fn rep(&self, a: &Attribute) -> Attribute {
        self.eq.representative(a)
    }

    pub fn rep_order(&self, o: &SortOrder) -> SortOrder {
        o.map_attrs(|a| self.eq.representative(a))
    }

    /// Representative join attribute set `L_v` of a join node.
    pub fn join_set(&self, id: NodeId) -> Option<&AttributeSet> {
        match &self.nodes[id].kind {
            ExprKind::Join { join_set, .. } => Some(join_set),
            _ => None,
        }
    }

    /// Grouping attributes of a group-by node, in representative space.
    pub fn group_set(&self, id: NodeId) -> Option<AttributeSet> {
        match &self.nodes[id].kind {
            ExprKind::GroupBy { attrs, .. } => Some(self.eq.represent_set(attrs)),
            _ => None,
        }
    }

    pub fn relation(&self, id: NodeId) -> Option<&RelationCatalogEntry> {
        self.relations.get(&id)
    }
}

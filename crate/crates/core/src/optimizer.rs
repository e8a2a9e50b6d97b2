//! Plan generation over a fixed join tree.
//!
//! Phase 1 computes `cbp(e, o)`, the cheapest plan for node `e` whose
//! output is ordered on (a superset prefix of) `o`, memoized per
//! `(node, order)`. Merge joins and sort-based group-bys try the
//! interesting orders of their attribute set; sort enforcers, full or
//! partial, close any gap to the required order. Phase 2 ([`Optimizer::refine`])
//! re-permutes the free suffixes of the chosen join orders so adjacent
//! operators share longer prefixes.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::catalog::{AccessKind, ExprKind, NodeId, QueryTree};
use crate::cost::{group_by_cost, merge_join_cost, segmented_sort_cost, sort_cost_partial};
use crate::error::Error;
use crate::favorable::{afm, ford_min_with, interesting_orders, OrderSet};
use crate::order::{AttributeSet, SortOrder};
use crate::prefix::{solve_tree_half_approx_with, BenefitFn, PrefixInstance};
use crate::{Cost, Params};


/// Where a sort-based operator gets its candidate orders from.
#[derive(Clone, Debug, PartialEq)]
pub enum OrderSource {
    /// Interesting orders built from afm of the inputs.
    Afm,
    /// Every permutation of the attribute set.
    Exhaustive,
    /// Interesting orders built from the exact minimal favorable orders.
    FordMin,
    /// A fixed order per node; nodes not listed fall back to [`OrderSource::Afm`].
    Fixed(BTreeMap<NodeId, SortOrder>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PlanOp {
    TableAccess {
        relation: String,
        alias: String,
        access: AccessKind,
        scan_blocks: f64,
    },
    SortEnforcer {
        from: SortOrder,
        to: SortOrder,
        partial: bool,
        segments: f64,
    },
    MergeJoin {
        order: SortOrder,
    },
    GroupBy {
        order: SortOrder,
    },
    Select {
        predicate: String,
    },
    Project {
        attrs: AttributeSet,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanNode {
    /// Expression node this operator implements.
    pub expr: NodeId,
    #[serde(flatten)]
    pub op: PlanOp,
    pub rows: f64,
    pub blocks: f64,
    pub output_order: SortOrder,
    pub local_cost: Cost,
    /// Cost of the whole subtree.
    pub cost: Cost,
    pub children: Vec<PlanNode>,
}

impl PlanNode {
    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&PlanNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    pub fn label(&self) -> String {
        match &self.op {
            PlanOp::TableAccess { relation, alias, access, .. } => {
                let name = if relation == alias {
                    relation.clone()
                } else {
                    format!("{relation} {alias}")
                };
                match access {
                    AccessKind::Clustered => format!("TableScan {name}"),
                    AccessKind::CoveringIndex { key } => format!("IndexScan {name} {key}"),
                }
            }
            PlanOp::SortEnforcer { from, to, partial, .. } => {
                let kind = if *partial { "PartialSort" } else { "Sort" };
                format!("{kind} {from} -> {to}")
            }
            PlanOp::MergeJoin { order } => format!("MergeJoin {order}"),
            PlanOp::GroupBy { order } => format!("GroupBy {order}"),
            PlanOp::Select { predicate } => format!("Select {predicate}"),
            PlanOp::Project { attrs } => format!("Project {attrs}"),
        }
    }

    /// Indented text rendering, one operator per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(0, &mut out);
        out
    }

    fn write_text(&self, depth: usize, out: &mut String) {
        let _ = writeln!(
            out,
            "{}{}  [order {}; rows {}; local {:.3}; total {:.3}]",
            "  ".repeat(depth),
            self.label(),
            self.output_order,
            self.rows,
            self.local_cost.total,
            self.cost.total
        );
        for c in &self.children {
            c.write_text(depth + 1, out);
        }
    }

    /// Graphviz rendering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph plan {\n  node [shape=box];\n");
        let mut next = 0;
        self.write_dot(&mut next, &mut out);
        out.push_str("}\n");
        out
    }

    fn write_dot(&self, next: &mut usize, out: &mut String) -> usize {
        let id = *next;
        *next += 1;
        let label = format!("{}\\norder {}\\ncost {:.3}", self.label(), self.output_order, self.cost.total)
            .replace('"', "\\\"");
        let _ = writeln!(out, "  n{id} [label=\"{label}\"];");
        for c in &self.children {
            let cid = c.write_dot(next, out);
            let _ = writeln!(out, "  n{id} -> n{cid};");
        }
        id
    }

    /// Chosen order of every merge join and group-by, keyed by expression node.
    pub fn operator_orders(&self) -> BTreeMap<NodeId, SortOrder> {
        self.walk()
            .into_iter()
            .filter_map(|n| match &n.op {
                PlanOp::MergeJoin { order } | PlanOp::GroupBy { order } => Some((n.expr, order.clone())),
                _ => None,
            })
            .collect()
    }
}

/// Recomputes the cost of `plan` bottom-up from the statistics stored in
/// its nodes.
pub fn cost_plan(plan: &PlanNode, params: &Params) -> Cost {
    let children: Cost = plan.children.iter().map(|c| cost_plan(c, params)).sum();
    children + local_cost(plan, params)
}

fn local_cost(plan: &PlanNode, params: &Params) -> Cost {
    let child = |i: usize| &plan.children[i];
    match &plan.op {
        PlanOp::TableAccess { scan_blocks, .. } => Cost::new(*scan_blocks, 0.0),
        PlanOp::SortEnforcer { from, to, segments, .. } => {
            sort_cost_partial(plan.rows, plan.blocks, *segments, from, to, params)
        }
        PlanOp::MergeJoin { .. } => {
            merge_join_cost(child(0).blocks, child(1).blocks, child(0).rows, child(1).rows, params)
        }
        PlanOp::GroupBy { .. } => group_by_cost(child(0).rows, params),
        PlanOp::Select { .. } | PlanOp::Project { .. } => Cost::new(0.0, params.cpu_unit * child(0).rows),
    }
}

#[derive(Clone, Debug)]
enum Choice {
    Access(usize),
    Child(SortOrder),
    Order(SortOrder),
}

#[derive(Clone, Debug)]
struct Best {
    cost: Cost,
    choice: Choice,
    /// Order the operator itself produces, before any enforcer.
    native: SortOrder,
    /// Order after enforcement.
    output: SortOrder,
}

/// Per-node favorable and interesting orders, for debugging.
#[derive(Clone, Debug, Serialize)]
pub struct Explain {
    pub nodes: Vec<ExplainNode>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExplainNode {
    pub id: NodeId,
    pub label: String,
    pub rows: f64,
    pub blocks: f64,
    pub afm: Vec<SortOrder>,
    /// `I(e, o)` for every required order `o` the node was asked for.
    pub interesting: Vec<InterestingEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterestingEntry {
    pub required: SortOrder,
    pub orders: Vec<SortOrder>,
}

/// Benefit function used by phase 2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RefineBenefit {
    /// Average enforcer saving per shared attribute, from the cost model.
    #[default]
    Cost,
    /// `f(ℓ) = ℓ`.
    Identity,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RefineOptions {
    pub benefit: RefineBenefit,
    /// Include group-by operators as chain nodes.
    pub group_by: bool,
}

pub struct Optimizer<'a> {
    tree: &'a QueryTree,
    params: Params,
    source: OrderSource,
    afm: Vec<OrderSet>,
    memo: HashMap<(NodeId, SortOrder), Best>,
    interesting: BTreeMap<(NodeId, SortOrder), OrderSet>,
    ford_min: HashMap<NodeId, OrderSet>,
    helper: Option<Box<Optimizer<'a>>>,
}

impl<'a> Optimizer<'a> {
    pub fn new(tree: &'a QueryTree, params: Params, source: OrderSource) -> Self {
        Self {
            tree,
            params,
            source,
            afm: afm(tree),
            memo: HashMap::new(),
            interesting: BTreeMap::new(),
            ford_min: HashMap::new(),
            helper: None,
        }
    }

    pub fn tree(&self) -> &'a QueryTree {
        self.tree
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn afm(&self) -> &[OrderSet] {
        &self.afm
    }

    /// Drops all memoized results.
    pub fn clear_memo(&mut self) {
        self.memo.clear();
        self.interesting.clear();
    }

    /// Phase 1: the cheapest plan producing the query's required order.
    pub fn optimize(&mut self) -> Result<PlanNode, Error> {
        let root = self.tree.root();
        let order = self.tree.order_by_rep();
        self.cbp(root, &order)?;
        Ok(self.build(root, &order))
    }

    /// `cbp(node, order)`.
    pub fn cbp(&mut self, id: NodeId, order: &SortOrder) -> Result<Cost, Error> {
        Ok(self.best(id, order)?.cost)
    }

    fn best(&mut self, id: NodeId, order: &SortOrder) -> Result<Best, Error> {
        let key = (id, order.clone());
        if let Some(b) = self.memo.get(&key) {
            return Ok(b.clone());
        }
        let tree = self.tree;
        let node = tree.node(id);
        let mut options: Vec<(Cost, SortOrder, Choice)> = Vec::new();
        match &node.kind {
            ExprKind::Base { access, .. } => {
                for (i, a) in access.iter().enumerate() {
                    options.push((Cost::new(a.blocks, 0.0), a.order.clone(), Choice::Access(i)));
                }
            }
            ExprKind::Select { .. } | ExprKind::Project { .. } => {
                let child = node.children[0];
                let local = Cost::new(0.0, self.params.cpu_unit * tree.node(child).rows);
                let mut cands = vec![order.clone()];
                for c in self.afm[child].iter().chain([&SortOrder::empty()]) {
                    if !cands.contains(c) {
                        cands.push(c.clone());
                    }
                }
                for c in cands {
                    let b = self.best(child, &c)?;
                    let out = b.output.prefix_in(&node.rep_schema);
                    options.push((b.cost + local, out, Choice::Child(c)));
                }
            }
            ExprKind::Join { join_set, .. } => {
                let (l, r) = (node.children[0], node.children[1]);
                let (ln, rn) = (tree.node(l), tree.node(r));
                let merge = merge_join_cost(ln.blocks, rn.blocks, ln.rows, rn.rows, &self.params);
                for p in self.candidates(id, join_set, order, &[l, r])? {
                    let cost = self.best(l, &p)?.cost + self.best(r, &p)?.cost + merge;
                    options.push((cost, p.clone(), Choice::Order(p)));
                }
            }
            ExprKind::GroupBy { attrs, .. } => {
                let child = node.children[0];
                let set = tree.equivalence().represent_set(attrs);
                let local = group_by_cost(tree.node(child).rows, &self.params);
                for p in self.candidates(id, &set, order, &[child])? {
                    let cost = self.best(child, &p)?.cost + local;
                    options.push((cost, p.clone(), Choice::Order(p)));
                }
            }
        }
        let mut best: Option<Best> = None;
        for (cost, native, choice) in options {
            let (enf, output) = match self.enforcer(id, &native, order) {
                Some((c, _)) => (c, order.clone()),
                None => (Cost::zero(), native.clone()),
            };
            let total = cost + enf;
            if best.as_ref().is_none_or(|b| total.total < b.cost.total) {
                best = Some(Best {
                    cost: total,
                    choice,
                    native,
                    output,
                });
            }
        }
        let best = best.expect("every node has at least one plan");
        self.memo.insert(key, best.clone());
        Ok(best)
    }

    /// Cost and segment count of enforcing `to` on the output of `id`
    /// ordered on `from`; `None` when no sort is needed.
    fn enforcer(&self, id: NodeId, from: &SortOrder, to: &SortOrder) -> Option<(Cost, f64)> {
        if from.subsumes(to) {
            return None;
        }
        let node = self.tree.node(id);
        let common = from.lcp(to);
        let segments = if common.is_empty() {
            1.0
        } else {
            self.tree.distinct(id, &common.attr_set())
        };
        let cost = sort_cost_partial(node.rows, node.blocks, segments, from, to, &self.params);
        Some((cost, segments))
    }

    fn candidates(
        &mut self,
        id: NodeId,
        set: &AttributeSet,
        order: &SortOrder,
        inputs: &[NodeId],
    ) -> Result<OrderSet, Error> {
        let rule = self.tree.rule();
        if self.source == OrderSource::FordMin {
            let mut mins = Vec::with_capacity(inputs.len());
            for &c in inputs {
                mins.push(self.ford_min_of(c)?);
            }
            let out = interesting_orders(set, order, mins.iter(), rule);
            self.interesting.insert((id, order.clone()), out.clone());
            return Ok(out);
        }
        let out = match &self.source {
            OrderSource::Afm => interesting_orders(set, order, inputs.iter().map(|&c| &self.afm[c]), rule),
            OrderSource::Fixed(map) => match map.get(&id) {
                Some(p) => [p.clone()].into_iter().collect(),
                None => interesting_orders(set, order, inputs.iter().map(|&c| &self.afm[c]), rule),
            },
            OrderSource::Exhaustive => set.permutations().into_iter().collect(),
            OrderSource::FordMin => unreachable!("handled above"),
        };
        self.interesting.insert((id, order.clone()), out.clone());
        Ok(out)
    }

    fn ford_min_of(&mut self, id: NodeId) -> Result<OrderSet, Error> {
        if let Some(s) = self.ford_min.get(&id) {
            return Ok(s.clone());
        }
        let (tree, params) = (self.tree, self.params);
        let helper = self
            .helper
            .get_or_insert_with(|| Box::new(Optimizer::new(tree, params, OrderSource::Exhaustive)));
        let set = ford_min_with(helper, id)?;
        self.ford_min.insert(id, set.clone());
        Ok(set)
    }

    fn build(&self, id: NodeId, order: &SortOrder) -> PlanNode {
        let best = &self.memo[&(id, order.clone())];
        let node = self.tree.node(id);
        let (op, children) = match (&node.kind, &best.choice) {
            (ExprKind::Base { relation, alias, access, .. }, Choice::Access(i)) => (
                PlanOp::TableAccess {
                    relation: relation.clone(),
                    alias: alias.clone(),
                    access: access[*i].kind.clone(),
                    scan_blocks: access[*i].blocks,
                },
                Vec::new(),
            ),
            (ExprKind::Select { predicate, .. }, Choice::Child(c)) => (
                PlanOp::Select {
                    predicate: predicate.clone(),
                },
                vec![self.build(node.children[0], c)],
            ),
            (ExprKind::Project { attrs }, Choice::Child(c)) => (
                PlanOp::Project { attrs: attrs.clone() },
                vec![self.build(node.children[0], c)],
            ),
            (ExprKind::Join { .. }, Choice::Order(p)) => (
                PlanOp::MergeJoin { order: p.clone() },
                vec![self.build(node.children[0], p), self.build(node.children[1], p)],
            ),
            (ExprKind::GroupBy { .. }, Choice::Order(p)) => (
                PlanOp::GroupBy { order: p.clone() },
                vec![self.build(node.children[0], p)],
            ),
            _ => unreachable!("choice matches node kind"),
        };
        let mut plan = PlanNode {
            expr: id,
            op,
            rows: node.rows,
            blocks: node.blocks,
            output_order: best.native.clone(),
            local_cost: Cost::zero(),
            cost: Cost::zero(),
            children,
        };
        plan.local_cost = local_cost(&plan, &self.params);
        plan.cost = plan.children.iter().map(|c| c.cost).sum::<Cost>() + plan.local_cost;
        if let Some((cost, segments)) = self.enforcer(id, &best.native, order) {
            let from = best.native.clone();
            let partial = !from.lcp(order).is_empty();
            plan = PlanNode {
                expr: id,
                op: PlanOp::SortEnforcer {
                    from,
                    to: order.clone(),
                    partial,
                    segments,
                },
                rows: node.rows,
                blocks: node.blocks,
                output_order: order.clone(),
                local_cost: cost,
                cost: plan.cost + cost,
                children: vec![plan],
            };
        }
        plan
    }

    /// Favorable and interesting orders gathered so far.
    pub fn explain(&self) -> Explain {
        let nodes = self
            .tree
            .nodes()
            .iter()
            .map(|n| ExplainNode {
                id: n.id,
                label: n.label(),
                rows: n.rows,
                blocks: n.blocks,
                afm: self.afm[n.id].iter().cloned().collect(),
                interesting: self
                    .interesting
                    .range((n.id, SortOrder::empty())..)
                    .take_while(|((id, _), _)| *id == n.id)
                    .map(|((_, o), set)| InterestingEntry {
                        required: o.clone(),
                        orders: set.iter().cloned().collect(),
                    })
                    .collect(),
            })
            .collect();
        Explain { nodes }
    }

    /// Phase 2: re-permutes free attributes of the chosen operator orders
    /// so adjacent operators share longer prefixes.
    ///
    /// A change is kept only if the re-costed plan is strictly cheaper, and
    /// the process repeats until nothing improves, so the result is never
    /// more expensive than `plan` and refining it again is a no-op.
    pub fn refine(&self, plan: &PlanNode, opts: RefineOptions) -> Result<PlanNode, Error> {
        let mut current = plan.clone();
        loop {
            let orders = current.operator_orders();
            let proposal = self.refine_proposal(&current, opts);
            let mut changed: Vec<NodeId> = proposal
                .iter()
                .filter(|(id, p)| orders.get(id) != Some(p))
                .map(|(id, _)| *id)
                .collect();
            changed.sort_unstable();
            if changed.is_empty() {
                return Ok(current);
            }
            let mut whole = orders.clone();
            whole.extend(proposal.clone());
            let candidate = self.replan(whole)?;
            if candidate.cost.total < current.cost.total {
                log::debug!("refine: accepted {} order changes, cost {} -> {}", changed.len(), current.cost.total, candidate.cost.total);
                current = candidate;
                continue;
            }
            let mut improved = false;
            for id in changed {
                let mut one = current.operator_orders();
                one.insert(id, proposal[&id].clone());
                let candidate = self.replan(one)?;
                if candidate.cost.total < current.cost.total {
                    log::debug!("refine: accepted order change at node {id}, cost {} -> {}", current.cost.total, candidate.cost.total);
                    current = candidate;
                    improved = true;
                }
            }
            if !improved {
                return Ok(current);
            }
        }
    }

    fn replan(&self, fixed: BTreeMap<NodeId, SortOrder>) -> Result<PlanNode, Error> {
        let mut opt = Optimizer::new(self.tree, self.params, OrderSource::Fixed(fixed));
        opt.optimize()
    }

    /// New orders for operators whose free suffix the prefix solver would
    /// re-permute.
    fn refine_proposal(&self, plan: &PlanNode, opts: RefineOptions) -> BTreeMap<NodeId, SortOrder> {
        let mut chain: Vec<ChainNode> = Vec::new();
        collect_chain(plan, None, opts.group_by, &mut chain);
        for c in &mut chain {
            let node = self.tree.node(c.expr);
            let inputs: OrderSet = node
                .children
                .iter()
                .flat_map(|&ch| self.afm[ch].iter().cloned())
                .collect();
            let keep = inputs.iter().map(|q| c.order.lcp_len(q)).max().unwrap_or(0);
            c.fixed = c.order.truncate(keep);
            c.free = c.order.attr_set().difference(&c.fixed.attr_set());
        }
        // Only edges whose fixed prefixes agree can gain from a shared suffix.
        let linked = |i: usize| -> Option<usize> {
            chain[i]
                .parent
                .filter(|&p| chain[p].fixed == chain[i].fixed && !chain[i].free.is_empty() && !chain[p].free.is_empty())
        };
        let mut out = BTreeMap::new();
        let mut done = vec![false; chain.len()];
        for top in 0..chain.len() {
            if done[top] || linked(top).is_some() {
                continue;
            }
            // Component rooted at `top`, in breadth-first order.
            let mut members = vec![top];
            let mut edges = Vec::new();
            let mut k = 0;
            while k < members.len() {
                let u = members[k];
                for v in 0..chain.len() {
                    if linked(v) == Some(u) {
                        edges.push((k, members.len()));
                        members.push(v);
                    }
                }
                k += 1;
            }
            for &m in &members {
                done[m] = true;
            }
            if edges.is_empty() {
                continue;
            }
            let sets: Vec<AttributeSet> = members.iter().map(|&m| chain[m].free.clone()).collect();
            let f = match opts.benefit {
                RefineBenefit::Identity => BenefitFn::Identity,
                RefineBenefit::Cost => self.cost_benefit(&chain, &members, &edges),
            };
            let Ok(inst) = PrefixInstance::new(sets, edges, f) else { continue };
            let Ok(sol) = solve_tree_half_approx_with(&inst, self.tree.rule()) else { continue };
            for (&m, suffix) in members.iter().zip(sol.perms) {
                let c = &chain[m];
                let order = c.fixed.concat(&suffix).expect("free attributes follow the fixed prefix");
                out.insert(c.expr, order);
            }
        }
        out
    }

    /// `f(ℓ)`: enforcer saving from sharing `ℓ` free attributes beyond the
    /// fixed prefix, averaged over the component's edges and made monotone.
    fn cost_benefit(&self, chain: &[ChainNode], members: &[usize], edges: &[(usize, usize)]) -> BenefitFn<f64> {
        let longest = members.iter().map(|&m| chain[m].free.len()).max().unwrap_or(0);
        let mut table = vec![0.0; longest + 1];
        for &(a, b) in edges {
            let (parent, child) = (&chain[members[a]], &chain[members[b]]);
            let node = self.tree.node(child.expr);
            let common = self.tree.rule().permute(&parent.free.intersection(&child.free));
            let seg = |len: usize| {
                let attrs = child.fixed.attr_set().union(&common.truncate(len).attr_set());
                let d = if attrs.is_empty() {
                    1.0
                } else {
                    self.tree.distinct(child.expr, &attrs)
                };
                segmented_sort_cost(node.rows, node.blocks, d, &self.params).total
            };
            let base = seg(0);
            for (len, slot) in table.iter_mut().enumerate() {
                *slot += (base - seg(len.min(common.len()))).max(0.0);
            }
        }
        let mut run = 0.0_f64;
        for slot in table.iter_mut() {
            run = run.max(*slot / edges.len() as f64);
            *slot = run;
        }
        table[0] = 0.0;
        BenefitFn::Table(table)
    }
}

struct ChainNode {
    expr: NodeId,
    parent: Option<usize>,
    order: SortOrder,
    fixed: SortOrder,
    free: AttributeSet,
}

fn collect_chain(plan: &PlanNode, parent: Option<usize>, group_by: bool, out: &mut Vec<ChainNode>) {
    let here = match &plan.op {
        PlanOp::MergeJoin { order } => Some(order),
        PlanOp::GroupBy { order } if group_by => Some(order),
        _ => None,
    };
    let next = match here {
        Some(order) => {
            out.push(ChainNode {
                expr: plan.expr,
                parent,
                order: order.clone(),
                fixed: SortOrder::empty(),
                free: AttributeSet::new(),
            });
            Some(out.len() - 1)
        }
        None => parent,
    };
    for c in &plan.children {
        collect_chain(c, next, group_by, out);
    }
}

/// Phase 1 with interesting orders from afm.
pub fn optimize(tree: &QueryTree, params: &Params) -> Result<PlanNode, Error> {
    Optimizer::new(tree, *params, OrderSource::Afm).optimize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Catalog, QueryNode, QuerySpec};

    fn catalog(relations: &str, memory: f64) -> Catalog {
        Catalog::from_json(&format!(
            r#"{{"block_size": 100, "memory_blocks": {memory}, "cpu_unit": 0.001, "relations": [{relations}]}}"#
        ))
        .unwrap()
    }

    fn o(names: &[&str]) -> SortOrder {
        SortOrder::parse(names).unwrap()
    }

    #[test]
    fn scan_in_clustering_order_needs_no_sort() {
        let c = catalog(
            r#"{"name": "r", "columns": ["a", "b"], "tuples": 1000, "blocks": 40,
                "avg_tuple_bytes": 4, "clustering": ["r.a"]}"#,
            10.0,
        );
        let t = QueryTree::build(&QuerySpec::new(QueryNode::relation("r"), o(&["r.a"])), &c).unwrap();
        let plan = optimize(&t, &c.cost_params()).unwrap();
        assert!(matches!(plan.op, PlanOp::TableAccess { .. }));
        assert_eq!(plan.cost, Cost::new(40.0, 0.0));
        assert_eq!(cost_plan(&plan, &c.cost_params()), plan.cost);
    }

    #[test]
    fn root_enforcer_uses_partial_sort() {
        let c = catalog(
            r#"{"name": "r", "columns": ["a", "b"], "tuples": 1000, "blocks": 40,
                "avg_tuple_bytes": 4, "clustering": ["r.a"], "distinct": {"a": 50}}"#,
            10.0,
        );
        let t = QueryTree::build(&QuerySpec::new(QueryNode::relation("r"), o(&["r.a", "r.b"])), &c).unwrap();
        let plan = optimize(&t, &c.cost_params()).unwrap();
        match &plan.op {
            PlanOp::SortEnforcer { partial, segments, .. } => {
                assert!(*partial);
                assert_eq!(*segments, 50.0);
            }
            other => panic!("expected enforcer, got {other:?}"),
        }
        assert_eq!(cost_plan(&plan, &c.cost_params()), plan.cost);
    }

    fn two_unindexed() -> (Catalog, QueryTree) {
        let c = catalog(
            r#"{"name": "r", "columns": ["a", "b", "x"], "tuples": 5000, "blocks": 150,
                "avg_tuple_bytes": 3},
               {"name": "s", "columns": ["a", "b", "y"], "tuples": 4000, "blocks": 120,
                "avg_tuple_bytes": 3}"#,
            10.0,
        );
        let q = QuerySpec::new(
            QueryNode::join(QueryNode::relation("r"), QueryNode::relation("s"), &[("r.b", "s.b"), ("r.a", "s.a")]),
            SortOrder::empty(),
        );
        let t = QueryTree::build(&q, &c).unwrap();
        (c, t)
    }

    #[test]
    fn unindexed_join_sorts_both_inputs_canonically() {
        let (c, t) = two_unindexed();
        let plan = optimize(&t, &c.cost_params()).unwrap();
        assert_eq!(plan.op, PlanOp::MergeJoin { order: o(&["r.a", "r.b"]) });
        for child in &plan.children {
            match &child.op {
                PlanOp::SortEnforcer { to, partial, .. } => {
                    assert_eq!(to, &o(&["r.a", "r.b"]));
                    assert!(!partial);
                }
                other => panic!("expected sort, got {other:?}"),
            }
        }
        let mut ex = Optimizer::new(&t, c.cost_params(), OrderSource::Exhaustive);
        assert_eq!(ex.optimize().unwrap().cost, plan.cost);
    }

    #[test]
    fn memo_is_sound() {
        let (c, t) = two_unindexed();
        let mut opt = Optimizer::new(&t, c.cost_params(), OrderSource::Afm);
        let first = opt.optimize().unwrap();
        let again = opt.optimize().unwrap();
        opt.clear_memo();
        let fresh = opt.optimize().unwrap();
        assert_eq!(first, again);
        assert_eq!(first, fresh);
    }

    #[test]
    fn single_join_refine_is_noop() {
        let (c, t) = two_unindexed();
        let opt = Optimizer::new(&t, c.cost_params(), OrderSource::Afm);
        let plan = optimize(&t, &c.cost_params()).unwrap();
        let refined = opt.refine(&plan, RefineOptions::default()).unwrap();
        assert_eq!(refined, plan);
    }

    #[test]
    fn text_and_dot_render() {
        let (c, t) = two_unindexed();
        let plan = optimize(&t, &c.cost_params()).unwrap();
        let text = plan.to_text();
        assert!(text.starts_with("MergeJoin (r.a, r.b)"));
        assert_eq!(text.lines().count(), 5);
        let dot = plan.to_dot();
        assert!(dot.contains("n0 -> n1;"));
        assert!(dot.ends_with("}\n"));
    }
}

mod common;

use std::collections::BTreeMap;

use common::{random_instance, Shape};
use ordsel::catalog::{NodeId, QueryTree};
use ordsel::cost::sort_cost_full;
use ordsel::favorable::afm;
use ordsel::optimizer::{cost_plan, OrderSource, Optimizer, PlanNode, PlanOp, RefineBenefit, RefineOptions};
use ordsel::order::{AttributeSet, SortOrder};
use proptest::prelude::*;

fn tree_for(seed: u64, shape: &Shape) -> (QueryTree, ordsel::Params) {
    let (catalog, query) = random_instance(seed, shape);
    let tree = QueryTree::build(&query, &catalog).expect("generated query builds");
    (tree, catalog.cost_params())
}

/// Attribute set of every sort-based operator.
fn operator_sets(tree: &QueryTree) -> Vec<(NodeId, AttributeSet)> {
    (0..tree.nodes().len())
        .filter_map(|id| tree.join_set(id).cloned().or_else(|| tree.group_set(id)).map(|s| (id, s)))
        .collect()
}

/// Cheapest plan over every combination of operator orders, each planned
/// with its orders fixed.
fn enumerate_best(tree: &QueryTree, params: ordsel::Params) -> f64 {
    let sets = operator_sets(tree);
    let choices: Vec<Vec<SortOrder>> = sets.iter().map(|(_, s)| s.permutations()).collect();
    let mut idx = vec![0usize; sets.len()];
    let mut best = f64::INFINITY;
    loop {
        let fixed: BTreeMap<NodeId, SortOrder> = sets
            .iter()
            .zip(&idx)
            .zip(&choices)
            .map(|(((id, _), &i), c)| (*id, c[i].clone()))
            .collect();
        let plan = Optimizer::new(tree, params, OrderSource::Fixed(fixed)).optimize().unwrap();
        best = best.min(plan.cost.total);
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn check_partial_enforcers(plan: &PlanNode, params: &ordsel::Params) -> Result<(), TestCaseError> {
    for n in plan.walk() {
        if let PlanOp::SortEnforcer { partial: true, .. } = n.op {
            let full = sort_cost_full(n.rows, n.blocks, params).total;
            prop_assert!(n.local_cost.total <= full + 1e-9, "partial {} > full {}", n.local_cost.total, full);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn memo_is_sound(seed in any::<u64>()) {
        let (tree, params) = tree_for(seed, &Shape { joins: 3, ..Shape::default() });
        let mut opt = Optimizer::new(&tree, params, OrderSource::Afm);
        let first = opt.optimize().unwrap();
        opt.clear_memo();
        prop_assert_eq!(&opt.optimize().unwrap(), &first);
        prop_assert_eq!(&Optimizer::new(&tree, params, OrderSource::Afm).optimize().unwrap(), &first);
    }

    #[test]
    fn exhaustive_source_finds_the_enumerated_optimum(seed in any::<u64>(), joins in 1usize..=3) {
        let shape = Shape { joins, group_by: true, ..Shape::default() };
        let (tree, params) = tree_for(seed, &shape);
        prop_assume!(operator_sets(&tree).iter().all(|(_, s)| s.len() <= 4));
        let exhaustive = Optimizer::new(&tree, params, OrderSource::Exhaustive).optimize().unwrap();
        let best = enumerate_best(&tree, params);
        prop_assert!(close(exhaustive.cost.total, best), "exhaustive {} vs enumerated {}", exhaustive.cost.total, best);
        let phase1 = Optimizer::new(&tree, params, OrderSource::Afm).optimize().unwrap();
        prop_assert!(phase1.cost.total >= best - 1e-9 * best.max(1.0));
    }

    #[test]
    fn refine_is_monotone_and_idempotent(seed in any::<u64>(), identity in any::<bool>(), group_by in any::<bool>()) {
        let (tree, params) = tree_for(seed, &Shape { joins: 3, group_by: true, ..Shape::default() });
        let opt = {
            let mut o = Optimizer::new(&tree, params, OrderSource::Afm);
            o.optimize().unwrap();
            o
        };
        let plan = Optimizer::new(&tree, params, OrderSource::Afm).optimize().unwrap();
        let opts = RefineOptions {
            benefit: if identity { RefineBenefit::Identity } else { RefineBenefit::Cost },
            group_by,
        };
        let once = opt.refine(&plan, opts).unwrap();
        prop_assert!(once.cost.total <= plan.cost.total);
        let twice = opt.refine(&once, opts).unwrap();
        prop_assert_eq!(&twice, &once);
        check_partial_enforcers(&once, &params)?;
    }

    #[test]
    fn plans_recost_and_round_trip(seed in any::<u64>()) {
        let (tree, params) = tree_for(seed, &Shape { joins: 3, group_by: true, ..Shape::default() });
        let plan = Optimizer::new(&tree, params, OrderSource::Afm).optimize().unwrap();
        check_partial_enforcers(&plan, &params)?;
        let recost = cost_plan(&plan, &params);
        prop_assert!(close(recost.total, plan.cost.total));
        let json = serde_json::to_string(&plan).unwrap();
        let back: PlanNode = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(cost_plan(&back, &params), recost);
    }

    #[test]
    fn afm_is_deterministic_and_bounded(seed in any::<u64>()) {
        let (tree, _) = tree_for(seed, &Shape { joins: 3, group_by: true, ..Shape::default() });
        let sets = afm(&tree);
        prop_assert_eq!(&afm(&tree), &sets);
        for (id, node) in tree.nodes().iter().enumerate() {
            if let [l, r] = node.children[..] {
                let union = sets[l].union(&sets[r]).count();
                prop_assert!(sets[id].len() <= sets[l].len() + sets[r].len() + union + 1);
            }
        }
    }

    #[test]
    fn interesting_orders_are_permutations_of_the_join_set(seed in any::<u64>()) {
        let (tree, params) = tree_for(seed, &Shape { joins: 3, group_by: true, ..Shape::default() });
        let mut opt = Optimizer::new(&tree, params, OrderSource::Afm);
        opt.optimize().unwrap();
        for node in opt.explain().nodes {
            let Some(set) = tree.join_set(node.id).cloned().or_else(|| tree.group_set(node.id)) else { continue };
            for entry in &node.interesting {
                prop_assert!(!entry.orders.is_empty());
                for o in &entry.orders {
                    prop_assert_eq!(o.attr_set(), set.clone());
                    prop_assert_eq!(o.len(), set.len());
                }
            }
        }
    }
}

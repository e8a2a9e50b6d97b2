//! Random small catalogs and queries shared by the property tests.
#![allow(dead_code)]

use ordsel::catalog::{Catalog, QuerySpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const COLUMNS: [&str; 4] = ["a", "b", "c", "d"];

pub struct Shape {
    /// Number of joins in the left-deep chain (relations = joins + 1).
    pub joins: usize,
    /// Largest number of equality predicates per join.
    pub max_preds: usize,
    /// Allow a group-by above the joins.
    pub group_by: bool,
    /// Columns per relation, taken from the front of [`COLUMNS`].
    pub columns: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            joins: 2,
            max_preds: 3,
            group_by: false,
            columns: 4,
        }
    }
}

fn random_order(rng: &mut ChaCha8Rng, rel: &str, max: usize, columns: usize) -> Vec<String> {
    let mut cols = COLUMNS[..columns].to_vec();
    cols.shuffle(rng);
    let len = rng.gen_range(1..=max.min(columns));
    cols[..len].iter().map(|c| format!("{rel}.{c}")).collect()
}

fn relation(rng: &mut ChaCha8Rng, name: &str, columns: usize) -> Value {
    let cols = &COLUMNS[..columns];
    let tuples: u64 = rng.gen_range(500..50_000);
    let bytes: f64 = rng.gen_range(40..200) as f64;
    let blocks = ((tuples as f64 * bytes) / 4096.0).ceil().max(1.0) as u64;
    let mut distinct = serde_json::Map::new();
    for c in cols {
        distinct.insert((*c).into(), json!(rng.gen_range(2..500)));
    }
    let clustering = if rng.gen_bool(0.6) {
        random_order(rng, name, 2, columns)
    } else {
        Vec::new()
    };
    let mut indices = Vec::new();
    if rng.gen_bool(0.5) {
        let key = random_order(rng, name, 3, columns);
        let include: Vec<String> = cols
            .iter()
            .map(|c| format!("{name}.{c}"))
            .filter(|c| !key.contains(c))
            .collect();
        indices.push(json!({"key": key, "include": include}));
    }
    json!({
        "name": name,
        "columns": cols,
        "tuples": tuples,
        "blocks": blocks,
        "avg_tuple_bytes": bytes,
        "clustering": clustering,
        "indices": indices,
        "distinct": distinct,
    })
}

/// A catalog of `joins + 1` relations and a left-deep join chain over them.
pub fn random_instance(seed: u64, shape: &Shape) -> (Catalog, QuerySpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..=shape.joins).map(|i| format!("r{i}")).collect();
    let relations: Vec<Value> = names.iter().map(|n| relation(&mut rng, n, shape.columns)).collect();
    let catalog = json!({
        "block_size": 4096,
        "memory_blocks": rng.gen_range(3..40),
        "cpu_unit": 0.001,
        "relations": relations,
    });
    let mut tree = json!({"relation": names[0]});
    for (j, right) in names.iter().enumerate().skip(1) {
        let count = rng.gen_range(1..=shape.max_preds);
        let mut on = Vec::new();
        for _ in 0..count {
            let left = &names[rng.gen_range(0..j)];
            let lc = COLUMNS[..shape.columns].choose(&mut rng).unwrap();
            let rc = COLUMNS[..shape.columns].choose(&mut rng).unwrap();
            on.push(json!([format!("{left}.{lc}"), format!("{right}.{rc}")]));
        }
        tree = json!({"join": {"left": tree, "right": {"relation": right}, "on": on}});
    }
    let mut grouped = None;
    if shape.group_by && rng.gen_bool(0.5) {
        let attrs: Vec<String> = random_order(&mut rng, &names[0], 3, shape.columns);
        tree = json!({"group_by": {"input": tree, "attrs": attrs}});
        grouped = Some(attrs);
    }
    let order_by: Vec<String> = if rng.gen_bool(0.5) {
        Vec::new()
    } else if let Some(mut attrs) = grouped {
        attrs.shuffle(&mut rng);
        attrs.truncate(2);
        attrs
    } else {
        let rel = names.choose(&mut rng).unwrap();
        random_order(&mut rng, rel, 2, shape.columns)
    };
    let query = json!({"tree": tree, "order_by": order_by});
    let catalog = Catalog::from_json(&catalog.to_string()).expect("generated catalog is valid");
    let query = QuerySpec::from_json(&query.to_string()).expect("generated query parses");
    (catalog, query)
}

//! Relations, indices and statistics, plus the JSON query format.

mod equivalence;
mod query;
mod tree;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::CostParams;
use crate::error::{Error, ValidationError};
use crate::order::{Attribute, AttributeSet, SortOrder};

pub use equivalence::{representative_join_set, EquivalenceClasses};
pub use query::{Aggregate, QueryNode, QuerySpec, RelationRef};
pub use tree::{AccessKind, AccessPath, ExprKind, ExprNode, NodeId, QueryTree};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexEntry {
    pub key: SortOrder,
    #[serde(default)]
    pub include: AttributeSet,
}

impl IndexEntry {
    /// Key attributes plus included columns.
    pub fn columns(&self) -> AttributeSet {
        self.key.attr_set().union(&self.include)
    }

    pub fn covers(&self, referenced: &AttributeSet) -> bool {
        referenced.is_subset(&self.columns())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationCatalogEntry {
    pub name: String,
    pub columns: Vec<String>,
    pub tuples: u64,
    pub blocks: u64,
    pub avg_tuple_bytes: f64,
    #[serde(default)]
    pub clustering: SortOrder,
    #[serde(default)]
    pub indices: Vec<IndexEntry>,
    /// Distinct-value counts keyed by comma-separated column lists.
    #[serde(default)]
    pub distinct: BTreeMap<String, f64>,
}

impl RelationCatalogEntry {
    pub fn attribute(&self, column: &str) -> Attribute {
        Attribute::qualified(&self.name, column)
    }

    pub fn has_column(&self, column: &str) -> bool {
        self.columns.iter().any(|c| c == column)
    }

    /// Catalog-supplied distinct count for exactly this set of columns.
    pub fn distinct_for(&self, columns: &[&str]) -> Option<f64> {
        let mut want: Vec<&str> = columns.to_vec();
        want.sort_unstable();
        self.distinct.iter().find_map(|(k, v)| {
            let mut have: Vec<&str> = k.split(',').map(|c| column_of(c.trim())).collect();
            have.sort_unstable();
            (have == want).then_some(*v)
        })
    }

    fn validate(&self, path: &str) -> Result<(), ValidationError> {
        if self.name.is_empty() || self.name.contains('.') {
            return Err(ValidationError::new(
                format!("{path}.name"),
                "relation name must be non-empty and contain no '.'",
            ));
        }
        if self.columns.is_empty() {
            return Err(ValidationError::new(format!("{path}.columns"), "no columns"));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if c.is_empty() || c.contains('.') {
                return Err(ValidationError::new(
                    format!("{path}.columns[{i}]"),
                    "column name must be non-empty and contain no '.'",
                ));
            }
            if self.columns[..i].contains(c) {
                return Err(ValidationError::new(
                    format!("{path}.columns[{i}]"),
                    format!("duplicate column {c}"),
                ));
            }
        }
        if self.tuples > 0 && self.blocks == 0 {
            return Err(ValidationError::new(
                format!("{path}.blocks"),
                "blocks must be >= 1 when tuples > 0",
            ));
        }
        if !(self.avg_tuple_bytes > 0.0) {
            return Err(ValidationError::new(
                format!("{path}.avg_tuple_bytes"),
                "must be positive",
            ));
        }
        let check_attr = |a: &Attribute, p: String| -> Result<(), ValidationError> {
            if a.qualifier() != Some(self.name.as_str()) {
                return Err(ValidationError::new(
                    p,
                    format!("{a} must be qualified with relation name {}", self.name),
                ));
            }
            if !self.has_column(a.column()) {
                return Err(ValidationError::new(p, format!("unknown column {a}")));
            }
            Ok(())
        };
        for (i, a) in self.clustering.attrs().iter().enumerate() {
            check_attr(a, format!("{path}.clustering[{i}]"))?;
        }
        for (j, idx) in self.indices.iter().enumerate() {
            if idx.key.is_empty() {
                return Err(ValidationError::new(
                    format!("{path}.indices[{j}].key"),
                    "index key must be non-empty",
                ));
            }
            for (i, a) in idx.key.attrs().iter().enumerate() {
                check_attr(a, format!("{path}.indices[{j}].key[{i}]"))?;
            }
            for (i, a) in idx.include.iter().enumerate() {
                check_attr(a, format!("{path}.indices[{j}].include[{i}]"))?;
            }
        }
        for (k, v) in &self.distinct {
            let p = format!("{path}.distinct[\"{k}\"]");
            for c in k.split(',') {
                let c = c.trim();
                if let Some((q, _)) = c.split_once('.') {
                    if q != self.name {
                        return Err(ValidationError::new(p, format!("{c} belongs to another relation")));
                    }
                }
                if !self.has_column(column_of(c)) {
                    return Err(ValidationError::new(p, format!("unknown column {c}")));
                }
            }
            if !(*v >= 1.0) {
                return Err(ValidationError::new(p, "distinct count must be >= 1"));
            }
        }
        Ok(())
    }
}

fn column_of(s: &str) -> &str {
    s.split_once('.').map_or(s, |(_, c)| c)
}

/// The catalog file: cost parameters plus relation entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub block_size: f64,
    pub memory_blocks: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu_unit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge_pass_constant: Option<f64>,
    pub relations: Vec<RelationCatalogEntry>,
    #[serde(skip)]
    by_name: HashMap<String, usize>,
}

impl Catalog {
    pub fn new(
        block_size: f64,
        memory_blocks: f64,
        relations: Vec<RelationCatalogEntry>,
    ) -> Result<Self, ValidationError> {
        let mut c = Catalog {
            block_size,
            memory_blocks,
            cpu_unit: None,
            merge_pass_constant: None,
            relations,
            by_name: HashMap::new(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let mut c: Catalog = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<catalog>".into(),
            source: e,
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    /// Reads and validates a catalog file.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        let mut c: Catalog = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_owned(),
            source: e,
        })?;
        c.validate()?;
        Ok(c)
    }

    fn validate(&mut self) -> Result<(), ValidationError> {
        self.cost_params()
            .validate()
            .map_err(|m| ValidationError::new("memory_blocks", m))?;
        self.by_name.clear();
        for (i, r) in self.relations.iter().enumerate() {
            let path = format!("relations[{i}]");
            r.validate(&path)?;
            if self.by_name.insert(r.name.clone(), i).is_some() {
                return Err(ValidationError::new(
                    format!("{path}.name"),
                    format!("duplicate relation {}", r.name),
                ));
            }
        }
        Ok(())
    }

    pub fn relation(&self, name: &str) -> Option<&RelationCatalogEntry> {
        self.by_name.get(name).map(|&i| &self.relations[i])
    }

    pub fn cost_params(&self) -> CostParams<f64> {
        let mut p = CostParams::new(self.memory_blocks, self.block_size, 1e-6);
        if let Some(u) = self.cpu_unit {
            p.cpu_unit = u;
        }
        if let Some(m) = self.merge_pass_constant {
            p.merge_pass_constant = m;
        }
        p
    }
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::order::{Attribute, SortOrder};

/// A base relation reference: either a bare name or `{name, alias}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RelationRef {
    Name(String),
    Aliased {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alias: Option<String>,
    },
}

impl RelationRef {
    pub fn name(&self) -> &str {
        match self {
            RelationRef::Name(n) => n,
            RelationRef::Aliased { name, .. } => name,
        }
    }

    /// The qualifier attributes of this occurrence use.
    pub fn alias(&self) -> &str {
        match self {
            RelationRef::Name(n) => n,
            RelationRef::Aliased { name, alias } => alias.as_deref().unwrap_or(name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub name: String,
    #[serde(default)]
    pub args: Vec<Attribute>,
}

fn default_selectivity() -> f64 {
    0.1
}

/// One node of the JSON query tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QueryNode {
    Relation(RelationRef),
    Join {
        left: Box<QueryNode>,
        right: Box<QueryNode>,
        on: Vec<(Attribute, Attribute)>,
    },
    Select {
        input: Box<QueryNode>,
        #[serde(default)]
        predicate: String,
        /// Attributes the predicate reads.
        #[serde(default)]
        attrs: Vec<Attribute>,
        #[serde(default = "default_selectivity")]
        selectivity: f64,
    },
    Project {
        input: Box<QueryNode>,
        attrs: Vec<Attribute>,
    },
    GroupBy {
        input: Box<QueryNode>,
        attrs: Vec<Attribute>,
        #[serde(default)]
        aggregates: Vec<Aggregate>,
    },
}

impl QueryNode {
    pub fn relation(name: &str) -> Self {
        QueryNode::Relation(RelationRef::Name(name.to_owned()))
    }

    pub fn aliased(name: &str, alias: &str) -> Self {
        QueryNode::Relation(RelationRef::Aliased {
            name: name.to_owned(),
            alias: Some(alias.to_owned()),
        })
    }

    pub fn join(left: QueryNode, right: QueryNode, on: &[(&str, &str)]) -> Self {
        QueryNode::Join {
            left: Box::new(left),
            right: Box::new(right),
            on: on
                .iter()
                .map(|(a, b)| (a.parse().expect("attribute"), b.parse().expect("attribute")))
                .collect(),
        }
    }
}

/// A query: join tree plus the required output order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub tree: QueryNode,
    #[serde(default)]
    pub order_by: SortOrder,
    /// Attributes that lead any otherwise arbitrary permutation, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub canonical_rank: Vec<Attribute>,
}

impl QuerySpec {
    pub fn new(tree: QueryNode, order_by: SortOrder) -> Self {
        Self {
            tree,
            order_by,
            canonical_rank: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<query>".into(),
            source: e,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("query serializes")
    }

    /// Reads a query file. Name resolution happens in [`super::QueryTree::build`].
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_owned(),
            source: e,
        })
    }
}

//! A small declarative graph-pattern language over the news graph.
//!
//! ```text
//! MATCH (a:Article)-[:MENTIONS]->(e:Entity {id: $id})
//! WHERE a.title = "..." RETURN a ORDER BY a.date DESC LIMIT 3
//! ```
//!
//! Patterns are a single linear path. Filters are equality only; the
//! pseudo-property `id` addresses a node's key. Matching is homomorphic:
//! two pattern positions may bind the same node.

mod exec;
mod parser;
mod related;
mod templates;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Direction, EdgeType, GraphError, Node, NodeLabel};

pub use exec::execute;
pub use parser::parse;
pub use related::{related_articles, RelatedArticle, RelatedWeights};
pub use templates::{ParamKind, PerGroup, QueryTemplate, TemplateRegistry, BUILTIN_TEMPLATES};

pub type Params = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePattern {
    pub var: Option<String>,
    pub label: Option<NodeLabel>,
}

/// Edge between path position `i` and `i + 1`. `Out` is `-[]->`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePattern {
    pub edge_type: Option<EdgeType>,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    Param(String),
    Literal(String),
}

/// `node.prop = value`, where `node` is a path position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Filter {
    pub node: usize,
    pub prop: String,
    pub value: Operand,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderBy {
    pub var: String,
    pub prop: String,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Limit {
    Count(u64),
    Param(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    pub nodes: Vec<NodePattern>,
    pub edges: Vec<EdgePattern>,
    /// Sorted and deduplicated.
    pub filters: Vec<Filter>,
    pub return_var: String,
    pub order_by: Option<OrderBy>,
    pub limit: Option<Limit>,
}

impl QueryPlan {
    pub fn var_index(&self, var: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.var.as_deref() == Some(var))
    }

    /// Every `$name` in the plan, sorted and deduplicated.
    pub fn placeholders(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .filters
            .iter()
            .filter_map(|f| match &f.value {
                Operand::Param(p) => Some(p.clone()),
                Operand::Literal(_) => None,
            })
            .chain(match &self.limit {
                Some(Limit::Param(p)) => Some(p.clone()),
                _ => None,
            })
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

impl fmt::Display for QueryPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&parser::render(self))
    }
}

/// One result binding: named variable → node snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ResultRow(pub BTreeMap<String, Node>);

impl ResultRow {
    pub fn get(&self, var: &str) -> Option<&Node> {
        self.0.get(var)
    }
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unbound variable {0:?}")]
    UnboundVariable(String),
    #[error("variable {0:?} bound twice")]
    DuplicateVariable(String),
    #[error("unknown label or edge type {0:?}")]
    UnknownLabelOrEdgeType(String),
    #[error("missing parameter ${0}")]
    MissingParam(String),
    #[error("invalid value for parameter ${name}: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("invalid template {name:?}: {reason}")]
    InvalidTemplate { name: String, reason: String },
    #[error("unknown article {0:?}")]
    UnknownArticle(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Reads a property for query purposes; `id` is the node key.
pub fn node_prop<'a>(node: &'a Node, prop: &str) -> Option<&'a str> {
    if prop == "id" {
        Some(&node.key)
    } else {
        node.props.get(prop).map(String::as_str)
    }
}

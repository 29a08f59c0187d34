//! Named, parameterized queries the dialogue manager runs.
//!
//! Registry file format: a JSON object mapping template name to
//! `{source, params: {name: kind}, per_group?: {var, limit}}`. `per_group`
//! post-processes the ordered rows, keeping the first row for each distinct
//! node bound to `var` and at most `limit` such groups.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{execute, parse, Params, QueryError, QueryPlan, ResultRow};
use crate::graph::GraphStore;
use crate::text::fold_key;

pub const BUILTIN_TEMPLATES: &str = include_str!("../../assets/templates.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    EntityId,
    Resort,
    Tag,
    Name,
    Count,
}

impl ParamKind {
    fn normalize(self, raw: &str) -> String {
        match self {
            ParamKind::Resort | ParamKind::Tag | ParamKind::Name => fold_key(raw),
            ParamKind::EntityId | ParamKind::Count => raw.trim().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerGroup {
    pub var: String,
    pub limit: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub source: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_group: Option<PerGroup>,
}

#[derive(Debug, Clone)]
pub struct QueryTemplate {
    pub name: String,
    pub spec: TemplateSpec,
    pub plan: QueryPlan,
}

impl QueryTemplate {
    pub fn new(name: &str, spec: TemplateSpec) -> Result<Self, QueryError> {
        let invalid = |reason: String| QueryError::InvalidTemplate { name: name.to_string(), reason };
        let plan = parse(&spec.source).map_err(|e| invalid(e.to_string()))?;
        let declared: Vec<&String> = spec.params.keys().collect();
        let used = plan.placeholders();
        if declared.iter().map(|s| s.as_str()).ne(used.iter().map(String::as_str)) {
            return Err(invalid(format!("declared params {declared:?} but source uses {used:?}")));
        }
        if let Some(g) = &spec.per_group {
            if plan.var_index(&g.var).is_none() {
                return Err(invalid(format!("per_group variable {:?} is not bound", g.var)));
            }
        }
        Ok(Self { name: name.to_string(), spec, plan })
    }

    /// Normalizes parameter values by their declared kind.
    pub fn bind(&self, params: &Params) -> Params {
        params
            .iter()
            .map(|(k, v)| {
                let v = match self.spec.params.get(k) {
                    Some(kind) => kind.normalize(v),
                    None => v.clone(),
                };
                (k.clone(), v)
            })
            .collect()
    }

    pub fn run(&self, params: &Params, store: &GraphStore) -> Result<Vec<ResultRow>, QueryError> {
        let rows = execute(&self.plan, &self.bind(params), store)?;
        Ok(match &self.spec.per_group {
            None => rows,
            Some(group) => {
                let mut seen = BTreeSet::new();
                rows.into_iter()
                    .filter(|row| row.get(&group.var).is_some_and(|n| seen.insert(n.key.clone())))
                    .take(group.limit)
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, QueryTemplate>,
}

impl TemplateRegistry {
    pub fn from_json(text: &str) -> Result<Self, QueryError> {
        let specs: BTreeMap<String, TemplateSpec> = serde_json::from_str(text).map_err(|e| QueryError::InvalidTemplate {
            name: "<registry>".into(),
            reason: e.to_string(),
        })?;
        let mut registry = Self::default();
        for (name, spec) in specs {
            registry.insert(QueryTemplate::new(&name, spec)?);
        }
        Ok(registry)
    }

    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_TEMPLATES).expect("built-in templates are valid")
    }

    pub fn insert(&mut self, template: QueryTemplate) {
        self.templates.insert(template.name.clone(), template);
    }

    pub fn get(&self, name: &str) -> Option<&QueryTemplate> {
        self.templates.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn run_template(&self, name: &str, params: &Params, store: &GraphStore) -> Result<Vec<ResultRow>, QueryError> {
        self.get(name)
            .ok_or_else(|| QueryError::UnknownTemplate(name.to_string()))?
            .run(params, store)
    }
}

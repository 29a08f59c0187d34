use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use super::{node_prop, Limit, Operand, Params, QueryError, QueryPlan, ResultRow};
use crate::graph::{EdgeType, GraphStore, NodeId};

fn resolve<'a>(value: &'a Operand, params: &'a Params) -> Result<&'a str, QueryError> {
    match value {
        Operand::Literal(s) => Ok(s),
        Operand::Param(p) => params.get(p).map(String::as_str).ok_or_else(|| QueryError::MissingParam(p.clone())),
    }
}

struct Compiled<'a> {
    plan: &'a QueryPlan,
    /// Per path position: `(prop, expected value)`.
    filters: Vec<Vec<(&'a str, &'a str)>>,
}

impl Compiled<'_> {
    fn accepts(&self, store: &GraphStore, pos: usize, id: NodeId) -> bool {
        let Some(node) = store.node(id) else { return false };
        if self.plan.nodes[pos].label.is_some_and(|l| l != node.label) {
            return false;
        }
        self.filters[pos].iter().all(|(prop, want)| node_prop(node, prop) == Some(*want))
    }
}

/// Evaluates `plan` against `store`: every binding of the path satisfying
/// the filters, distinct over the named variables, ordered, then limited.
pub fn execute(plan: &QueryPlan, params: &Params, store: &GraphStore) -> Result<Vec<ResultRow>, QueryError> {
    for name in plan.placeholders() {
        if !params.contains_key(&name) {
            return Err(QueryError::MissingParam(name));
        }
    }
    let limit = match &plan.limit {
        None => None,
        Some(Limit::Count(n)) => Some(*n),
        Some(Limit::Param(p)) => {
            let operand = Operand::Param(p.clone());
            let raw = resolve(&operand, params)?;
            Some(raw.trim().parse::<u64>().map_err(|_| QueryError::InvalidParam {
                name: p.clone(),
                reason: format!("expected a non-negative integer, got {raw:?}"),
            })?)
        }
    };
    if limit == Some(0) {
        return Ok(Vec::new());
    }

    let mut filters = vec![Vec::new(); plan.nodes.len()];
    for f in &plan.filters {
        filters[f.node].push((f.prop.as_str(), resolve(&f.value, params)?));
    }
    let compiled = Compiled { plan, filters };

    let start: Vec<NodeId> = match (plan.nodes[0].label, compiled.filters[0].iter().find(|(p, _)| *p == "id")) {
        (Some(label), Some((_, key))) => store.find(label, key).into_iter().collect(),
        (Some(label), None) => store.nodes_with_label(label),
        (None, _) => store.node_ids().collect(),
    };

    let named: Vec<usize> = (0..plan.nodes.len()).filter(|&i| plan.nodes[i].var.is_some()).collect();
    let mut seen: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    let mut path = Vec::with_capacity(plan.nodes.len());
    for id in start {
        if compiled.accepts(store, 0, id) {
            path.push(id);
            extend(&compiled, store, &mut path, &named, &mut seen);
            path.pop();
        }
    }

    let mut rows: Vec<Vec<NodeId>> = seen.into_iter().collect();
    let key_of = |id: NodeId| store.node(id).map(|n| n.key.as_str()).unwrap_or_default();
    let slot = |var: &str| named.iter().position(|&i| plan.nodes[i].var.as_deref() == Some(var));
    let ret_slot = slot(&plan.return_var).expect("return variable is bound");

    let tie_break = |a: &Vec<NodeId>, b: &Vec<NodeId>| {
        key_of(a[ret_slot])
            .cmp(key_of(b[ret_slot]))
            .then_with(|| a.iter().map(|&i| key_of(i)).cmp(b.iter().map(|&i| key_of(i))))
    };

    if let Some(order) = &plan.order_by {
        let order_slot = slot(&order.var).expect("order variable is bound");
        let mut keyed = Vec::with_capacity(rows.len());
        for row in rows {
            let node = store.node(row[order_slot]).expect("bound node exists");
            let value = node_prop(node, &order.prop).ok_or_else(|| {
                QueryError::TypeMismatch(format!(
                    "cannot order by {}.{}: {} {:?} has no such property",
                    order.var, order.prop, node.label, node.key
                ))
            })?;
            keyed.push((value.to_string(), row));
        }
        keyed.sort_by(|(va, a), (vb, b)| {
            let primary = if order.descending { vb.cmp(va) } else { va.cmp(vb) };
            primary.then_with(|| tie_break(a, b))
        });
        rows = keyed.into_iter().map(|(_, r)| r).collect();
    } else {
        rows.sort_by(|a, b| tie_break(a, b));
    }
    if let Some(n) = limit {
        rows.truncate(usize::try_from(n).unwrap_or(usize::MAX));
    }

    Ok(rows
        .into_iter()
        .map(|row| {
            let map: BTreeMap<String, _> = named
                .iter()
                .zip(row)
                .map(|(&i, id)| {
                    let var = plan.nodes[i].var.clone().expect("named");
                    (var, store.node(id).expect("bound node exists").clone())
                })
                .collect();
            ResultRow(map)
        })
        .collect())
}

fn extend(
    compiled: &Compiled<'_>,
    store: &GraphStore,
    path: &mut Vec<NodeId>,
    named: &[usize],
    seen: &mut BTreeSet<Vec<NodeId>>,
) {
    let pos = path.len();
    if pos == compiled.plan.nodes.len() {
        seen.insert(named.iter().map(|&i| path[i]).collect());
        return;
    }
    let edge = &compiled.plan.edges[pos - 1];
    let here = path[pos - 1];
    let types: &[EdgeType] = match &edge.edge_type {
        Some(t) => std::slice::from_ref(t),
        None => &EdgeType::ALL,
    };
    let next: BTreeSet<NodeId> = types
        .iter()
        .flat_map(|&t| store.adjacent(here, t, edge.direction))
        .filter(|&id| compiled.accepts(store, pos, id))
        .collect();
    for id in next {
        path.push(id);
        extend(compiled, store, path, named, seen);
        path.pop();
    }
}

/// Newest date first, then key ascending.
pub(crate) fn newest_first(store: &GraphStore, a: NodeId, b: NodeId) -> Ordering {
    let date = |id: NodeId| store.node(id).and_then(|n| n.props.get("date").cloned()).unwrap_or_default();
    let key = |id: NodeId| store.node(id).map(|n| n.key.clone()).unwrap_or_default();
    date(b).cmp(&date(a)).then_with(|| key(a).cmp(&key(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeLabel, Properties};
    use crate::query::parse;

    fn p(pairs: &[(&str, &str)]) -> Properties {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn empty_store_yields_nothing() {
        let plan = parse("MATCH (a:Article)-[:PART_OF]->(r:Resort) RETURN a").unwrap();
        assert!(execute(&plan, &Params::new(), &GraphStore::new()).unwrap().is_empty());
    }

    #[test]
    fn limit_zero_and_missing_params() {
        let mut g = GraphStore::new();
        g.merge_node(NodeLabel::Tag, "x", Properties::new()).unwrap();
        let plan = parse("MATCH (t:Tag) RETURN t LIMIT 0").unwrap();
        assert!(execute(&plan, &Params::new(), &g).unwrap().is_empty());
        let plan = parse("MATCH (t:Tag {id: $name}) RETURN t").unwrap();
        assert!(matches!(execute(&plan, &Params::new(), &g), Err(QueryError::MissingParam(n)) if n == "name"));
        let plan = parse("MATCH (t:Tag) RETURN t LIMIT $n").unwrap();
        let params = Params::from([("n".to_string(), "many".to_string())]);
        assert!(matches!(execute(&plan, &params, &g), Err(QueryError::InvalidParam { .. })));
    }

    #[test]
    fn ordering_on_missing_property_is_type_mismatch() {
        let mut g = GraphStore::new();
        g.merge_node(NodeLabel::Tag, "x", Properties::new()).unwrap();
        let plan = parse("MATCH (t:Tag) RETURN t ORDER BY t.date DESC").unwrap();
        assert!(matches!(execute(&plan, &Params::new(), &g), Err(QueryError::TypeMismatch(_))));
    }

    #[test]
    fn rows_are_distinct_over_named_variables() {
        let mut g = GraphStore::new();
        let a = g
            .merge_node(NodeLabel::Article, "a1", p(&[("date", "2023-01-01T00:00:00Z"), ("title", "t")]))
            .unwrap();
        for t in ["x", "y"] {
            let tag = g.merge_node(NodeLabel::Tag, t, Properties::new()).unwrap();
            g.merge_edge(a, EdgeType::HasTag, tag).unwrap();
        }
        let plan = parse("MATCH (a:Article)-[:HAS_TAG]->() RETURN a").unwrap();
        assert_eq!(execute(&plan, &Params::new(), &g).unwrap().len(), 1);
        let plan = parse("MATCH (a:Article)-[:HAS_TAG]->(t) RETURN a").unwrap();
        let rows = execute(&plan, &Params::new(), &g).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].get("t").unwrap().key, "x");
    }
}

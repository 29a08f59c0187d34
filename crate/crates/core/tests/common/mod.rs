#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use newsagent::graph::{EdgeType, GraphStore, NodeLabel, Properties, SharedGraph};
use newsagent::ingest::{ingest, normalize, IngestReport};
use newsagent::linking::{load_gazetteer, Gazetteer, GazetteerLinker};
use newsagent::query::{execute, parse, Params, QueryError};
use newsagent::service::{Agent, AgentSettings};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn gazetteer() -> Arc<Gazetteer> {
    Arc::new(load_gazetteer(fixture("gazetteer.json")).expect("fixture gazetteer loads"))
}

pub async fn ingest_fixture(graph: &SharedGraph, gazetteer: &Arc<Gazetteer>, file: &str, source: &str) -> IngestReport {
    let bytes = std::fs::read(fixture(file)).expect("fixture exists");
    let feed = normalize(&bytes, source).expect("fixture feed is valid");
    ingest(&feed, &GazetteerLinker::new(gazetteer.clone()), graph).await.expect("ingest succeeds")
}

/// Graph loaded with one feed fixture.
pub async fn fixture_graph(file: &str, source: &str) -> SharedGraph {
    let graph = SharedGraph::new(GraphStore::new());
    ingest_fixture(&graph, &gazetteer(), file, source).await;
    graph
}

/// Agent over the ten-article desk fixture with default settings.
pub async fn desk_agent() -> Agent {
    let gaz = gazetteer();
    let graph = SharedGraph::new(GraphStore::new());
    ingest_fixture(&graph, &gaz, "desk10.json", "desk").await;
    Agent::new(graph, gaz, AgentSettings::default())
}

// Random graphs and queries for oracle comparisons.

pub const DATES: [&str; 4] =
    ["2023-03-01T08:00:00Z", "2023-03-02T08:00:00Z", "2023-03-03T08:00:00Z", "2023-03-04T08:00:00Z"];
pub const WORDS: [&str; 3] = ["alpha", "beta", "gamma"];

/// A graph described independently of the store: nodes in insertion order
/// and the edge list actually accepted by the store.
#[derive(Debug)]
pub struct RandomGraph {
    pub store: GraphStore,
    pub nodes: Vec<(NodeLabel, String, Properties)>,
    pub edges: BTreeSet<(usize, EdgeType, usize)>,
}

fn props(pairs: &[(&str, String)]) -> Properties {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> RandomGraph {
    let mut store = GraphStore::new();
    let mut nodes = Vec::new();
    let n = rng.random_range(0..=max_nodes);
    for i in 0..n {
        let label = *NodeLabel::ALL.choose(rng).unwrap();
        let (key, p) = match label {
            NodeLabel::Article => (
                format!("a{i}"),
                props(&[
                    ("date", DATES.choose(rng).unwrap().to_string()),
                    ("title", WORDS.choose(rng).unwrap().to_string()),
                ]),
            ),
            NodeLabel::Entity => (
                format!("Q{}", i + 1),
                props(&[
                    ("name", WORDS.choose(rng).unwrap().to_string()),
                    ("url", format!("https://www.wikidata.org/wiki/Q{}", i + 1)),
                ]),
            ),
            NodeLabel::Resort => (format!("r{i}"), props(&[("display_name", WORDS.choose(rng).unwrap().to_string())])),
            NodeLabel::Tag => (format!("t{i}"), Properties::new()),
            NodeLabel::EntityClass => (format!("c{i}"), Properties::new()),
        };
        let id = store.merge_node(label, &key, p.clone()).expect("generated node is valid");
        assert_eq!(id.index(), nodes.len());
        // Schema rule: keyed vocabulary nodes keep their spoken form in display_name.
        let mut p = p;
        if matches!(label, NodeLabel::Resort | NodeLabel::Tag | NodeLabel::EntityClass) {
            p.entry("display_name".into()).or_insert_with(|| key.clone());
        }
        nodes.push((label, key, p));
    }
    let mut edges = BTreeSet::new();
    if !nodes.is_empty() {
        let attempts = rng.random_range(0..=nodes.len() * 3);
        let ids: Vec<_> = (0..nodes.len()).collect();
        for _ in 0..attempts {
            let ty = *EdgeType::ALL.choose(rng).unwrap();
            let (from, to) = ty.endpoints();
            let src: Vec<usize> = ids.iter().copied().filter(|&i| nodes[i].0 == from).collect();
            let dst: Vec<usize> = ids.iter().copied().filter(|&i| nodes[i].0 == to).collect();
            let (Some(&s), Some(&d)) = (src.choose(rng), dst.choose(rng)) else { continue };
            let sid = store.find(from, &nodes[s].1).unwrap();
            let did = store.find(to, &nodes[d].1).unwrap();
            if store.merge_edge(sid, ty, did).is_ok() {
                edges.insert((s, ty, d));
            }
        }
    }
    RandomGraph { store, nodes, edges }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GVal {
    Lit(String),
    Param(String),
}

#[derive(Debug, Clone)]
pub struct GNode {
    pub var: Option<String>,
    pub label: Option<NodeLabel>,
    pub inline: Vec<(String, GVal)>,
}

#[derive(Debug, Clone)]
pub struct GEdge {
    pub edge_type: Option<EdgeType>,
    pub outgoing: bool,
}

#[derive(Debug, Clone)]
pub enum GLimit {
    Count(u64),
    Param(String),
}

/// A generated query in structured form, rendered to text for the engine.
#[derive(Debug, Clone)]
pub struct GQuery {
    pub nodes: Vec<GNode>,
    pub edges: Vec<GEdge>,
    pub wheres: Vec<(String, String, GVal)>,
    pub ret: String,
    pub order: Option<(String, String, bool)>,
    pub limit: Option<GLimit>,
    pub params: Params,
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn val_text(v: &GVal) -> String {
    match v {
        GVal::Lit(s) => quote(s),
        GVal::Param(p) => format!("${p}"),
    }
}

impl GQuery {
    pub fn text(&self) -> String {
        let mut out = String::from("MATCH ");
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                let e = &self.edges[i - 1];
                let ty = e.edge_type.map(|t| format!(":{}", t.as_str())).unwrap_or_default();
                if e.outgoing {
                    out.push_str(&format!("-[{ty}]->"));
                } else {
                    out.push_str(&format!("<-[{ty}]-"));
                }
            }
            out.push('(');
            if let Some(v) = &n.var {
                out.push_str(v);
            }
            if let Some(l) = n.label {
                out.push(':');
                out.push_str(l.as_str());
            }
            if !n.inline.is_empty() {
                let body: Vec<String> = n.inline.iter().map(|(k, v)| format!("{k}: {}", val_text(v))).collect();
                out.push_str(&format!(" {{{}}}", body.join(", ")));
            }
            out.push(')');
        }
        if !self.wheres.is_empty() {
            let conds: Vec<String> = self.wheres.iter().map(|(v, p, x)| format!("{v}.{p} = {}", val_text(x))).collect();
            out.push_str(&format!(" WHERE {}", conds.join(" AND ")));
        }
        out.push_str(&format!(" RETURN {}", self.ret));
        if let Some((v, p, desc)) = &self.order {
            out.push_str(&format!(" ORDER BY {v}.{p} {}", if *desc { "DESC" } else { "ASC" }));
        }
        match &self.limit {
            Some(GLimit::Count(n)) => out.push_str(&format!(" LIMIT {n}")),
            Some(GLimit::Param(p)) => out.push_str(&format!(" LIMIT ${p}")),
            None => {}
        }
        out
    }
}

const PROPS: [&str; 5] = ["id", "title", "date", "name", "display_name"];

fn random_value<R: Rng>(rng: &mut R, graph: &RandomGraph) -> String {
    let mut pool: Vec<String> = vec!["zzz".into(), "it's".into()];
    pool.extend(WORDS.iter().map(|s| s.to_string()));
    pool.extend(DATES.iter().map(|s| s.to_string()));
    pool.extend(graph.nodes.iter().map(|n| n.1.clone()));
    pool.choose(rng).unwrap().clone()
}

pub fn random_query<R: Rng>(rng: &mut R, graph: &RandomGraph) -> GQuery {
    let len = rng.random_range(1..=3);
    let mut params = Params::new();
    let mut next_param = 0;
    let mut value = |rng: &mut R, params: &mut Params| {
        if rng.random_bool(0.3) {
            let name = format!("p{next_param}");
            next_param += 1;
            params.insert(name.clone(), random_value(rng, graph));
            GVal::Param(name)
        } else {
            GVal::Lit(random_value(rng, graph))
        }
    };
    let mut nodes = Vec::new();
    for i in 0..len {
        let var = (i == 0 || rng.random_bool(0.6)).then(|| format!("v{i}"));
        let label = rng.random_bool(0.75).then(|| *NodeLabel::ALL.choose(rng).unwrap());
        let mut inline = Vec::new();
        if rng.random_bool(0.25) {
            inline.push((PROPS.choose(rng).unwrap().to_string(), value(rng, &mut params)));
        }
        nodes.push(GNode { var, label, inline });
    }
    let edges = (1..len)
        .map(|_| GEdge {
            edge_type: rng.random_bool(0.8).then(|| *EdgeType::ALL.choose(rng).unwrap()),
            outgoing: rng.random_bool(0.5),
        })
        .collect();
    let vars: Vec<String> = nodes.iter().filter_map(|n| n.var.clone()).collect();
    let mut wheres = Vec::new();
    for _ in 0..rng.random_range(0..=2) {
        let var = vars.choose(rng).unwrap().clone();
        wheres.push((var, PROPS.choose(rng).unwrap().to_string(), value(rng, &mut params)));
    }
    let ret = vars.choose(rng).unwrap().clone();
    let order = rng
        .random_bool(0.5)
        .then(|| (vars.choose(rng).unwrap().clone(), ["id", "date", "title"].choose(rng).unwrap().to_string(), rng.random_bool(0.5)));
    let limit = match rng.random_range(0..4) {
        0 => Some(GLimit::Count(rng.random_range(0..5))),
        1 => {
            params.insert("lim".into(), rng.random_range(0..5u64).to_string());
            Some(GLimit::Param("lim".into()))
        }
        _ => None,
    };
    if rng.random_bool(0.05) {
        if let Some(k) = params.keys().next().cloned() {
            params.remove(&k);
        }
    }
    GQuery { nodes, edges, wheres, ret, order, limit, params }
}

/// A result row as `(var, label, key)` triples in variable order.
pub type Flat = Vec<(String, NodeLabel, String)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Rows(Vec<Flat>),
    MissingParam,
    TypeMismatch,
    Other(String),
}

pub fn run_engine(q: &GQuery, store: &GraphStore) -> Outcome {
    let plan = match parse(&q.text()) {
        Ok(p) => p,
        Err(e) => return Outcome::Other(format!("parse: {e}")),
    };
    match execute(&plan, &q.params, store) {
        Ok(rows) => Outcome::Rows(
            rows.iter()
                .map(|r| r.0.iter().map(|(v, n)| (v.clone(), n.label, n.key.clone())).collect())
                .collect(),
        ),
        Err(QueryError::MissingParam(_)) => Outcome::MissingParam,
        Err(QueryError::TypeMismatch(_)) => Outcome::TypeMismatch,
        Err(e) => Outcome::Other(e.to_string()),
    }
}

fn prop_of<'a>(node: &'a (NodeLabel, String, Properties), prop: &str) -> Option<&'a str> {
    if prop == "id" {
        Some(&node.1)
    } else {
        node.2.get(prop).map(String::as_str)
    }
}

/// Enumerate-and-filter evaluation over the independent description.
pub fn run_oracle(q: &GQuery, g: &RandomGraph) -> Outcome {
    let mut needed: Vec<&String> = Vec::new();
    for n in &q.nodes {
        for (_, v) in &n.inline {
            if let GVal::Param(p) = v {
                needed.push(p);
            }
        }
    }
    for (_, _, v) in &q.wheres {
        if let GVal::Param(p) = v {
            needed.push(p);
        }
    }
    if let Some(GLimit::Param(p)) = &q.limit {
        needed.push(p);
    }
    if needed.iter().any(|p| !q.params.contains_key(*p)) {
        return Outcome::MissingParam;
    }
    let resolve = |v: &GVal| match v {
        GVal::Lit(s) => s.clone(),
        GVal::Param(p) => q.params[p].clone(),
    };
    let limit = match &q.limit {
        None => None,
        Some(GLimit::Count(n)) => Some(*n as usize),
        Some(GLimit::Param(p)) => Some(q.params[p].parse::<usize>().unwrap()),
    };
    if limit == Some(0) {
        return Outcome::Rows(Vec::new());
    }

    let pos_of = |var: &str| q.nodes.iter().position(|n| n.var.as_deref() == Some(var)).unwrap();
    let mut conds: Vec<(usize, String, String)> = Vec::new();
    for (i, n) in q.nodes.iter().enumerate() {
        for (p, v) in &n.inline {
            conds.push((i, p.clone(), resolve(v)));
        }
    }
    for (var, p, v) in &q.wheres {
        conds.push((pos_of(var), p.clone(), resolve(v)));
    }

    let k = q.nodes.len();
    let n = g.nodes.len();
    let named: Vec<usize> = (0..k).filter(|&i| q.nodes[i].var.is_some()).collect();
    let mut rows: BTreeSet<Vec<usize>> = BTreeSet::new();
    if n > 0 {
        let mut assign = vec![0usize; k];
        'outer: loop {
            let ok = (0..k).all(|i| q.nodes[i].label.is_none_or(|l| g.nodes[assign[i]].0 == l))
                && conds.iter().all(|(i, p, v)| prop_of(&g.nodes[assign[*i]], p) == Some(v.as_str()))
                && (0..k.saturating_sub(1)).all(|i| {
                    let e = &q.edges[i];
                    let (s, d) = if e.outgoing { (assign[i], assign[i + 1]) } else { (assign[i + 1], assign[i]) };
                    EdgeType::ALL
                        .iter()
                        .filter(|t| e.edge_type.is_none_or(|want| want == **t))
                        .any(|t| g.edges.contains(&(s, *t, d)))
                });
            if ok {
                rows.insert(named.iter().map(|&i| assign[i]).collect());
            }
            let mut j = 0;
            loop {
                if j == k {
                    break 'outer;
                }
                assign[j] += 1;
                if assign[j] < n {
                    break;
                }
                assign[j] = 0;
                j += 1;
            }
        }
    }

    let slot = |var: &str| named.iter().position(|&i| q.nodes[i].var.as_deref() == Some(var)).unwrap();
    let ret = slot(&q.ret);
    let keys = |row: &Vec<usize>| row.iter().map(|&i| g.nodes[i].1.clone()).collect::<Vec<_>>();
    let mut rows: Vec<Vec<usize>> = rows.into_iter().collect();
    let mut values: BTreeMap<Vec<usize>, String> = BTreeMap::new();
    if let Some((var, prop, _)) = &q.order {
        let s = slot(var);
        for row in &rows {
            match prop_of(&g.nodes[row[s]], prop) {
                Some(v) => {
                    values.insert(row.clone(), v.to_string());
                }
                None => return Outcome::TypeMismatch,
            }
        }
    }
    rows.sort_by(|a, b| {
        let primary = match &q.order {
            Some((_, _, desc)) => {
                let (va, vb) = (&values[a], &values[b]);
                if *desc {
                    vb.cmp(va)
                } else {
                    va.cmp(vb)
                }
            }
            None => std::cmp::Ordering::Equal,
        };
        primary
            .then_with(|| g.nodes[a[ret]].1.cmp(&g.nodes[b[ret]].1))
            .then_with(|| keys(a).cmp(&keys(b)))
    });
    if let Some(l) = limit {
        rows.truncate(l);
    }
    Outcome::Rows(
        rows.into_iter()
            .map(|row| {
                let mut flat: Flat = named
                    .iter()
                    .zip(&row)
                    .map(|(&i, &id)| (q.nodes[i].var.clone().unwrap(), g.nodes[id].0, g.nodes[id].1.clone()))
                    .collect();
                flat.sort();
                flat
            })
            .collect(),
    )
}

// Scripted conversation used by the golden transcript.

pub const SCRIPT: [&str; 10] = [
    "Hello.",
    "Play the news.",
    "The second article.",
    "Read the whole article.",
    "The first.",
    "Tell me the politics news.",
    "More articles.",
    "What is new about Donald Trump?",
    "Help.",
    "Goodbye.",
];

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/transcript.en.txt")
}

/// Runs `SCRIPT` on a fresh session and formats every turn.
pub fn run_script(agent: &Agent, session_id: &str) -> String {
    use chrono::TimeZone;
    let now = chrono::Utc.with_ymd_and_hms(2023, 3, 10, 12, 0, 0).unwrap();
    let (mut session, greeting) = agent.open_session(session_id, Some("en"), now).unwrap();
    let mut out = format!("< {}\n", greeting.text.replace('\n', "\n< "));
    for text in SCRIPT {
        let r = agent.turn(&mut session, text, now).unwrap();
        let debug = r.debug.expect("debug enabled");
        out.push_str(&format!("\n> {text}\n# intent={} state={:?}\n", debug.intent, debug.session_state));
        out.push_str(&format!("< {}\n", r.response.text.replace('\n', "\n< ")));
        for s in &r.response.suggestions {
            out.push_str(&format!("# {} {}\n", s.number, s.key));
        }
        for d in &r.response.directives {
            out.push_str(&format!("# directive {}\n", d.as_str()));
        }
        out.push_str(&format!("@ {}\n", r.response.ssml));
    }
    out
}

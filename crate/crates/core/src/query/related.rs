use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::exec::newest_first;
use super::QueryError;
use crate::graph::{Direction, EdgeType, GraphStore, NodeId, NodeLabel};

/// Score contribution per shared entity and per shared tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatedWeights {
    pub entity: u32,
    pub tag: u32,
}

impl Default for RelatedWeights {
    fn default() -> Self {
        Self { entity: 2, tag: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelatedArticle {
    pub id: NodeId,
    pub key: String,
    pub score: u32,
}

/// Articles sharing entities or tags with `article_key`, best first.
///
/// Ties go to the newer article, then the smaller key. The seed article and
/// articles with nothing in common are excluded.
pub fn related_articles(
    article_key: &str,
    k: usize,
    store: &GraphStore,
    weights: RelatedWeights,
) -> Result<Vec<RelatedArticle>, QueryError> {
    let seed = store
        .find(NodeLabel::Article, article_key)
        .ok_or_else(|| QueryError::UnknownArticle(article_key.to_string()))?;
    let mut scores: HashMap<NodeId, u32> = HashMap::new();
    for (edge_type, weight) in [(EdgeType::Mentions, weights.entity), (EdgeType::HasTag, weights.tag)] {
        for shared in store.adjacent(seed, edge_type, Direction::Out) {
            for other in store.adjacent(shared, edge_type, Direction::In) {
                if other != seed {
                    *scores.entry(other).or_default() += weight;
                }
            }
        }
    }
    let mut ranked: Vec<(NodeId, u32)> = scores.into_iter().filter(|&(_, s)| s > 0).collect();
    ranked.sort_by(|&(a, sa), &(b, sb)| sb.cmp(&sa).then_with(|| newest_first(store, a, b)));
    ranked.truncate(k);
    Ok(ranked
        .into_iter()
        .map(|(id, score)| RelatedArticle { id, key: store.node(id).map(|n| n.key.clone()).unwrap_or_default(), score })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Properties;

    fn article(g: &mut GraphStore, key: &str, date: &str) -> NodeId {
        let props = Properties::from([("date".into(), date.into()), ("title".into(), key.into())]);
        g.merge_node(NodeLabel::Article, key, props).unwrap()
    }

    fn entity(g: &mut GraphStore, q: &str) -> NodeId {
        let props = Properties::from([("name".into(), q.into()), ("url".into(), "https://x.org".into())]);
        g.merge_node(NodeLabel::Entity, q, props).unwrap()
    }

    #[test]
    fn one_entity_and_one_tag_scores_three() {
        let mut g = GraphStore::new();
        let a = article(&mut g, "a", "2023-01-01T00:00:00Z");
        let b = article(&mut g, "b", "2023-01-02T00:00:00Z");
        let e = entity(&mut g, "Q1");
        let t = g.merge_node(NodeLabel::Tag, "t", Properties::new()).unwrap();
        for x in [a, b] {
            g.merge_edge(x, EdgeType::Mentions, e).unwrap();
            g.merge_edge(x, EdgeType::HasTag, t).unwrap();
        }
        let r = related_articles("a", 5, &g, RelatedWeights::default()).unwrap();
        assert_eq!(r, vec![RelatedArticle { id: b, key: "b".into(), score: 3 }]);
    }

    #[test]
    fn isolated_article_has_no_related() {
        let mut g = GraphStore::new();
        article(&mut g, "a", "2023-01-01T00:00:00Z");
        article(&mut g, "b", "2023-01-01T00:00:00Z");
        assert!(related_articles("a", 5, &g, RelatedWeights::default()).unwrap().is_empty());
        assert!(matches!(
            related_articles("zzz", 5, &g, RelatedWeights::default()),
            Err(QueryError::UnknownArticle(_))
        ));
    }
}

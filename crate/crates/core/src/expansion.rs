//! Seed-app expansion over a similar-app graph.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Store;

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("seed list is empty")]
    EmptySeeds,
    #[error("max_apps {max_apps} is smaller than the {seeds} distinct seeds")]
    BudgetBelowSeeds { max_apps: usize, seeds: usize },
    #[error("invalid graph fixture: {0}")]
    Fixture(#[from] serde_json::Error),
    #[error("duplicate app {0} in graph fixture")]
    DuplicateApp(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppRecord {
    pub app_id: String,
    pub store: Store,
    pub name: String,
    #[serde(default)]
    pub category: String,
}

/// Source of "similar apps" for a given app. The shipped implementation is
/// a fixture graph; a live store client would implement the same trait.
pub trait SimilarAppProvider {
    fn similar(&self, app_id: &str) -> Vec<String>;
}

/// Directed similar-app relation. Endpoints that only appear as targets are
/// added as leaves.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarAppGraph {
    adjacency: BTreeMap<String, Vec<String>>,
}

impl SimilarAppGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut g = Self::new();
        for (from, to) in edges {
            g.add_edge(from, to);
        }
        g
    }

    pub fn add_node(&mut self, app_id: &str) {
        self.adjacency.entry(app_id.to_string()).or_default();
    }

    pub fn add_edge(&mut self, from: &str, to: &str) {
        self.add_node(to);
        let targets = self.adjacency.entry(from.to_string()).or_default();
        if !targets.iter().any(|t| t == to) {
            targets.push(to.to_string());
        }
    }

    pub fn contains(&self, app_id: &str) -> bool {
        self.adjacency.contains_key(app_id)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }
}

impl SimilarAppProvider for SimilarAppGraph {
    fn similar(&self, app_id: &str) -> Vec<String> {
        self.adjacency.get(app_id).cloned().unwrap_or_default()
    }
}

/// `{"apps": [AppRecord...], "similar": {"app_id": ["app_id", ...]}}`
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GraphFixture {
    #[serde(default)]
    pub apps: Vec<AppRecord>,
    #[serde(default)]
    pub similar: BTreeMap<String, Vec<String>>,
}

impl GraphFixture {
    pub fn from_reader(reader: impl Read) -> Result<Self, ExpansionError> {
        let fixture: GraphFixture = serde_json::from_reader(reader)?;
        let mut seen = HashSet::new();
        for app in &fixture.apps {
            if !seen.insert((app.store, app.app_id.as_str())) {
                return Err(ExpansionError::DuplicateApp(app.app_id.clone()));
            }
        }
        Ok(fixture)
    }

    pub fn graph(&self) -> SimilarAppGraph {
        let mut g = SimilarAppGraph::new();
        for app in &self.apps {
            g.add_node(&app.app_id);
        }
        for (from, targets) in &self.similar {
            g.add_node(from);
            for to in targets {
                g.add_edge(from, to);
            }
        }
        g
    }

    pub fn app(&self, app_id: &str) -> Option<&AppRecord> {
        self.apps.iter().find(|a| a.app_id == app_id)
    }
}

/// Breadth-first closure of `seeds`, seeds first in input order, then apps in
/// discovery order. Stops at `max_apps` apps or `max_depth` hops.
pub fn expand_seeds(
    seeds: &[String],
    provider: &dyn SimilarAppProvider,
    max_apps: usize,
    max_depth: usize,
) -> Result<Vec<String>, ExpansionError> {
    if seeds.is_empty() {
        return Err(ExpansionError::EmptySeeds);
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut result: Vec<String> = Vec::new();
    let mut queue = VecDeque::new();
    for seed in seeds {
        if seen.insert(seed.as_str()) {
            result.push(seed.clone());
            queue.push_back((seed.clone(), 0usize));
        }
    }
    if max_apps < result.len() {
        return Err(ExpansionError::BudgetBelowSeeds {
            max_apps,
            seeds: result.len(),
        });
    }
    let mut discovered: HashSet<String> = result.iter().cloned().collect();
    while let Some((app, depth)) = queue.pop_front() {
        if depth >= max_depth {
            continue;
        }
        for next in provider.similar(&app) {
            if result.len() >= max_apps {
                return Ok(result);
            }
            if next == app || !discovered.insert(next.clone()) {
                continue;
            }
            result.push(next.clone());
            queue.push_back((next, depth + 1));
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Level-by-level reference: enumerate nodes reachable at exactly d hops,
    /// visiting adjacency lists in order, then truncate.
    fn bfs_oracle(
        seeds: &[String],
        g: &SimilarAppGraph,
        max_apps: usize,
        max_depth: usize,
    ) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in seeds {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        let mut frontier = out.clone();
        for _ in 0..max_depth {
            let mut next_frontier = Vec::new();
            for node in &frontier {
                for n in g.similar(node) {
                    if !out.contains(&n) {
                        out.push(n.clone());
                        next_frontier.push(n);
                    }
                }
            }
            frontier = next_frontier;
        }
        out.truncate(max_apps);
        out
    }

    #[test]
    fn isolated_seed() {
        let g = SimilarAppGraph::new();
        assert_eq!(expand_seeds(&ids(&["A"]), &g, 10, 5).unwrap(), ids(&["A"]));
    }

    #[test]
    fn depth_bound() {
        let g = SimilarAppGraph::from_edges([("A", "B"), ("B", "C")]);
        assert_eq!(expand_seeds(&ids(&["A"]), &g, 10, 1).unwrap(), ids(&["A", "B"]));
    }

    #[test]
    fn budget_bound_matches_oracle() {
        let g = SimilarAppGraph::from_edges([("A", "C"), ("B", "C"), ("C", "D")]);
        let seeds = ids(&["A", "B"]);
        let got = expand_seeds(&seeds, &g, 3, 10).unwrap();
        assert_eq!(got, bfs_oracle(&seeds, &g, 3, 10));
        assert_eq!(got, ids(&["A", "B", "C"]));
    }

    #[test]
    fn self_loops_ignored() {
        let g = SimilarAppGraph::from_edges([("A", "A"), ("A", "B")]);
        assert_eq!(expand_seeds(&ids(&["A"]), &g, 10, 3).unwrap(), ids(&["A", "B"]));
    }

    #[test]
    fn errors() {
        let g = SimilarAppGraph::new();
        assert!(matches!(expand_seeds(&[], &g, 3, 3), Err(ExpansionError::EmptySeeds)));
        assert!(matches!(
            expand_seeds(&ids(&["A", "B"]), &g, 1, 3),
            Err(ExpansionError::BudgetBelowSeeds { .. })
        ));
    }

    #[test]
    fn fixture_parsing_adds_leaves() {
        let json = r#"{"apps":[{"app_id":"a","store":"apple","name":"A","category":"dating"}],
                       "similar":{"a":["b"],"b":["c"]}}"#;
        let f = GraphFixture::from_reader(json.as_bytes()).unwrap();
        let g = f.graph();
        assert!(g.contains("c"));
        assert_eq!(g.len(), 3);
        assert_eq!(f.app("a").unwrap().category, "dating");
    }

    fn arb_graph() -> impl Strategy<Value = SimilarAppGraph> {
        proptest::collection::vec((0u8..8, 0u8..8), 0..24).prop_map(|edges| {
            let mut g = SimilarAppGraph::new();
            for (a, b) in edges {
                g.add_edge(&format!("n{a}"), &format!("n{b}"));
            }
            g
        })
    }

    proptest! {
        #[test]
        fn matches_oracle_and_bounds(
            g in arb_graph(),
            seeds in proptest::collection::vec(0u8..8, 1..3),
            extra in 0usize..6,
            depth in 0usize..4,
        ) {
            let seeds: Vec<String> = seeds.iter().map(|s| format!("n{s}")).collect();
            let distinct = seeds.iter().collect::<HashSet<_>>().len();
            let max_apps = distinct + extra;
            let got = expand_seeds(&seeds, &g, max_apps, depth).unwrap();
            prop_assert_eq!(&got, &bfs_oracle(&seeds, &g, max_apps, depth));
            prop_assert!(got.len() <= max_apps);
            for s in &seeds {
                prop_assert!(got.contains(s));
            }
            let bigger = expand_seeds(&seeds, &g, max_apps + 3, depth).unwrap();
            prop_assert_eq!(&bigger[..got.len()], &got[..]);
        }
    }
}

//! Concept hierarchy used for sense mapping, visuality and grouping.
//!
//! Concepts form a forest. Distances are hop counts along parent links; a
//! virtual super-root joins the forest's roots so that any two concepts are
//! at a finite distance (root to super-root and back costs two hops).

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance reported between concepts that share no root when the virtual
/// super-root is disabled.
pub const INFINITE_DISTANCE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default)]
    pub map_lex: BTreeSet<String>,
    #[serde(default)]
    pub is_visual: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_kind: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("malformed ontology at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("duplicate concept id `{0}`")]
    DuplicateConcept(String),
    #[error("concept `{concept}` names unknown parent `{parent}`")]
    UnknownParent { concept: String, parent: String },
    #[error("parent links form a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("sense `{sense}` is listed by both `{first}` and `{second}`")]
    DuplicateSense { sense: String, first: String, second: String },
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
}

#[derive(Debug, Clone)]
pub struct Ontology {
    concepts: Vec<Concept>,
    by_id: HashMap<String, usize>,
    by_sense: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    depth: Vec<u32>,
    root_of: Vec<usize>,
    roots: Vec<usize>,
    super_root: bool,
}

impl Ontology {
    pub fn from_concepts(concepts: Vec<Concept>) -> Result<Self, OntologyError> {
        let mut by_id = HashMap::with_capacity(concepts.len());
        for (i, c) in concepts.iter().enumerate() {
            if by_id.insert(c.id.clone(), i).is_some() {
                return Err(OntologyError::DuplicateConcept(c.id.clone()));
            }
        }
        let mut parent = Vec::with_capacity(concepts.len());
        for c in &concepts {
            parent.push(match &c.parent {
                None => None,
                Some(p) => Some(*by_id.get(p).ok_or_else(|| OntologyError::UnknownParent {
                    concept: c.id.clone(),
                    parent: p.clone(),
                })?),
            });
        }

        // Resolve depth and root per concept, detecting cycles on the way up.
        const UNSET: u32 = u32::MAX;
        let n = concepts.len();
        let mut depth = vec![UNSET; n];
        let mut root_of = vec![usize::MAX; n];
        for start in 0..n {
            let mut path = Vec::new();
            let mut at = start;
            loop {
                if depth[at] != UNSET {
                    break;
                }
                if path.contains(&at) {
                    let from = path.iter().position(|&p| p == at).unwrap();
                    let mut cycle: Vec<String> = path[from..].iter().map(|&i| concepts[i].id.clone()).collect();
                    cycle.push(concepts[at].id.clone());
                    return Err(OntologyError::Cycle(cycle));
                }
                path.push(at);
                match parent[at] {
                    Some(p) => at = p,
                    None => {
                        depth[at] = 0;
                        root_of[at] = at;
                        path.pop();
                        break;
                    }
                }
            }
            for &i in path.iter().rev() {
                let p = parent[i].unwrap();
                depth[i] = depth[p] + 1;
                root_of[i] = root_of[p];
            }
        }

        let mut by_sense: HashMap<String, usize> = HashMap::new();
        for (i, c) in concepts.iter().enumerate() {
            for s in &c.map_lex {
                if let Some(&prev) = by_sense.get(s) {
                    return Err(OntologyError::DuplicateSense {
                        sense: s.clone(),
                        first: concepts[prev].id.clone(),
                        second: c.id.clone(),
                    });
                }
                by_sense.insert(s.clone(), i);
            }
        }
        let roots = (0..n).filter(|&i| parent[i].is_none()).collect();
        Ok(Self {
            concepts,
            by_id,
            by_sense,
            parent,
            depth,
            root_of,
            roots,
            super_root: true,
        })
    }

    /// Disable (or re-enable) the virtual super-root. Without it, concepts
    /// under different roots are [`INFINITE_DISTANCE`] apart.
    pub fn with_super_root(mut self, enabled: bool) -> Self {
        self.super_root = enabled;
        self
    }

    pub fn has_super_root(&self) -> bool {
        self.super_root
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn roots(&self) -> impl Iterator<Item = &Concept> {
        self.roots.iter().map(move |&i| &self.concepts[i])
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.by_id.get(id).map(|&i| &self.concepts[i])
    }

    pub fn concept_of_sense(&self, sense: &str) -> Option<&Concept> {
        self.by_sense.get(sense).map(|&i| &self.concepts[i])
    }

    pub fn is_visual(&self, id: &str) -> bool {
        self.concept(id).is_some_and(|c| c.is_visual)
    }

    /// Attribute kind of the concept or, failing that, of its nearest
    /// ancestor that declares one.
    pub fn attribute_kind(&self, id: &str) -> Option<&str> {
        let mut at = self.by_id.get(id).copied();
        while let Some(i) = at {
            if let Some(k) = &self.concepts[i].attribute_kind {
                return Some(k);
            }
            at = self.parent[i];
        }
        None
    }

    pub fn depth(&self, id: &str) -> Result<u32, OntologyError> {
        Ok(self.depth[self.index(id)?])
    }

    /// Root concept of the tree containing `id`.
    pub fn root_of(&self, id: &str) -> Result<&Concept, OntologyError> {
        Ok(&self.concepts[self.root_of[self.index(id)?]])
    }

    /// Ancestors from the concept itself up to its root.
    pub fn path_to_root(&self, id: &str) -> Result<Vec<&Concept>, OntologyError> {
        let mut out = Vec::new();
        let mut at = Some(self.index(id)?);
        while let Some(i) = at {
            out.push(&self.concepts[i]);
            at = self.parent[i];
        }
        Ok(out)
    }

    pub fn is_descendant_of(&self, id: &str, ancestor: &str) -> Result<bool, OntologyError> {
        let anc = self.index(ancestor)?;
        let mut at = Some(self.index(id)?);
        while let Some(i) = at {
            if i == anc {
                return Ok(true);
            }
            at = self.parent[i];
        }
        Ok(false)
    }

    pub fn lowest_common_ancestor(&self, a: &str, b: &str) -> Result<Option<&Concept>, OntologyError> {
        let (a, b) = (self.index(a)?, self.index(b)?);
        Ok(self.lca_index(a, b).map(|i| &self.concepts[i]))
    }

    /// Shortest undirected path length between two concepts.
    pub fn concept_distance(&self, a: &str, b: &str) -> Result<u32, OntologyError> {
        let (a, b) = (self.index(a)?, self.index(b)?);
        Ok(self.distance_index(a, b))
    }

    pub(crate) fn index(&self, id: &str) -> Result<usize, OntologyError> {
        self.by_id.get(id).copied().ok_or_else(|| OntologyError::UnknownConcept(id.to_string()))
    }

    pub(crate) fn lca_index(&self, mut a: usize, mut b: usize) -> Option<usize> {
        if self.root_of[a] != self.root_of[b] {
            return None;
        }
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].unwrap();
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].unwrap();
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        Some(a)
    }

    pub(crate) fn distance_index(&self, a: usize, b: usize) -> u32 {
        match self.lca_index(a, b) {
            Some(l) => self.depth[a] + self.depth[b] - 2 * self.depth[l],
            None if self.super_root => self.depth[a] + self.depth[b] + 2,
            None => INFINITE_DISTANCE,
        }
    }
}

pub fn load_ontology(bytes: &[u8]) -> Result<Ontology, OntologyError> {
    let concepts: Vec<Concept> = serde_json::from_slice(bytes).map_err(|e| OntologyError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ontology::from_concepts(concepts)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::VecDeque;

    pub(crate) fn fixture_ontology() -> Ontology {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ontology.json");
        load_ontology(&std::fs::read(path).unwrap()).unwrap()
    }

    fn concept(id: &str, parent: Option<&str>, senses: &[&str]) -> Concept {
        Concept {
            id: id.into(),
            name: id.into(),
            parent: parent.map(Into::into),
            map_lex: senses.iter().map(|s| s.to_string()).collect(),
            is_visual: false,
            attribute_kind: None,
        }
    }

    /// Random forest: concept i > 0 picks a parent among 0..i, or becomes a
    /// new root with small probability.
    fn random_forest(n: usize, seed: u64) -> Vec<Concept> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let parent = if i == 0 || rng.random_bool(0.06) {
                    None
                } else {
                    Some(format!("c{}", rng.random_range(0..i)))
                };
                concept(&format!("c{i}"), parent.as_deref(), &[])
            })
            .collect()
    }

    /// Breadth-first search over parent links plus a virtual super-root node.
    fn bfs_distance(concepts: &[Concept], a: usize, b: usize, super_root: bool) -> u32 {
        let n = concepts.len();
        let idx: HashMap<_, _> = concepts.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
        let mut adj = vec![Vec::new(); n + 1];
        for (i, c) in concepts.iter().enumerate() {
            match &c.parent {
                Some(p) => {
                    adj[i].push(idx[p]);
                    adj[idx[p]].push(i);
                }
                None if super_root => {
                    adj[i].push(n);
                    adj[n].push(i);
                }
                None => {}
            }
        }
        let mut dist = vec![u32::MAX; n + 1];
        dist[a] = 0;
        let mut q = VecDeque::from([a]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        dist[b]
    }

    /// LCA as the first shared entry of the two root paths.
    fn path_intersection_lca(concepts: &[Concept], a: usize, b: usize) -> Option<String> {
        let idx: HashMap<_, _> = concepts.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
        let up = |mut i: usize| {
            let mut path = vec![concepts[i].id.clone()];
            while let Some(p) = &concepts[i].parent {
                i = idx[p];
                path.push(p.clone());
            }
            path
        };
        let pb = up(b);
        up(a).into_iter().find(|c| pb.contains(c))
    }

    #[test]
    fn fixture_has_three_named_roots() {
        let o = fixture_ontology();
        let names: Vec<_> = o.roots().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["Work", "Personal Life", "Political Life"]);
        assert!((90..=120).contains(&o.len()));
    }

    #[test]
    fn single_concept_ontology() {
        let o = load_ontology(br#"[{"id": "only", "name": "Only", "map_lex": [], "is_visual": false}]"#).unwrap();
        assert_eq!(o.roots().count(), 1);
        assert_eq!(o.concept_distance("only", "only").unwrap(), 0);
    }

    #[test]
    fn duplicate_sense_names_both_concepts() {
        let json = br#"[
            {"id": "a", "name": "A", "map_lex": ["play%1"], "is_visual": false},
            {"id": "b", "name": "B", "parent": "a", "map_lex": ["play%1"], "is_visual": true}]"#;
        assert_eq!(
            load_ontology(json).unwrap_err(),
            OntologyError::DuplicateSense {
                sense: "play%1".into(),
                first: "a".into(),
                second: "b".into()
            }
        );
    }

    #[test]
    fn cycle_is_listed() {
        let cs = vec![concept("a", Some("c"), &[]), concept("b", Some("a"), &[]), concept("c", Some("b"), &[])];
        match Ontology::from_concepts(cs).unwrap_err() {
            OntologyError::Cycle(path) => {
                assert_eq!(path.first(), path.last());
                assert_eq!(path.len(), 4);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn sense_lookup() {
        let o = fixture_ontology();
        let wrote = o.concept_of_sense("write%2:36:00::").unwrap();
        assert!(o.is_descendant_of(&wrote.id, "work").unwrap());
        assert!(o.concept_of_sense("nonexistent%0").is_none());
        let red = o.concept_of_sense("red%3:00:01::").unwrap();
        assert_eq!(red.attribute_kind.as_deref(), Some("color"));
    }

    #[test]
    fn identity_and_parent_distances() {
        let o = fixture_ontology();
        assert_eq!(o.concept_distance("authorship", "authorship").unwrap(), 0);
        assert_eq!(o.concept_distance("authorship", "writing").unwrap(), 1);
        assert_eq!(o.concept_distance("writing", "authorship").unwrap(), 1);
        assert_eq!(o.lowest_common_ancestor("writing", "writing").unwrap().unwrap().id, "writing");
        assert_eq!(o.lowest_common_ancestor("authorship", "writing").unwrap().unwrap().id, "writing");
        assert!(o.concept_distance("nope", "writing").is_err());
        assert!(o.lowest_common_ancestor("nope", "writing").is_err());
    }

    #[test]
    fn cross_root_distance_goes_through_super_root() {
        let o = fixture_ontology();
        // authorship (depth 2) to birth (depth 2): 2 + 2 + 2
        assert_eq!(o.concept_distance("authorship", "birth").unwrap(), 6);
        assert_eq!(o.concept_distance("work", "personal_life").unwrap(), 2);
        assert!(o.lowest_common_ancestor("authorship", "birth").unwrap().is_none());
        let o = o.with_super_root(false);
        assert_eq!(o.concept_distance("authorship", "birth").unwrap(), INFINITE_DISTANCE);
    }

    #[test]
    fn distance_and_lca_match_oracles_on_random_forests() {
        for seed in 0..5 {
            let cs = random_forest(50, seed);
            let o = Ontology::from_concepts(cs.clone()).unwrap();
            let plain = o.clone().with_super_root(false);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            for _ in 0..100 {
                let (a, b) = (rng.random_range(0..50), rng.random_range(0..50));
                let (ia, ib) = (&cs[a].id, &cs[b].id);
                assert_eq!(o.concept_distance(ia, ib).unwrap(), bfs_distance(&cs, a, b, true));
                assert_eq!(plain.concept_distance(ia, ib).unwrap(), bfs_distance(&cs, a, b, false));
                let lca = o.lowest_common_ancestor(ia, ib).unwrap().map(|c| c.id.clone());
                assert_eq!(lca, path_intersection_lca(&cs, a, b));
            }
        }
    }

    proptest! {
        #[test]
        fn tree_metric_triangle_inequality(seed in 0u64..1000, a in 0usize..40, b in 0usize..40, c in 0usize..40) {
            let cs = random_forest(40, seed);
            let o = Ontology::from_concepts(cs.clone()).unwrap();
            let d = |x: usize, y: usize| o.concept_distance(&cs[x].id, &cs[y].id).unwrap();
            prop_assert!(d(a, c) <= d(a, b) + d(b, c));
            prop_assert_eq!(d(a, b), d(b, a));
            prop_assert_eq!(d(a, b) == 0, a == b);
        }
    }

    #[test]
    fn every_sense_maps_to_its_concept() {
        let o = fixture_ontology();
        for c in o.concepts() {
            for s in &c.map_lex {
                assert_eq!(o.concept_of_sense(s).unwrap().id, c.id);
            }
        }
    }
}

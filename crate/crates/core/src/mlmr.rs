//! Multilevel meaning representation: a tree of summaries where every group
//! frame links to a child summary of its region, plus the navigation session
//! that expands the tree on demand.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DmrGraph, FrameId, MeaningGraph};
use crate::mrsa::{structural_signature, summarize, DmrRegion, MrsaError, SummarizeConfig};
use crate::ontology::Ontology;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MlmrError {
    #[error("cannot build a tree from an empty meaning representation")]
    EmptyGraph,
    #[error("`{0}` is not a group frame of the current map")]
    NotAGroup(FrameId),
    #[error("already at root")]
    AtRoot,
    #[error(transparent)]
    Summarize(#[from] MrsaError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlmrConfig {
    pub summarize: SummarizeConfig,
    pub max_depth: usize,
    /// Regions with at most this many frames are shown as they are.
    pub min_region: usize,
}

impl Default for MlmrConfig {
    fn default() -> Self {
        Self {
            summarize: SummarizeConfig::default(),
            max_depth: 10,
            min_region: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum GroupLink {
    Expanded { node: Box<MlmrNode> },
    Region { region: DmrRegion },
}

impl GroupLink {
    pub fn region(&self) -> Option<&DmrRegion> {
        match self {
            GroupLink::Region { region } => Some(region),
            GroupLink::Expanded { .. } => None,
        }
    }

    pub fn node(&self) -> Option<&MlmrNode> {
        match self {
            GroupLink::Expanded { node } => Some(node),
            GroupLink::Region { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmrNode {
    pub depth: usize,
    pub mr: MeaningGraph,
    #[serde(default)]
    pub main_frames: Vec<FrameId>,
    #[serde(default)]
    pub group_links: BTreeMap<FrameId, GroupLink>,
    /// Source frames detailed by each group frame, kept after expansion.
    #[serde(default)]
    pub regions: BTreeMap<FrameId, DmrRegion>,
}

impl MlmrNode {
    fn leaf(mr: MeaningGraph, depth: usize) -> Self {
        Self {
            depth,
            mr,
            main_frames: vec![],
            group_links: BTreeMap::new(),
            regions: BTreeMap::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.group_links.is_empty()
    }

    pub fn is_group(&self, id: &FrameId) -> bool {
        self.group_links.contains_key(id)
    }

    pub fn child(&self, id: &FrameId) -> Option<&MlmrNode> {
        self.group_links.get(id).and_then(GroupLink::node)
    }

    /// Number of levels below and including this node, counting only
    /// expanded links.
    pub fn height(&self) -> usize {
        1 + self
            .group_links
            .values()
            .filter_map(GroupLink::node)
            .map(MlmrNode::height)
            .max()
            .unwrap_or(0)
    }

    /// Nodes in pre-order with the group-frame path leading to each.
    pub fn preorder(&self) -> Vec<(Vec<FrameId>, &MlmrNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), self)];
        while let Some((path, node)) = stack.pop() {
            for (g, link) in node.group_links.iter().rev() {
                if let Some(child) = link.node() {
                    let mut p = path.clone();
                    p.push(g.clone());
                    stack.push((p, child));
                }
            }
            out.push((path, node));
        }
        out
    }

    pub fn at_path(&self, path: &[FrameId]) -> Option<&MlmrNode> {
        let mut node = self;
        for g in path {
            node = node.child(g)?;
        }
        Some(node)
    }

    fn at_path_mut(&mut self, path: &[FrameId]) -> Option<&mut MlmrNode> {
        let mut node = self;
        for g in path {
            node = match node.group_links.get_mut(g)? {
                GroupLink::Expanded { node } => node,
                GroupLink::Region { .. } => return None,
            };
        }
        Some(node)
    }

    /// Indented text dump: each node's frames and relations, then its
    /// children under their group frame.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        self.export_into(&mut out, "", None);
        out
    }

    fn export_into(&self, out: &mut String, indent: &str, via: Option<&FrameId>) {
        match via {
            Some(g) => out.push_str(&format!("{indent}node depth={} via={g}\n", self.depth)),
            None => out.push_str(&format!("{indent}node depth={}\n", self.depth)),
        }
        for f in self.mr.frames.values() {
            let mark = if self.is_group(&f.id) { "group" } else { "frame" };
            out.push_str(&format!("{indent}  {mark} {} {}\n", f.id, f.label()));
        }
        for r in &self.mr.relations {
            out.push_str(&format!("{indent}  {} {} -> {}\n", r.kind, r.from, r.to));
        }
        let deeper = format!("{indent}    ");
        for (g, link) in &self.group_links {
            match link {
                GroupLink::Expanded { node } => node.export_into(out, &deeper, Some(g)),
                GroupLink::Region { region } => {
                    out.push_str(&format!("{deeper}region via={g} frames={}\n", region.frames.len()));
                }
            }
        }
    }
}

/// Summarizes `mr` once. Returns a leaf when summarizing changes nothing.
fn make_node(mr: MeaningGraph, depth: usize, o: &Ontology, cfg: &MlmrConfig) -> Result<MlmrNode, MlmrError> {
    let s = summarize(&mr, o, &cfg.summarize)?;
    if structural_signature(&s.parent, s.group_frames.len()) == structural_signature(&mr, 0) {
        return Ok(MlmrNode::leaf(mr, depth));
    }
    Ok(MlmrNode {
        depth,
        mr: s.parent,
        main_frames: s.main_frames.into_iter().collect(),
        group_links: s
            .regions
            .iter()
            .map(|(g, r)| (g.clone(), GroupLink::Region { region: r.clone() }))
            .collect(),
        regions: s.regions,
    })
}

/// The child node for one region, one level deep.
fn child_node(dmr: &DmrGraph, region: &DmrRegion, depth: usize, o: &Ontology, cfg: &MlmrConfig) -> Result<MlmrNode, MlmrError> {
    let mr = region.graph(dmr);
    if depth >= cfg.max_depth || mr.frames.len() <= cfg.min_region {
        return Ok(MlmrNode::leaf(mr, depth));
    }
    make_node(mr, depth, o, cfg)
}

fn expand_all(node: &mut MlmrNode, dmr: &DmrGraph, o: &Ontology, cfg: &MlmrConfig) -> Result<(), MlmrError> {
    let groups: Vec<FrameId> = node.group_links.keys().cloned().collect();
    for g in groups {
        let region = node.regions[&g].clone();
        let mut child = child_node(dmr, &region, node.depth + 1, o, cfg)?;
        expand_all(&mut child, dmr, o, cfg)?;
        node.group_links.insert(g, GroupLink::Expanded { node: Box::new(child) });
    }
    Ok(())
}

/// Root summary of the whole text with every region expanded recursively.
pub fn build_mlmr(dmr: &DmrGraph, o: &Ontology, cfg: &MlmrConfig) -> Result<MlmrNode, MlmrError> {
    if dmr.is_empty() {
        return Err(MlmrError::EmptyGraph);
    }
    let mut root = make_node(dmr.clone(), 0, o, cfg)?;
    expand_all(&mut root, dmr, o, cfg)?;
    Ok(root)
}

/// One user's walk through the tree. Only the root is summarized up front;
/// each expansion computes one more level and keeps it for later visits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    dmr: DmrGraph,
    config: MlmrConfig,
    root: MlmrNode,
    /// Group-frame paths from the root; the last entry is on screen.
    stack: Vec<Vec<FrameId>>,
}

impl Session {
    pub fn open(dmr: DmrGraph, o: &Ontology, config: MlmrConfig) -> Result<Self, MlmrError> {
        if dmr.is_empty() {
            return Err(MlmrError::EmptyGraph);
        }
        let root = make_node(dmr.clone(), 0, o, &config)?;
        Ok(Self {
            dmr,
            config,
            root,
            stack: vec![vec![]],
        })
    }

    pub fn config(&self) -> &MlmrConfig {
        &self.config
    }

    pub fn dmr(&self) -> &DmrGraph {
        &self.dmr
    }

    pub fn root(&self) -> &MlmrNode {
        &self.root
    }

    pub fn path(&self) -> &[FrameId] {
        self.stack.last().expect("stack is never empty")
    }

    pub fn stack_depth(&self) -> usize {
        self.stack.len()
    }

    pub fn current(&self) -> &MlmrNode {
        self.root.at_path(self.path()).expect("stack paths stay valid")
    }

    pub fn expand(&mut self, o: &Ontology, group: &FrameId) -> Result<&MlmrNode, MlmrError> {
        let path = self.path().to_vec();
        let node = self.root.at_path_mut(&path).expect("stack paths stay valid");
        let link = node.group_links.get(group).ok_or_else(|| MlmrError::NotAGroup(group.clone()))?;
        if let GroupLink::Region { region } = link {
            let child = child_node(&self.dmr, region, node.depth + 1, o, &self.config)?;
            node.group_links.insert(group.clone(), GroupLink::Expanded { node: Box::new(child) });
        }
        let mut next = path;
        next.push(group.clone());
        self.stack.push(next);
        Ok(self.current())
    }

    pub fn go_back(&mut self) -> Result<&MlmrNode, MlmrError> {
        if self.stack.len() < 2 {
            return Err(MlmrError::AtRoot);
        }
        self.stack.pop();
        Ok(self.current())
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::dmr::tests::random_doc;
    use crate::dmr::{builtin_handlers, generate_dmr};
    use crate::sept::parse_sept_document;
    use crate::testutil::{doc_from_trees, fixture_doc, ontology};

    fn shakespeare() -> DmrGraph {
        generate_dmr(&fixture_doc("shakespeare.sept.json"), &ontology(), &builtin_handlers())
    }

    fn cfg(g_th: usize) -> MlmrConfig {
        let mut c = MlmrConfig::default();
        c.summarize.g_th = g_th;
        c
    }

    fn leaf_frames(node: &MlmrNode, out: &mut Vec<FrameId>) {
        for id in node.mr.frames.keys() {
            if !node.is_group(id) {
                out.push(id.clone());
            }
        }
        for link in node.group_links.values() {
            leaf_frames(link.node().expect("eager build expands everything"), out);
        }
    }

    fn pinned() -> MlmrConfig {
        MlmrConfig { min_region: 12, ..cfg(2) }
    }

    #[test]
    fn shakespeare_tree() {
        let o = ontology();
        let dmr = shakespeare();
        let root = build_mlmr(&dmr, &o, &pinned()).unwrap();
        assert_eq!(root.height(), 2);
        let labels: BTreeSet<String> = root.mr.frames.values().map(|f| f.surface.clone()).collect();
        assert_eq!(labels, ["Personal Life", "Shakespeare", "Work"].map(String::from).into());
        let work = root.mr.frames.values().find(|f| f.surface == "Work").unwrap();
        let child = root.child(&work.id).unwrap();
        let actions: BTreeSet<&str> = child.mr.actions().map(|f| f.surface.as_str()).collect();
        assert!(actions.is_superset(&BTreeSet::from(["earn", "write", "be"])));

        let mut seen = Vec::new();
        for link in root.group_links.values() {
            seen.extend(link.node().unwrap().mr.frames.keys().cloned());
        }
        seen.sort();
        let non_main: Vec<FrameId> = dmr.frames.keys().filter(|id| !root.main_frames.contains(id)).cloned().collect();
        assert_eq!(seen, non_main);
    }

    #[test]
    fn default_config_keeps_more_at_the_root() {
        let o = ontology();
        let root = build_mlmr(&shakespeare(), &o, &MlmrConfig::default()).unwrap();
        assert_eq!(root.height(), 2);
        assert!(root.group_links.len() >= 2);
        assert!(root.mr.frames.values().any(|f| f.surface == "Shakespeare"));
    }

    #[test]
    fn tiny_graph_is_single_level() {
        let o = ontology();
        let doc = doc_from_trees(&["(S (NP (NNP Ali|ali%1:18:00::)) (VP (VBD ate~eat|eat%2:34:00::) (NP (NN sandwich|sandwich%1:13:00::))))"]);
        let dmr = generate_dmr(&doc, &o, &builtin_handlers());
        assert_eq!(dmr.frames.len(), 3);
        let root = build_mlmr(&dmr, &o, &MlmrConfig::default()).unwrap();
        assert_eq!(root.height(), 1);
        assert_eq!(root.mr, dmr);
    }

    #[test]
    fn empty_dmr_is_an_error() {
        assert_eq!(
            build_mlmr(&DmrGraph::default(), &ontology(), &MlmrConfig::default()).unwrap_err(),
            MlmrError::EmptyGraph
        );
    }

    #[test]
    fn session_navigation() {
        let o = ontology();
        let mut s = Session::open(shakespeare(), &o, cfg(2)).unwrap();
        assert_eq!(s.go_back().unwrap_err().to_string(), "already at root");
        let root = s.current().clone();
        let work = root.mr.frames.values().find(|f| f.surface == "Work").unwrap().id.clone();
        let first = serde_json::to_string(&s.expand(&o, &work).unwrap().mr).unwrap();
        let actions: BTreeSet<String> = s.current().mr.actions().map(|f| f.surface.clone()).collect();
        assert!(actions.contains("write") && actions.contains("earn") && actions.contains("be"));
        let leaf_frame = s.current().mr.frames.keys().next().unwrap().clone();
        if !s.current().is_group(&leaf_frame) {
            assert!(matches!(s.expand(&o, &leaf_frame), Err(MlmrError::NotAGroup(_))));
        }
        assert_eq!(s.go_back().unwrap().mr, root.mr);
        let again = serde_json::to_string(&s.expand(&o, &work).unwrap().mr).unwrap();
        assert_eq!(first, again);
        let shakespeare_id = root.main_frames[0].clone();
        s.go_back().unwrap();
        assert!(matches!(s.expand(&o, &shakespeare_id), Err(MlmrError::NotAGroup(_))));
        assert_eq!(s.stack_depth(), 1);
    }

    #[test]
    fn random_walks_keep_the_stack_bounded() {
        let o = ontology();
        let dmr = generate_dmr(&fixture_doc("einstein.sept.json"), &o, &builtin_handlers());
        let height = build_mlmr(&dmr, &o, &MlmrConfig::default()).unwrap().height();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = Session::open(dmr, &o, MlmrConfig::default()).unwrap();
        for _ in 0..50 {
            let groups: Vec<FrameId> = s.current().group_links.keys().cloned().collect();
            if !groups.is_empty() && rng.random_bool(0.6) {
                let g = &groups[rng.random_range(0..groups.len())];
                s.expand(&o, g).unwrap();
            } else {
                let _ = s.go_back();
            }
            assert!(s.stack_depth() >= 1 && s.stack_depth() <= height + 1);
        }
    }

    fn expand_everything(s: &mut Session, o: &Ontology) {
        let groups: Vec<FrameId> = s.current().group_links.keys().cloned().collect();
        for g in groups {
            s.expand(o, &g).unwrap();
            expand_everything(s, o);
            s.go_back().unwrap();
        }
    }

    #[test]
    fn lazy_and_eager_trees_agree() {
        let o = ontology();
        for dmr in [shakespeare(), generate_dmr(&fixture_doc("einstein.sept.json"), &o, &builtin_handlers())] {
            let eager = build_mlmr(&dmr, &o, &MlmrConfig::default()).unwrap();
            let mut s = Session::open(dmr, &o, MlmrConfig::default()).unwrap();
            expand_everything(&mut s, &o);
            assert_eq!(s.root(), &eager);
        }
    }

    #[test]
    fn session_round_trips_through_json() {
        let o = ontology();
        let mut s = Session::open(shakespeare(), &o, cfg(2)).unwrap();
        let g = s.current().group_links.keys().next().unwrap().clone();
        s.expand(&o, &g).unwrap();
        let back: Session = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn export_lists_nodes() {
        let o = ontology();
        let root = build_mlmr(&shakespeare(), &o, &cfg(2)).unwrap();
        let text = root.export_text();
        assert!(text.starts_with("node depth=0\n"));
        assert_eq!(text.matches("node depth=1").count(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn leaves_conserve_frames(seed in any::<u64>(), n in 1usize..12) {
            let o = ontology();
            let doc = parse_sept_document(random_doc(seed, n).to_string().as_bytes()).unwrap();
            let dmr = generate_dmr(&doc, &o, &builtin_handlers());
            prop_assume!(!dmr.is_empty());
            let root = build_mlmr(&dmr, &o, &MlmrConfig { min_region: 2, ..MlmrConfig::default() }).unwrap();
            let mut leaves = Vec::new();
            leaf_frames(&root, &mut leaves);
            leaves.sort();
            let all: Vec<FrameId> = dmr.frames.keys().cloned().collect();
            prop_assert_eq!(leaves, all);
        }
    }
}

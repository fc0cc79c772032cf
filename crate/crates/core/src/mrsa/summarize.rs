use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::cluster::select_main_frames;
use super::partition::concept_partition;
use super::weights::{assign_action_weights, assign_entity_weights};
use super::{MrsaError, SummarizeConfig};
use crate::graph::{Frame, FrameId, FrameKind, MeaningGraph, Relation, RelationId, RelationKind};
use crate::ontology::Ontology;

/// Source frames and relations detailed by one group frame.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmrRegion {
    pub frames: BTreeSet<FrameId>,
    pub relations: BTreeSet<RelationId>,
}

impl DmrRegion {
    /// The region as a meaning graph cut out of `source`.
    pub fn graph(&self, source: &MeaningGraph) -> MeaningGraph {
        MeaningGraph {
            frames: self
                .frames
                .iter()
                .filter_map(|id| source.frames.get(id).map(|f| (id.clone(), f.clone())))
                .collect(),
            relations: source.relations.iter().filter(|r| self.relations.contains(&r.id)).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizedMr {
    pub parent: MeaningGraph,
    pub main_frames: BTreeSet<FrameId>,
    pub group_frames: BTreeSet<FrameId>,
    pub regions: BTreeMap<FrameId, DmrRegion>,
    pub weights: BTreeMap<FrameId, f64>,
    pub weights_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Parent,
    Group(usize),
}

struct Group {
    id: FrameId,
    kind: FrameKind,
    label: String,
    concept: Option<String>,
    members: Vec<FrameId>,
}

struct Partitioner<'a> {
    mr: &'a MeaningGraph,
    o: &'a Ontology,
    g_th: usize,
    slots: BTreeMap<FrameId, Slot>,
    groups: Vec<Group>,
}

impl Partitioner<'_> {
    /// Concept-partitions `frames`; multi-member groups become group frames,
    /// singletons stay at the parent level. Returns the singletons.
    fn partition(&mut self, frames: Vec<FrameId>) -> Vec<FrameId> {
        let input: Vec<(FrameId, Option<String>)> = frames.iter().map(|id| (id.clone(), self.mr.frames[id].concept.clone())).collect();
        let mut singles = Vec::new();
        for g in concept_partition(&input, self.o, self.g_th) {
            if g.members.len() == 1 {
                self.slots.insert(g.members[0].clone(), Slot::Parent);
                singles.push(g.members[0].clone());
                continue;
            }
            let label = g.label(self.o).unwrap_or_else(|| self.mr.frames[&g.members[0]].surface.clone());
            let ix = self.groups.len();
            for m in &g.members {
                self.slots.insert(m.clone(), Slot::Group(ix));
            }
            self.groups.push(Group {
                id: FrameId(format!("g:{}", g.members[0])),
                kind: self.mr.frames[&g.members[0]].kind,
                label,
                concept: g.representative.concept().map(String::from),
                members: g.members,
            });
        }
        singles
    }

    fn unassigned_neighbors(&self, f: &FrameId, kind: FrameKind) -> Vec<FrameId> {
        self.mr
            .neighbors(f)
            .into_iter()
            .filter(|n| !self.slots.contains_key(n) && self.mr.frames[n].kind == kind)
            .collect()
    }
}

/// One summarization step over `mr`.
///
/// Main frames come from weight clustering. Around each main frame, the
/// unclaimed actions are concept-partitioned into group frames; around each
/// action left ungrouped, the unclaimed entities are partitioned the same
/// way. Every other frame is claimed by the nearest group or parent-level
/// frame (breadth first, groups winning ties), and relations crossing a
/// group boundary are lifted onto the group frame.
pub fn summarize(mr: &MeaningGraph, o: &Ontology, cfg: &SummarizeConfig) -> Result<SummarizedMr, MrsaError> {
    if mr.is_empty() {
        return Err(MrsaError::EmptyGraph);
    }
    let entity_w = assign_entity_weights(mr, &cfg.weights);
    let action_w = assign_action_weights(mr, &entity_w, &cfg.weights);
    let mut weights = entity_w.clone();
    weights.extend(action_w.weights.clone());

    let candidates = if entity_w.is_empty() { &action_w.weights } else { &entity_w };
    let mains = select_main_frames(candidates, &cfg.selection()).main;

    let mut p = Partitioner {
        mr,
        o,
        g_th: cfg.g_th,
        slots: mains.iter().map(|m| (m.clone(), Slot::Parent)).collect(),
        groups: Vec::new(),
    };

    let mut pass_through = Vec::new();
    for m in &mains {
        for kind in [FrameKind::Action, FrameKind::Entity] {
            let around = p.unassigned_neighbors(m, kind);
            if around.is_empty() {
                continue;
            }
            let singles = p.partition(around);
            pass_through.extend(singles.into_iter().filter(|s| mr.frames[s].is_action()));
        }
    }
    for a in &pass_through {
        let around = p.unassigned_neighbors(a, FrameKind::Entity);
        if !around.is_empty() {
            p.partition(around);
        }
    }

    // Remaining frames go to whichever claimed frame reaches them first.
    let adj = mr.adjacency();
    let mut queue: VecDeque<FrameId> = VecDeque::new();
    for g in &p.groups {
        queue.extend(g.members.iter().cloned());
    }
    queue.extend(p.slots.iter().filter(|(_, s)| **s == Slot::Parent).map(|(id, _)| id.clone()));
    while let Some(u) = queue.pop_front() {
        let slot = p.slots[&u];
        for v in &adj[&u] {
            if !p.slots.contains_key(v) {
                p.slots.insert(v.clone(), slot);
                queue.push_back(v.clone());
            }
        }
    }
    for id in mr.frames.keys() {
        p.slots.entry(id.clone()).or_insert(Slot::Parent);
    }

    let group_of = |id: &FrameId| -> FrameId {
        match p.slots[id] {
            Slot::Parent => id.clone(),
            Slot::Group(ix) => p.groups[ix].id.clone(),
        }
    };

    let mut parent = MeaningGraph::default();
    for (id, f) in &mr.frames {
        if p.slots[id] == Slot::Parent {
            parent.frames.insert(id.clone(), f.clone());
        }
    }
    for g in &p.groups {
        parent.frames.insert(
            g.id.clone(),
            Frame {
                id: g.id.clone(),
                kind: g.kind,
                surface: g.label.clone(),
                sense: None,
                concept: g.concept.clone(),
                attributes: vec![],
                qualifier: None,
            },
        );
    }

    let mut regions: BTreeMap<FrameId, DmrRegion> = p.groups.iter().map(|g| (g.id.clone(), DmrRegion::default())).collect();
    for (id, slot) in &p.slots {
        if let Slot::Group(ix) = slot {
            regions.get_mut(&p.groups[*ix].id).unwrap().frames.insert(id.clone());
        }
    }

    let mut lifted: BTreeSet<(RelationKind, FrameId, FrameId)> = BTreeSet::new();
    for r in &mr.relations {
        let (a, b) = (group_of(&r.from), group_of(&r.to));
        if a == b {
            if let Some(region) = regions.get_mut(&a) {
                region.relations.insert(r.id.clone());
            }
            continue;
        }
        if a == r.from && b == r.to {
            lifted.insert((r.kind, a, b));
            parent.relations.push(r.clone());
            continue;
        }
        let (fa, fb) = (parent.frames[&a].kind, parent.frames[&b].kind);
        if r.kind.admits(fa, fb) && lifted.insert((r.kind, a.clone(), b.clone())) {
            parent.relations.push(Relation {
                id: r.id.clone(),
                kind: r.kind,
                from: a,
                to: b,
            });
        }
    }

    Ok(SummarizedMr {
        group_frames: p.groups.iter().map(|g| g.id.clone()).collect(),
        parent,
        main_frames: mains,
        regions,
        weights,
        weights_converged: action_w.converged,
    })
}

/// (frame count, group-frame count, relation count per kind): two MRs with
/// the same signature are treated as unchanged.
pub fn structural_signature(mr: &MeaningGraph, group_frames: usize) -> (usize, usize, BTreeMap<RelationKind, usize>) {
    let mut by_kind = BTreeMap::new();
    for r in &mr.relations {
        *by_kind.entry(r.kind).or_insert(0) += 1;
    }
    (mr.frames.len(), group_frames, by_kind)
}

//! Meaning-representation graphs: entity and action frames joined by typed
//! relations. The DMR and every summarized level share this shape.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameId(pub String);

impl FrameId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FrameId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub String);

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    Entity,
    Action,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub kind: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub id: FrameId,
    pub kind: FrameKind,
    /// Head noun for entities, verb base form for actions, concept name for
    /// group frames.
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<Attribute>,
    /// Predicate adjective of a copular action ("be" + "hungry").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
}

impl Frame {
    pub fn is_entity(&self) -> bool {
        self.kind == FrameKind::Entity
    }

    pub fn is_action(&self) -> bool {
        self.kind == FrameKind::Action
    }

    /// Display label: surface plus copular qualifier.
    pub fn label(&self) -> String {
        match &self.qualifier {
            Some(q) => format!("{} ({q})", self.surface),
            None => self.surface.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationFamily {
    CaseRole,
    Domain,
    Temporal,
}

/// Relation subtype. Each subtype belongs to exactly one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Agent,
    Theme,
    Location,
    Time,
    Instrument,
    Possession,
    Reason,
    Result,
    Condition,
    Conjunction,
    Before,
    After,
    Simultaneous,
}

impl RelationKind {
    pub const ALL: [RelationKind; 13] = [
        Self::Agent,
        Self::Theme,
        Self::Location,
        Self::Time,
        Self::Instrument,
        Self::Possession,
        Self::Reason,
        Self::Result,
        Self::Condition,
        Self::Conjunction,
        Self::Before,
        Self::After,
        Self::Simultaneous,
    ];

    pub fn family(self) -> RelationFamily {
        use RelationKind::*;
        match self {
            Agent | Theme | Location | Time | Instrument | Possession => RelationFamily::CaseRole,
            Reason | Result | Condition | Conjunction => RelationFamily::Domain,
            Before | After | Simultaneous => RelationFamily::Temporal,
        }
    }

    pub fn name(self) -> &'static str {
        use RelationKind::*;
        match self {
            Agent => "Agent",
            Theme => "Theme",
            Location => "Location",
            Time => "Time",
            Instrument => "Instrument",
            Possession => "Possession",
            Reason => "Reason",
            Result => "Result",
            Condition => "Condition",
            Conjunction => "Conjunction",
            Before => "Before",
            After => "After",
            Simultaneous => "Simultaneous",
        }
    }

    /// Whether a relation of this kind may join frames of these kinds.
    pub fn admits(self, from: FrameKind, to: FrameKind) -> bool {
        match self.family() {
            RelationFamily::CaseRole => from == FrameKind::Entity && to == FrameKind::Action,
            _ => from == FrameKind::Action && to == FrameKind::Action,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown relation kind `{s}`"))
    }
}

impl Serialize for RelationKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for RelationKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub id: RelationId,
    pub kind: RelationKind,
    pub from: FrameId,
    pub to: FrameId,
}

impl Relation {
    pub fn touches(&self, f: &FrameId) -> bool {
        &self.from == f || &self.to == f
    }

    pub fn other(&self, f: &FrameId) -> Option<&FrameId> {
        if &self.from == f {
            Some(&self.to)
        } else if &self.to == f {
            Some(&self.from)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphViolation {
    MissingEndpoint { relation: RelationId, frame: FrameId },
    KindMismatch { relation: RelationId, kind: RelationKind },
    DuplicateRelationId(RelationId),
}

/// Frames keyed by id plus relations sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeaningGraph {
    pub frames: BTreeMap<FrameId, Frame>,
    pub relations: Vec<Relation>,
}

/// The detailed meaning representation is a meaning graph over the whole text.
pub type DmrGraph = MeaningGraph;

impl MeaningGraph {
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, id: &FrameId) -> Option<&Frame> {
        self.frames.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Frame> {
        self.frames.values().filter(|f| f.is_entity())
    }

    pub fn actions(&self) -> impl Iterator<Item = &Frame> {
        self.frames.values().filter(|f| f.is_action())
    }

    pub fn incident<'a>(&'a self, f: &'a FrameId) -> impl Iterator<Item = &'a Relation> + 'a {
        self.relations.iter().filter(move |r| r.touches(f))
    }

    pub fn degree(&self, f: &FrameId) -> usize {
        self.incident(f).count()
    }

    /// Distinct neighbors of `f`, in id order.
    pub fn neighbors(&self, f: &FrameId) -> BTreeSet<FrameId> {
        self.incident(f).filter_map(|r| r.other(f)).filter(|o| *o != f).cloned().collect()
    }

    pub fn adjacency(&self) -> BTreeMap<FrameId, BTreeSet<FrameId>> {
        let mut adj: BTreeMap<FrameId, BTreeSet<FrameId>> = self.frames.keys().map(|k| (k.clone(), BTreeSet::new())).collect();
        for r in &self.relations {
            if r.from != r.to {
                adj.entry(r.from.clone()).or_default().insert(r.to.clone());
                adj.entry(r.to.clone()).or_default().insert(r.from.clone());
            }
        }
        adj
    }

    /// Hop distances from `start`, undirected, up to `limit` hops.
    pub fn hops_from(&self, start: &FrameId, limit: usize) -> BTreeMap<FrameId, usize> {
        let adj = self.adjacency();
        let mut dist = BTreeMap::from([(start.clone(), 0)]);
        let mut q = VecDeque::from([start.clone()]);
        while let Some(u) = q.pop_front() {
            let d = dist[&u];
            if d == limit {
                continue;
            }
            for v in adj.get(&u).into_iter().flatten() {
                if !dist.contains_key(v) {
                    dist.insert(v.clone(), d + 1);
                    q.push_back(v.clone());
                }
            }
        }
        dist
    }

    pub fn connected_components(&self) -> Vec<BTreeSet<FrameId>> {
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.frames.keys() {
            if seen.contains(start) {
                continue;
            }
            let comp: BTreeSet<FrameId> = self.hops_from(start, usize::MAX).into_keys().collect();
            debug_assert!(comp.iter().all(|c| adj.contains_key(c)));
            seen.extend(comp.iter().cloned());
            out.push(comp);
        }
        out
    }

    /// The sub-graph induced by `frames`.
    pub fn induced(&self, frames: &BTreeSet<FrameId>) -> MeaningGraph {
        MeaningGraph {
            frames: self
                .frames
                .iter()
                .filter(|(k, _)| frames.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            relations: self
                .relations
                .iter()
                .filter(|r| frames.contains(&r.from) && frames.contains(&r.to))
                .cloned()
                .collect(),
        }
    }

    /// Every relation's endpoints exist and respect the kind constraints.
    pub fn violations(&self) -> Vec<GraphViolation> {
        let mut out = Vec::new();
        let mut ids = BTreeSet::new();
        for r in &self.relations {
            if !ids.insert(&r.id) {
                out.push(GraphViolation::DuplicateRelationId(r.id.clone()));
            }
            let (Some(a), Some(b)) = (self.frames.get(&r.from), self.frames.get(&r.to)) else {
                let missing = if self.frames.contains_key(&r.from) { &r.to } else { &r.from };
                out.push(GraphViolation::MissingEndpoint {
                    relation: r.id.clone(),
                    frame: missing.clone(),
                });
                continue;
            };
            if !r.kind.admits(a.kind, b.kind) {
                out.push(GraphViolation::KindMismatch {
                    relation: r.id.clone(),
                    kind: r.kind,
                });
            }
        }
        out
    }

    /// (kind, from surface, to surface) triples, used to compare graphs
    /// independently of ids.
    pub fn surface_triples(&self) -> BTreeSet<(RelationKind, String, String)> {
        self.relations
            .iter()
            .map(|r| (r.kind, self.frames[&r.from].surface.clone(), self.frames[&r.to].surface.clone()))
            .collect()
    }

    /// Stable dump: frames by id, relations by id.
    pub fn to_json(&self) -> String {
        let mut g = self.clone();
        g.relations.sort_by(|a, b| a.id.cmp(&b.id));
        serde_json::to_string_pretty(&g).expect("meaning graph serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(id: &str, kind: FrameKind) -> Frame {
        Frame {
            id: id.into(),
            kind,
            surface: id.to_string(),
            sense: None,
            concept: None,
            attributes: vec![],
            qualifier: None,
        }
    }

    #[test]
    fn kind_constraints() {
        use FrameKind::*;
        assert!(RelationKind::Agent.admits(Entity, Action));
        assert!(!RelationKind::Agent.admits(Action, Action));
        assert!(RelationKind::Reason.admits(Action, Action));
        assert!(!RelationKind::Before.admits(Entity, Action));
    }

    #[test]
    fn relation_kind_names_round_trip() {
        for k in RelationKind::ALL {
            assert_eq!(k.name().parse::<RelationKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(serde_json::from_str::<RelationKind>(&json).unwrap(), k);
        }
    }

    #[test]
    fn violations_are_detected() {
        let mut g = MeaningGraph::default();
        for f in [frame("e", FrameKind::Entity), frame("a", FrameKind::Action)] {
            g.frames.insert(f.id.clone(), f);
        }
        g.relations.push(Relation {
            id: RelationId("r1".into()),
            kind: RelationKind::Reason,
            from: "e".into(),
            to: "a".into(),
        });
        g.relations.push(Relation {
            id: RelationId("r2".into()),
            kind: RelationKind::Agent,
            from: "e".into(),
            to: "zz".into(),
        });
        let v = g.violations();
        assert_eq!(v.len(), 2);
        assert!(matches!(v[0], GraphViolation::KindMismatch { .. }));
        assert!(matches!(v[1], GraphViolation::MissingEndpoint { .. }));
    }

    #[test]
    fn hops_and_components() {
        let mut g = MeaningGraph::default();
        for id in ["a", "b", "c", "d"] {
            g.frames.insert(id.into(), frame(id, FrameKind::Action));
        }
        for (i, (f, t)) in [("a", "b"), ("b", "c")].iter().enumerate() {
            g.relations.push(Relation {
                id: RelationId(format!("r{i}")),
                kind: RelationKind::Before,
                from: (*f).into(),
                to: (*t).into(),
            });
        }
        let h = g.hops_from(&"a".into(), 1);
        assert_eq!(h.len(), 2);
        assert_eq!(g.hops_from(&"a".into(), 5)[&FrameId::from("c")], 2);
        assert_eq!(g.connected_components().len(), 2);
    }
}

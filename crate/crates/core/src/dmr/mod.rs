//! Detailed meaning representation: a rule-dispatched walk over each
//! sentence tree that fills entity frames, action frames and relations.

mod handlers;
mod rules;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::graph::{Attribute, DmrGraph, Frame, FrameId, FrameKind, Relation, RelationId, RelationKind};
use crate::ontology::Ontology;
use crate::sept::{Sept, SeptDocument, SeptNode, WordRef};

pub use rules::{builtin_handlers, rule_keys, Handler, RuleTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    HandlerFailed {
        statement: usize,
        node: String,
        handler: Handler,
        message: String,
    },
    EmptySentence {
        statement: usize,
    },
    MultipleComponents {
        count: usize,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::HandlerFailed {
                statement,
                node,
                handler,
                message,
            } => {
                write!(f, "statement {statement}: {handler:?} handler failed at {node}: {message}")
            }
            Diagnostic::EmptySentence { statement } => {
                write!(f, "statement {statement}: no frames produced, sentence ignored")
            }
            Diagnostic::MultipleComponents { count } => {
                write!(f, "meaning graph has {count} connected components")
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DmrOutput {
    pub graph: DmrGraph,
    pub diagnostics: Vec<Diagnostic>,
}

/// Read-only inputs shared by every handler invocation within a sentence.
#[derive(Clone, Copy)]
pub struct FillContext<'a> {
    pub doc: &'a SeptDocument,
    pub sept: &'a Sept,
    pub ontology: &'a Ontology,
    pub rules: &'a RuleTable,
}

/// What a subtree hands back to its parent handler: its head frames and
/// entities that should attach to the governing action under a given role.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Filled {
    pub heads: Vec<FrameId>,
    pub extras: Vec<(RelationKind, FrameId)>,
}

impl Filled {
    pub fn head(id: FrameId) -> Self {
        Self {
            heads: vec![id],
            extras: vec![],
        }
    }

    pub fn extend(&mut self, other: Filled) {
        self.heads.extend(other.heads);
        self.extras.extend(other.extras);
    }
}

#[derive(Debug)]
enum Undo {
    Inserted(FrameId),
    Replaced(Frame),
    Registered(WordRef),
    Keyed((String, String)),
    Edge((RelationKind, FrameId, FrameId)),
}

#[derive(Debug, Clone, Copy)]
pub struct Mark {
    journal: usize,
    relations: usize,
    next_relation: usize,
}

/// Frame and relation accumulators plus the registries used for anaphora
/// links and (surface, sense) merging. Every mutation is journaled so a
/// failing handler can be rolled back.
#[derive(Debug, Default)]
pub struct Accumulator {
    graph: DmrGraph,
    by_coord: HashMap<WordRef, FrameId>,
    by_key: HashMap<(String, String), FrameId>,
    edges: HashSet<(RelationKind, FrameId, FrameId)>,
    statement: usize,
    next_relation: usize,
    journal: Vec<Undo>,
    diagnostics: Vec<Diagnostic>,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn graph(&self) -> &DmrGraph {
        &self.graph
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn begin_statement(&mut self, statement: usize) {
        self.statement = statement;
        self.next_relation = 1;
        self.journal.clear();
    }

    pub fn mark(&self) -> Mark {
        Mark {
            journal: self.journal.len(),
            relations: self.graph.relations.len(),
            next_relation: self.next_relation,
        }
    }

    pub fn rollback(&mut self, mark: Mark) {
        while self.journal.len() > mark.journal {
            match self.journal.pop().unwrap() {
                Undo::Inserted(id) => {
                    self.graph.frames.remove(&id);
                }
                Undo::Replaced(f) => {
                    self.graph.frames.insert(f.id.clone(), f);
                }
                Undo::Registered(c) => {
                    self.by_coord.remove(&c);
                }
                Undo::Keyed(k) => {
                    self.by_key.remove(&k);
                }
                Undo::Edge(e) => {
                    self.edges.remove(&e);
                }
            }
        }
        self.graph.relations.truncate(mark.relations);
        self.next_relation = mark.next_relation;
    }

    pub fn frame_at(&self, coord: WordRef) -> Option<&FrameId> {
        self.by_coord.get(&coord)
    }

    fn register(&mut self, coord: WordRef, id: &FrameId) {
        if let std::collections::hash_map::Entry::Vacant(e) = self.by_coord.entry(coord) {
            e.insert(id.clone());
            self.journal.push(Undo::Registered(coord));
        }
    }

    fn merge_attributes(&mut self, id: &FrameId, attrs: Vec<Attribute>) {
        let frame = &self.graph.frames[id];
        let fresh: Vec<Attribute> = attrs.into_iter().filter(|a| !frame.attributes.contains(a)).collect();
        if fresh.is_empty() {
            return;
        }
        self.journal.push(Undo::Replaced(frame.clone()));
        let frame = self.graph.frames.get_mut(id).unwrap();
        for a in fresh {
            if !frame.attributes.contains(&a) {
                frame.attributes.push(a);
            }
        }
    }

    /// Entity frame for the noun terminal `node` at `coord`. A coordinate
    /// already registered, or an earlier frame with the same surface and
    /// sense, is reused.
    pub fn entity(&mut self, o: &Ontology, coord: WordRef, node: &SeptNode, attrs: Vec<Attribute>) -> FrameId {
        if let Some(id) = self.by_coord.get(&coord).cloned() {
            self.merge_attributes(&id, attrs);
            return id;
        }
        let surface = node.token.clone().unwrap_or_default();
        if let Some(sense) = &node.sense {
            let key = (surface.clone(), sense.clone());
            if let Some(id) = self.by_key.get(&key).cloned() {
                self.merge_attributes(&id, attrs);
                self.register(coord, &id);
                return id;
            }
            let id = FrameId(format!("e{}.{}", coord.statement, coord.word));
            self.by_key.insert(key.clone(), id.clone());
            self.journal.push(Undo::Keyed(key));
        }
        let id = FrameId(format!("e{}.{}", coord.statement, coord.word));
        let frame = Frame {
            id: id.clone(),
            kind: FrameKind::Entity,
            surface,
            sense: node.sense.clone(),
            concept: concept_of(o, node),
            attributes: dedup(attrs),
            qualifier: None,
        };
        self.insert_frame(frame);
        self.register(coord, &id);
        id
    }

    /// Action frame headed by the verb terminal `node`.
    pub fn action(&mut self, o: &Ontology, coord: WordRef, node: &SeptNode, qualifier: Option<String>) -> FrameId {
        let id = FrameId(format!("a{}.{}", coord.statement, coord.word));
        let frame = Frame {
            id: id.clone(),
            kind: FrameKind::Action,
            surface: node.base_form().unwrap_or_default().to_lowercase(),
            sense: node.sense.clone(),
            concept: concept_of(o, node),
            attributes: vec![],
            qualifier,
        };
        self.insert_frame(frame);
        id
    }

    fn insert_frame(&mut self, frame: Frame) {
        if let Some(old) = self.graph.frames.insert(frame.id.clone(), frame.clone()) {
            self.journal.push(Undo::Replaced(old));
        } else {
            self.journal.push(Undo::Inserted(frame.id));
        }
    }

    /// Adds a relation unless it would break the kind constraints, form a
    /// self-loop, or duplicate an existing (kind, from, to) triple.
    pub fn relate(&mut self, kind: RelationKind, from: &FrameId, to: &FrameId) -> bool {
        if from == to {
            return false;
        }
        let (Some(a), Some(b)) = (self.graph.frames.get(from), self.graph.frames.get(to)) else {
            return false;
        };
        if !kind.admits(a.kind, b.kind) {
            log::debug!("dropping {kind} {from} -> {to}: endpoint kinds do not fit");
            return false;
        }
        let edge = (kind, from.clone(), to.clone());
        if !self.edges.insert(edge.clone()) {
            return false;
        }
        self.journal.push(Undo::Edge(edge));
        self.graph.relations.push(Relation {
            id: RelationId(format!("r{}.{}", self.statement, self.next_relation)),
            kind,
            from: from.clone(),
            to: to.clone(),
        });
        self.next_relation += 1;
        true
    }

    pub fn into_output(self) -> DmrOutput {
        DmrOutput {
            graph: self.graph,
            diagnostics: self.diagnostics,
        }
    }
}

fn dedup(attrs: Vec<Attribute>) -> Vec<Attribute> {
    let mut out: Vec<Attribute> = Vec::with_capacity(attrs.len());
    for a in attrs {
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

fn concept_of(o: &Ontology, node: &SeptNode) -> Option<String> {
    node.sense.as_deref().and_then(|s| o.concept_of_sense(s)).map(|c| c.id.clone())
}

pub fn generate_dmr(doc: &SeptDocument, o: &Ontology, rules: &RuleTable) -> DmrGraph {
    generate_dmr_with_diagnostics(doc, o, rules).graph
}

pub fn generate_dmr_with_diagnostics(doc: &SeptDocument, o: &Ontology, rules: &RuleTable) -> DmrOutput {
    let mut acc = Accumulator::new();
    for sept in &doc.septs {
        acc.begin_statement(sept.statement_index);
        let before = acc.graph.frames.len();
        let ctx = FillContext {
            doc,
            sept,
            ontology: o,
            rules,
        };
        fill_frames_and_relations(&ctx, sept.root_node(), &mut acc);
        let touched = acc.journal.iter().any(|u| matches!(u, Undo::Registered(_)));
        if acc.graph.frames.len() == before && !touched {
            acc.diagnostics.push(Diagnostic::EmptySentence {
                statement: sept.statement_index,
            });
        }
    }
    let components = acc.graph.connected_components().len();
    if components > 1 {
        acc.diagnostics.push(Diagnostic::MultipleComponents { count: components });
    }
    acc.journal.clear();
    acc.into_output()
}

/// Runs the first handler whose key matches `node`, or descends into the
/// children when none does. A failing handler leaves the accumulators as
/// they were and records a diagnostic.
pub fn fill_frames_and_relations(ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> Filled {
    for key in rule_keys(ctx.sept, node) {
        let Some(handler) = ctx.rules.handler(&key) else {
            continue;
        };
        let mark = acc.mark();
        return match handlers::run(handler, ctx, node, acc) {
            Ok(filled) => filled,
            Err(message) => {
                acc.rollback(mark);
                acc.diagnostics.push(Diagnostic::HandlerFailed {
                    statement: ctx.sept.statement_index,
                    node: node.id.clone(),
                    handler,
                    message,
                });
                Filled::default()
            }
        };
    }
    fill_children(ctx, node, acc)
}

pub(crate) fn fill_children(ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> Filled {
    let mut out = Filled::default();
    for c in ctx.sept.children(node) {
        out.extend(fill_frames_and_relations(ctx, c, acc));
    }
    out
}

/// Stable text dump of a graph: one line per frame, then one per relation.
pub fn export_dmr(g: &DmrGraph) -> String {
    let mut out = String::new();
    for f in g.frames.values() {
        let kind = match f.kind {
            FrameKind::Entity => "entity",
            FrameKind::Action => "action",
        };
        out.push_str(&format!("{kind} {} {}", f.id, f.label()));
        if let Some(s) = &f.sense {
            out.push_str(&format!(" sense={s}"));
        }
        if let Some(c) = &f.concept {
            out.push_str(&format!(" concept={c}"));
        }
        for a in &f.attributes {
            out.push_str(&format!(" {}={}", a.kind, a.value));
        }
        out.push('\n');
    }
    let mut rels: Vec<&Relation> = g.relations.iter().collect();
    rels.sort_by(|a, b| (&a.from, &a.to, a.kind).cmp(&(&b.from, &b.to, b.kind)));
    for r in rels {
        out.push_str(&format!("{} {} -> {}\n", r.kind, r.from, r.to));
    }
    out
}

/// Frames whose ids name a coordinate in `statement`.
pub fn frames_of_statement(g: &DmrGraph, statement: usize) -> BTreeSet<FrameId> {
    let prefix_e = format!("e{statement}.");
    let prefix_a = format!("a{statement}.");
    g.frames
        .keys()
        .filter(|k| k.0.starts_with(&prefix_e) || k.0.starts_with(&prefix_a))
        .cloned()
        .collect()
}

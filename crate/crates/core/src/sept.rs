//! Semantically enriched parse trees (SEPTs).
//!
//! A SEPT document is the hand-off point from the text preprocessing stage:
//! one parse tree per sentence whose terminals carry a disambiguated sense id
//! and, for anaphors, a `(statement, word)` pointer to the noun they refer to.
//! This module parses the JSON interchange form, validates every structural
//! invariant up front, and indexes terminals by their coordinates so later
//! stages never have to re-check anything.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A `(statement, word)` coordinate. Both indices are 1-based; the word index
/// counts terminals left to right within the statement's tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordRef {
    pub statement: usize,
    pub word: usize,
}

impl WordRef {
    pub fn new(statement: usize, word: usize) -> Self {
        Self { statement, word }
    }
}

impl fmt::Display for WordRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.statement, self.word)
    }
}

impl Serialize for WordRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.statement, self.word].serialize(s)
    }
}

impl<'de> Deserialize<'de> for WordRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [statement, word] = <[usize; 2]>::deserialize(d)?;
        Ok(Self { statement, word })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeptNode {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    /// Base form from morphological analysis. Optional; falls back to `token`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub referent: Option<WordRef>,
}

impl SeptNode {
    pub fn is_terminal(&self) -> bool {
        self.token.is_some()
    }

    /// Lemma if present, otherwise the surface token.
    pub fn base_form(&self) -> Option<&str> {
        self.lemma.as_deref().or(self.token.as_deref())
    }

    /// Nouns, proper nouns and pronouns: the labels anaphora may point at.
    pub fn is_noun_family(&self) -> bool {
        is_noun_family_label(&self.label)
    }
}

pub fn is_noun_family_label(label: &str) -> bool {
    label.starts_with("NN") || label.starts_with("PRP")
}

/// One sentence's tree. Nodes are kept in pre-order from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sept {
    pub statement_index: usize,
    pub root: String,
    nodes: Vec<SeptNode>,
    by_id: HashMap<String, usize>,
    /// Node positions of the terminals, in word order.
    terminals: Vec<usize>,
}

impl Sept {
    pub fn node(&self, id: &str) -> Option<&SeptNode> {
        self.by_id.get(id).map(|&i| &self.nodes[i])
    }

    pub fn root_node(&self) -> &SeptNode {
        &self.nodes[self.by_id[&self.root]]
    }

    pub fn nodes(&self) -> &[SeptNode] {
        &self.nodes
    }

    pub fn children<'a>(&'a self, node: &'a SeptNode) -> impl Iterator<Item = &'a SeptNode> + 'a {
        node.children.iter().map(move |c| &self.nodes[self.by_id[c]])
    }

    pub fn terminals(&self) -> impl Iterator<Item = &SeptNode> {
        self.terminals.iter().map(move |&i| &self.nodes[i])
    }

    /// The terminal at 1-based word position `word`.
    pub fn word(&self, word: usize) -> Option<&SeptNode> {
        word.checked_sub(1).and_then(|w| self.terminals.get(w)).map(|&i| &self.nodes[i])
    }

    /// Word position of a terminal node, if `id` names one.
    pub fn word_index(&self, id: &str) -> Option<usize> {
        let pos = *self.by_id.get(id)?;
        self.terminals.iter().position(|&t| t == pos).map(|w| w + 1)
    }

    /// Terminals under `node` in word order.
    pub fn yield_of<'a>(&'a self, node: &'a SeptNode) -> Vec<&'a SeptNode> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            if n.is_terminal() {
                out.push(n);
            } else {
                for c in n.children.iter().rev() {
                    stack.push(&self.nodes[self.by_id[c]]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeptDocument {
    pub septs: Vec<Sept>,
    pub source_text: Option<String>,
    /// Node id -> coordinate for every terminal in the document.
    coords: HashMap<String, WordRef>,
}

impl SeptDocument {
    pub fn sept(&self, statement: usize) -> Option<&Sept> {
        statement.checked_sub(1).and_then(|i| self.septs.get(i))
    }

    pub fn terminal(&self, at: WordRef) -> Option<&SeptNode> {
        self.sept(at.statement)?.word(at.word)
    }

    pub fn coord_of(&self, node_id: &str) -> Option<WordRef> {
        self.coords.get(node_id).copied()
    }

    pub fn terminal_count(&self) -> usize {
        self.coords.len()
    }

    /// Follow referent links from `node` to the noun they ultimately name.
    ///
    /// Returns `None` when the node carries no referent. Chains are bounded by
    /// the terminal count; validation already rejected cycles.
    pub fn resolve_referent(&self, node: &SeptNode) -> Option<&SeptNode> {
        let mut at = node.referent?;
        let mut current = self.terminal(at)?;
        for _ in 0..self.terminal_count() {
            match current.referent {
                Some(next) => {
                    at = next;
                    current = self.terminal(at)?;
                }
                None => return Some(current),
            }
        }
        None
    }

    /// Same as [`resolve_referent`](Self::resolve_referent) but returns the
    /// coordinate of the final noun.
    pub fn resolve_referent_coord(&self, node: &SeptNode) -> Option<WordRef> {
        let target = self.resolve_referent(node)?;
        self.coord_of(&target.id)
    }

    /// Canonical JSON form: nodes listed in pre-order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawDocument::from(self)).expect("sept document serializes")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeptError {
    #[error("malformed SEPT document at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("statement indices must run 1..N in order; found {found} at position {expected}")]
    StatementIndex { expected: usize, found: usize },
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("statement {statement}: root `{root}` is not a node")]
    MissingRoot { statement: usize, root: String },
    #[error("statement {statement}: node `{node}` references unknown child `{child}`")]
    UnknownChild { statement: usize, node: String, child: String },
    #[error("statement {statement}: node `{node}` must have either children or a token, not {problem}")]
    NodeShape { statement: usize, node: String, problem: &'static str },
    #[error("statement {statement}: node `{node}` is not a terminal but carries a {field}")]
    InternalAnnotation { statement: usize, node: String, field: &'static str },
    #[error("statement {statement}: node `{node}` has more than one parent or lies on a cycle")]
    NotATree { statement: usize, node: String },
    #[error("statement {statement}: node `{node}` is unreachable from the root")]
    Unreachable { statement: usize, node: String },
    #[error("referent {target} of node `{node}` does not name a terminal")]
    DanglingReferent { node: String, target: WordRef },
    #[error("referent {target} of node `{node}` is a `{label}`, not a noun or pronoun")]
    ReferentNotNoun { node: String, target: WordRef, label: String },
    #[error("referent chain starting at {start} is cyclic")]
    ReferentCycle { start: WordRef },
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    septs: Vec<RawSept>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_text: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSept {
    index: usize,
    root: String,
    nodes: Vec<SeptNode>,
}

impl From<&SeptDocument> for RawDocument {
    fn from(doc: &SeptDocument) -> Self {
        RawDocument {
            septs: doc
                .septs
                .iter()
                .map(|s| RawSept {
                    index: s.statement_index,
                    root: s.root.clone(),
                    nodes: s.nodes.clone(),
                })
                .collect(),
            source_text: doc.source_text.clone(),
        }
    }
}

pub fn parse_sept_document(bytes: &[u8]) -> Result<SeptDocument, SeptError> {
    let raw: RawDocument = serde_json::from_slice(bytes).map_err(|e| SeptError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build_document(raw)
}

fn build_document(raw: RawDocument) -> Result<SeptDocument, SeptError> {
    let mut seen_ids = HashSet::new();
    let mut septs = Vec::with_capacity(raw.septs.len());
    for (pos, rs) in raw.septs.into_iter().enumerate() {
        if rs.index != pos + 1 {
            return Err(SeptError::StatementIndex {
                expected: pos + 1,
                found: rs.index,
            });
        }
        for n in &rs.nodes {
            if !seen_ids.insert(n.id.clone()) {
                return Err(SeptError::DuplicateNode(n.id.clone()));
            }
        }
        septs.push(build_sept(rs)?);
    }

    let mut coords = HashMap::new();
    for s in &septs {
        for (w, t) in s.terminals().enumerate() {
            coords.insert(t.id.clone(), WordRef::new(s.statement_index, w + 1));
        }
    }
    let doc = SeptDocument {
        septs,
        source_text: raw.source_text,
        coords,
    };
    validate_referents(&doc)?;
    Ok(doc)
}

fn build_sept(raw: RawSept) -> Result<Sept, SeptError> {
    let statement = raw.index;
    let index: HashMap<&str, usize> = raw.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let Some(&root_pos) = index.get(raw.root.as_str()) else {
        return Err(SeptError::MissingRoot { statement, root: raw.root });
    };

    for n in &raw.nodes {
        let problem = match (n.children.is_empty(), n.token.is_some()) {
            (true, false) => Some("neither"),
            (false, true) => Some("both"),
            _ => None,
        };
        if let Some(problem) = problem {
            return Err(SeptError::NodeShape {
                statement,
                node: n.id.clone(),
                problem,
            });
        }
        if !n.is_terminal() {
            let field = if n.sense.is_some() {
                Some("sense")
            } else if n.referent.is_some() {
                Some("referent")
            } else if n.lemma.is_some() {
                Some("lemma")
            } else {
                None
            };
            if let Some(field) = field {
                return Err(SeptError::InternalAnnotation {
                    statement,
                    node: n.id.clone(),
                    field,
                });
            }
        }
        for c in &n.children {
            if !index.contains_key(c.as_str()) {
                return Err(SeptError::UnknownChild {
                    statement,
                    node: n.id.clone(),
                    child: c.clone(),
                });
            }
        }
    }

    // Pre-order walk from the root; a node visited twice has two parents or
    // sits on a cycle.
    let mut order = Vec::with_capacity(raw.nodes.len());
    let mut visited = vec![false; raw.nodes.len()];
    let mut stack = vec![root_pos];
    while let Some(i) = stack.pop() {
        if visited[i] {
            return Err(SeptError::NotATree {
                statement,
                node: raw.nodes[i].id.clone(),
            });
        }
        visited[i] = true;
        order.push(i);
        for c in raw.nodes[i].children.iter().rev() {
            stack.push(index[c.as_str()]);
        }
    }
    if let Some(i) = visited.iter().position(|v| !v) {
        return Err(SeptError::Unreachable {
            statement,
            node: raw.nodes[i].id.clone(),
        });
    }

    let mut slots: Vec<Option<SeptNode>> = raw.nodes.into_iter().map(Some).collect();
    let nodes: Vec<SeptNode> = order.iter().map(|&i| slots[i].take().unwrap()).collect();
    let by_id = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
    let terminals = nodes.iter().enumerate().filter(|(_, n)| n.is_terminal()).map(|(i, _)| i).collect();
    Ok(Sept {
        statement_index: statement,
        root: raw.root,
        nodes,
        by_id,
        terminals,
    })
}

fn validate_referents(doc: &SeptDocument) -> Result<(), SeptError> {
    let mut links: BTreeMap<WordRef, WordRef> = BTreeMap::new();
    for s in &doc.septs {
        for (w, t) in s.terminals().enumerate() {
            let Some(target) = t.referent else { continue };
            let Some(pointed) = doc.terminal(target) else {
                return Err(SeptError::DanglingReferent { node: t.id.clone(), target });
            };
            if !pointed.is_noun_family() {
                return Err(SeptError::ReferentNotNoun {
                    node: t.id.clone(),
                    target,
                    label: pointed.label.clone(),
                });
            }
            links.insert(WordRef::new(s.statement_index, w + 1), target);
        }
    }
    // Each coordinate has at most one outgoing link, so a chain either ends or
    // revisits a coordinate.
    let mut done: HashSet<WordRef> = HashSet::new();
    for &start in links.keys() {
        let mut on_path = HashSet::new();
        let mut at = start;
        while let Some(&next) = links.get(&at) {
            if done.contains(&at) {
                break;
            }
            if !on_path.insert(at) {
                return Err(SeptError::ReferentCycle { start });
            }
            at = next;
        }
        done.extend(on_path);
    }
    Ok(())
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::RelationKind;
use crate::sept::{Sept, SeptNode};

/// Handler designation stored in a [`RuleTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handler {
    Clause,
    Connective,
    NounPhrase,
    VerbPhrase,
    PrepPhrase,
    Pronoun,
}

/// Grammar-pattern keys mapped to handlers, plus the connective lexicon the
/// connective handler reads its relation kind from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTable {
    rules: BTreeMap<String, Handler>,
    #[serde(default)]
    connectives: BTreeMap<String, RelationKind>,
}

/// Terminal labels whose tokens are spelled out in lexicalized keys.
const LEXICAL_LABELS: [&str; 4] = ["IN", "CC", "RB", "TO"];

const CLAUSE_LABELS: [&str; 2] = ["S", "DS"];

impl RuleTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, handler: Handler) -> Option<Handler> {
        self.rules.insert(key.into(), handler)
    }

    pub fn remove(&mut self, key: &str) -> Option<Handler> {
        self.rules.remove(key)
    }

    pub fn handler(&self, key: &str) -> Option<Handler> {
        self.rules.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    /// Registers a connective and the lexicalized clause rules that use it.
    pub fn set_connective(&mut self, word: &str, kind: RelationKind) {
        let word = word.trim().to_lowercase();
        for parent in CLAUSE_LABELS {
            for left in CLAUSE_LABELS {
                for right in CLAUSE_LABELS {
                    self.rules.insert(format!("{parent} -> {left} {word} {right}"), Handler::Connective);
                }
            }
        }
        self.connectives.insert(word, kind);
    }

    pub fn connective(&self, word: &str) -> Option<RelationKind> {
        self.connectives.get(&word.to_lowercase()).copied()
    }

    pub fn connectives(&self) -> impl Iterator<Item = (&str, RelationKind)> {
        self.connectives.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub fn builtin_handlers() -> RuleTable {
    use RelationKind::*;
    let mut t = RuleTable::new();
    t.insert("S", Handler::Clause);
    t.insert("DS", Handler::Clause);
    t.insert("NP", Handler::NounPhrase);
    t.insert("VP", Handler::VerbPhrase);
    t.insert("PP", Handler::PrepPhrase);
    t.insert("PRP", Handler::Pronoun);
    for (word, kind) in [
        ("because", Reason),
        ("since", Reason),
        ("so", Result),
        ("so that", Result),
        ("therefore", Result),
        ("if", Condition),
        ("and", Conjunction),
        ("before", Before),
        ("after", After),
        ("while", Simultaneous),
        ("when", Simultaneous),
    ] {
        t.set_connective(word, kind);
    }
    t
}

/// Candidate keys for `node`, most specific first: the lexicalized rule
/// (`S -> DS because DS`), the plain rule (`S -> DS IN DS`), the bare label.
pub fn rule_keys(sept: &Sept, node: &SeptNode) -> Vec<String> {
    if node.is_terminal() {
        return vec![node.label.clone()];
    }
    let mut plain = Vec::new();
    let mut lexical = Vec::new();
    for c in sept.children(node) {
        plain.push(c.label.as_str());
        match &c.token {
            Some(tok) if LEXICAL_LABELS.contains(&c.label.as_str()) => lexical.push(tok.to_lowercase()),
            _ => lexical.push(c.label.clone()),
        }
    }
    let plain = format!("{} -> {}", node.label, plain.join(" "));
    let lexical = format!("{} -> {}", node.label, lexical.join(" "));
    let mut keys = Vec::with_capacity(3);
    if lexical != plain {
        keys.push(lexical);
    }
    keys.push(plain);
    keys.push(node.label.clone());
    keys
}

//! Test helpers: fixture loading and a small bracketed-tree builder for SEPT
//! documents.

use serde_json::{json, Value};

use crate::ontology::{load_ontology, Ontology};
use crate::sept::{parse_sept_document, SeptDocument};

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn fixture_doc(name: &str) -> SeptDocument {
    parse_sept_document(&fixture_bytes(name)).unwrap()
}

pub fn ontology() -> Ontology {
    load_ontology(&fixture_bytes("ontology.json")).unwrap()
}

/// Builds a document from one bracketed tree per sentence.
///
/// Terminals are written `word[~lemma][|sense][@stmt.word]`; an underscore
/// in the word stands for a space.
pub fn doc_from_trees(trees: &[&str]) -> SeptDocument {
    parse_sept_document(doc_json_from_trees(trees).to_string().as_bytes()).unwrap()
}

pub fn doc_json_from_trees(trees: &[&str]) -> Value {
    let septs: Vec<Value> = trees
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let tokens = tokenize(t);
            let mut pos = 0;
            let mut nodes = Vec::new();
            let mut k = 0;
            let root = build(&tokens, &mut pos, i + 1, &mut k, &mut nodes);
            json!({"index": i + 1, "root": root, "nodes": nodes})
        })
        .collect();
    json!({ "septs": septs })
}

fn tokenize(s: &str) -> Vec<String> {
    s.replace('(', " ( ").replace(')', " ) ").split_whitespace().map(String::from).collect()
}

fn build(tokens: &[String], pos: &mut usize, stmt: usize, k: &mut usize, nodes: &mut Vec<Value>) -> String {
    assert_eq!(tokens[*pos], "(");
    *pos += 1;
    let label = tokens[*pos].clone();
    *pos += 1;
    *k += 1;
    let id = format!("s{stmt}.n{k}");
    let slot = nodes.len();
    nodes.push(Value::Null);
    if tokens[*pos] != "(" {
        let word = tokens[*pos].clone();
        *pos += 1;
        assert_eq!(tokens[*pos], ")");
        *pos += 1;
        let (word, referent) = match word.split_once('@') {
            Some((w, r)) => {
                let (s, t) = r.split_once('.').unwrap();
                (w.to_string(), Some(json!([s.parse::<usize>().unwrap(), t.parse::<usize>().unwrap()])))
            }
            None => (word, None),
        };
        let (word, sense) = match word.split_once('|') {
            Some((w, s)) => (w.to_string(), Some(s.to_string())),
            None => (word, None),
        };
        let (word, lemma) = match word.split_once('~') {
            Some((w, l)) => (w.to_string(), Some(l.to_string())),
            None => (word, None),
        };
        let mut n = json!({"id": id, "label": label, "token": word.replace('_', " ")});
        if let Some(l) = lemma {
            n["lemma"] = json!(l);
        }
        if let Some(s) = sense {
            n["sense"] = json!(s);
        }
        if let Some(r) = referent {
            n["referent"] = r;
        }
        nodes[slot] = n;
    } else {
        let mut children = Vec::new();
        while tokens[*pos] == "(" {
            children.push(build(tokens, pos, stmt, k, nodes));
        }
        assert_eq!(tokens[*pos], ")");
        *pos += 1;
        nodes[slot] = json!({"id": id, "label": label, "children": children});
    }
    id
}

//! Fixture loading shared by the benchmarks.

use std::path::PathBuf;

use mindmap_core::{builtin_handlers, generate_dmr, load_ontology, parse_sept_document, DmrGraph, Ontology, SeptDocument};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

pub fn ontology() -> Ontology {
    load_ontology(&std::fs::read(fixture("ontology.json")).expect("fixture ontology")).expect("valid ontology")
}

pub fn document(name: &str) -> SeptDocument {
    parse_sept_document(&std::fs::read(fixture(name)).expect("fixture document")).expect("valid document")
}

pub fn dmr(name: &str, o: &Ontology) -> DmrGraph {
    generate_dmr(&document(name), o, &builtin_handlers())
}

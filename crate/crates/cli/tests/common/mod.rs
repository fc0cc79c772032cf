#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures().join(name)
}

pub fn manifest() -> PathBuf {
    fixture("images/manifest.json")
}

pub fn mindmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mindmap"))
        .args(args)
        .env_remove("MINDMAP_IMAGE_ENDPOINT")
        .env_remove("MINDMAP_IMAGE_API_KEY")
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Runs `generate` on a fixture document with the manifest and returns the
/// process output.
pub fn generate(sept: &str, out: &Path, extra: &[&str]) -> Output {
    let sept = fixture(sept);
    let ontology = fixture("ontology.json");
    let manifest = manifest();
    let mut args = vec![
        "generate",
        "--sept",
        path_str(&sept),
        "--ontology",
        path_str(&ontology),
        "--manifest",
        path_str(&manifest),
        "--out",
        path_str(out),
    ];
    args.extend_from_slice(extra);
    mindmap(&args)
}

pub fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

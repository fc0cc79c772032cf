use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mindmap_core::{
    build_mlmr, builtin_handlers, draw_tree, generate_dmr_with_diagnostics, load_ontology, parse_sept_document, Config, MindMapper, Ontology,
    QueryMode, SizeMode, TypeFilter,
};
use serde::Serialize;

use crate::images::{ImageArgs, Images};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Draw the whole meaning graph as one map.
    Single,
    /// Draw every level of the summary tree.
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageTypeArg {
    All,
    Clipart,
    Lineart,
}

impl From<ImageTypeArg> for TypeFilter {
    fn from(v: ImageTypeArg) -> Self {
        match v {
            ImageTypeArg::All => TypeFilter::All,
            ImageTypeArg::Clipart => TypeFilter::ClipArt,
            ImageTypeArg::Lineart => TypeFilter::LineArt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SizeArg {
    All,
    Auto,
    Small,
}

impl From<SizeArg> for SizeMode {
    fn from(v: SizeArg) -> Self {
        match v {
            SizeArg::All => SizeMode::All,
            SizeArg::Auto => SizeMode::Auto,
            SizeArg::Small => SizeMode::Small,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Parsed text as a SEPT JSON document.
    #[arg(long, value_name = "FILE")]
    pub sept: PathBuf,
    /// Concept ontology JSON.
    #[arg(long, value_name = "FILE")]
    pub ontology: PathBuf,
    /// Run configuration JSON; omitted sections use defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Multi)]
    pub mode: Mode,
    /// Overrides the configured image type filter.
    #[arg(long, value_enum)]
    pub image_type: Option<ImageTypeArg>,
    /// Overrides the configured image size mode.
    #[arg(long, value_enum)]
    pub size: Option<SizeArg>,
    /// Build image queries with concept combination.
    #[arg(long)]
    pub cc: bool,
    #[arg(long, value_name = "DIR", default_value = "mindmap-out")]
    pub out: PathBuf,
    /// Seed for clustering and layout restarts.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub images: ImageArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateReport {
    pub files: Vec<PathBuf>,
    pub diagnostics: Vec<String>,
}

pub fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading config {}", p.display()))?;
            Config::from_json(&bytes).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(Config::default()),
    }
}

pub fn read_ontology(path: &Path) -> Result<Ontology> {
    let bytes = fs::read(path).with_context(|| format!("reading ontology {}", path.display()))?;
    load_ontology(&bytes).with_context(|| format!("in {}", path.display()))
}

fn write(path: PathBuf, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

pub fn run_generate(args: &GenerateArgs) -> Result<GenerateReport> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(t) = args.image_type {
        config.query.type_filter = t.into();
    }
    if let Some(s) = args.size {
        config.query.size_mode = s.into();
    }
    if args.cc {
        config.query.mode = QueryMode::ConceptCombination;
    }
    let ontology = read_ontology(&args.ontology)?;
    let sept_bytes = fs::read(&args.sept).with_context(|| format!("reading {}", args.sept.display()))?;
    let doc = parse_sept_document(&sept_bytes).with_context(|| format!("in {}", args.sept.display()))?;

    let out = generate_dmr_with_diagnostics(&doc, &ontology, &builtin_handlers());
    let diagnostics: Vec<String> = out.diagnostics.iter().map(ToString::to_string).collect();
    for d in &diagnostics {
        log::warn!("{d}");
    }
    if out.graph.is_empty() {
        bail!("{} produced an empty meaning graph", args.sept.display());
    }

    let images = Images::from_args(&args.images)?;
    let mapper = MindMapper {
        ontology: &ontology,
        config: &config,
        provider: images.provider(),
        cache: images.cache(),
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut files = Vec::new();
    match args.mode {
        Mode::Single => {
            let map = mapper.draw(&out.graph, &Default::default(), &Default::default())?;
            write(args.out.join("mindmap.svg"), map.svg.as_bytes(), &mut files)?;
        }
        Mode::Multi => {
            let root = build_mlmr(&out.graph, &ontology, &config.mlmr)?;
            let (index, maps) = draw_tree(&mapper, &root)?;
            for (entry, map) in index.nodes.iter().zip(&maps) {
                write(args.out.join(format!("{}.svg", entry.name)), map.svg.as_bytes(), &mut files)?;
            }
            let queries: std::collections::BTreeMap<&str, _> = index.nodes.iter().zip(&maps).map(|(e, m)| (e.name.as_str(), &m.queries)).collect();
            let mut qjson = serde_json::to_string_pretty(&queries)?;
            qjson.push('\n');
            write(args.out.join("queries.json"), qjson.as_bytes(), &mut files)?;
            let mut json = serde_json::to_string_pretty(&index)?;
            json.push('\n');
            write(args.out.join("index.json"), json.as_bytes(), &mut files)?;
            write(args.out.join("mlmr.txt"), root.export_text().as_bytes(), &mut files)?;
        }
    }
    Ok(GenerateReport { files, diagnostics })
}

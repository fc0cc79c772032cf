//! Turns parsed text into multilevel MindMaps.
//!
//! The pipeline: SEPT trees ([`sept`]) are filled into a meaning graph
//! ([`dmr`]), summarized level by level against a concept ontology
//! ([`mrsa`], [`mlmr`]), and each level is drawn with images ([`visual_query`]),
//! a spring layout ([`layout`]) and SVG output ([`render`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dmr;
pub mod graph;
pub mod layout;
pub mod mindmap;
pub mod mlmr;
pub mod mrsa;
pub mod ontology;
pub mod render;
pub mod sept;
#[cfg(test)]
pub(crate) mod testutil;
pub mod visual_query;

pub use config::{Config, ConfigError};
pub use dmr::{builtin_handlers, export_dmr, generate_dmr, generate_dmr_with_diagnostics, Diagnostic, DmrOutput, RuleTable};
pub use graph::{Attribute, DmrGraph, Frame, FrameId, FrameKind, MeaningGraph, Relation, RelationId, RelationKind};
pub use layout::{minimize_layout, LayoutConfig, LayoutProblem, LayoutResult, NodeRect};
pub use mindmap::{draw_tree, tree_index, IndexEntry, MindMap, MindMapper, PipelineError, TreeIndex};
pub use mlmr::{build_mlmr, GroupLink, MlmrConfig, MlmrError, MlmrNode, Session};
pub use mrsa::{summarize, DmrRegion, MrsaError, SummarizeConfig, SummarizedMr, WeightConfig};
pub use ontology::{load_ontology, Concept, Ontology, OntologyError};
pub use render::{render_svg, RenderConfig, Scene, SceneEdge, SceneNode};
pub use sept::{parse_sept_document, SeptDocument, SeptError};
pub use visual_query::{
    fetch_image, CountingProvider, HttpProvider, ImageCache, ImageProvider, ImageRef, ManifestProvider, QueryConfig, QueryMode, SizeClass, SizeMode,
    TypeFilter,
};

//! Scene description and SVG output for a laid-out meaning graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FrameId, FrameKind, MeaningGraph, RelationKind};
use crate::layout::{LayoutResult, NodeRect};
use crate::visual_query::{ImageRef, SizeClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub small_px: f64,
    pub medium_px: f64,
    /// Text nodes are this wide per character.
    pub char_width: f64,
    pub text_height: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            small_px: 64.0,
            medium_px: 128.0,
            char_width: 10.0,
            text_height: 24.0,
        }
    }
}

/// An image chosen for a visual frame and the size it is shown at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visual {
    pub image: ImageRef,
    pub size: SizeClass,
}

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("layout has no position for frame `{0}`")]
    MissingLayout(FrameId),
}

fn text_rect(label: &str, cfg: &RenderConfig) -> NodeRect {
    NodeRect::new(cfg.char_width * label.chars().count().max(1) as f64, cfg.text_height)
}

/// Rectangle of every frame: the image box for frames with a found image,
/// a text box otherwise.
pub fn node_rects(mr: &MeaningGraph, visuals: &BTreeMap<FrameId, Visual>, cfg: &RenderConfig) -> BTreeMap<FrameId, NodeRect> {
    mr.frames
        .values()
        .map(|f| {
            let rect = match visuals.get(&f.id) {
                Some(v) if !v.image.missing => {
                    let px = match v.size {
                        SizeClass::Small => cfg.small_px,
                        SizeClass::Medium => cfg.medium_px,
                    };
                    NodeRect::new(px, px)
                }
                _ => text_rect(&f.label(), cfg),
            };
            (f.id.clone(), rect)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneNode {
    pub id: FrameId,
    pub kind: FrameKind,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageRef>,
    pub is_group: bool,
    pub is_main: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEdge {
    pub from: FrameId,
    pub to: FrameId,
    pub kind: RelationKind,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub width: f64,
    pub height: f64,
    pub nodes: Vec<SceneNode>,
    pub edges: Vec<SceneEdge>,
}

impl Scene {
    pub fn node(&self, id: &FrameId) -> Option<&SceneNode> {
        self.nodes.iter().find(|n| &n.id == id)
    }
}

pub struct SceneInput<'a> {
    pub mr: &'a MeaningGraph,
    pub layout: &'a LayoutResult,
    pub visuals: &'a BTreeMap<FrameId, Visual>,
    pub groups: &'a BTreeSet<FrameId>,
    pub mains: &'a BTreeSet<FrameId>,
}

pub fn build_scene(input: &SceneInput<'_>, cfg: &RenderConfig) -> Result<Scene, RenderError> {
    let rects = node_rects(input.mr, input.visuals, cfg);
    let mut nodes = Vec::with_capacity(input.mr.frames.len());
    for f in input.mr.frames.values() {
        let (x, y) = *input
            .layout
            .positions
            .get(&f.id)
            .ok_or_else(|| RenderError::MissingLayout(f.id.clone()))?;
        let rect = rects[&f.id];
        nodes.push(SceneNode {
            id: f.id.clone(),
            kind: f.kind,
            label: f.label(),
            x,
            y,
            width: rect.width,
            height: rect.height,
            image: input.visuals.get(&f.id).map(|v| v.image.clone()).filter(|i| !i.missing),
            is_group: input.groups.contains(&f.id),
            is_main: input.mains.contains(&f.id),
        });
    }
    let mut edges: Vec<SceneEdge> = input
        .mr
        .relations
        .iter()
        .map(|r| SceneEdge {
            from: r.from.clone(),
            to: r.to.clone(),
            kind: r.kind,
            label: r.kind.name().to_string(),
        })
        .collect();
    edges.sort_by(|a, b| (&a.from, &a.to, a.kind).cmp(&(&b.from, &b.to, b.kind)));
    edges.dedup();
    let (width, height) = if nodes.is_empty() {
        (0.0, 0.0)
    } else {
        (input.layout.width, input.layout.height)
    };
    Ok(Scene { width, height, nodes, edges })
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// SVG 1.1 document. Edges come first so nodes paint over them; nodes are
/// in frame-id order. Coordinates use the shortest exact decimal form.
pub fn render_svg(scene: &Scene) -> String {
    let mut s = String::new();
    let (w, h) = (scene.width, scene.height);
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    s.push_str("<g class=\"edges\" stroke=\"#8a8a8a\" stroke-width=\"1.5\">\n");
    let at: BTreeMap<&FrameId, &SceneNode> = scene.nodes.iter().map(|n| (&n.id, n)).collect();
    for e in &scene.edges {
        let (Some(a), Some(b)) = (at.get(&e.from), at.get(&e.to)) else {
            continue;
        };
        let _ = writeln!(
            s,
            "<line class=\"edge\" data-kind=\"{}\" data-from=\"{}\" data-to=\"{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            esc(&e.label),
            esc(e.from.as_str()),
            esc(e.to.as_str()),
            a.x,
            a.y,
            b.x,
            b.y
        );
    }
    s.push_str("</g>\n<g class=\"edge-labels\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555\" text-anchor=\"middle\">\n");
    for e in &scene.edges {
        let (Some(a), Some(b)) = (at.get(&e.from), at.get(&e.to)) else {
            continue;
        };
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            (a.x + b.x) / 2.0,
            (a.y + b.y) / 2.0,
            esc(&e.label)
        );
    }
    s.push_str("</g>\n<g class=\"nodes\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">\n");
    for n in &scene.nodes {
        let kind = match n.kind {
            FrameKind::Entity => "entity",
            FrameKind::Action => "action",
        };
        let mut class = format!("node {kind}");
        if n.is_group {
            class.push_str(" group");
        }
        if n.is_main {
            class.push_str(" main");
        }
        let expandable = if n.is_group { " data-expandable=\"true\"" } else { "" };
        let _ = writeln!(
            s,
            "<g class=\"{class}\" data-id=\"{}\" data-cx=\"{}\" data-cy=\"{}\"{expandable}>",
            esc(n.id.as_str()),
            n.x,
            n.y
        );
        let (x0, y0) = (n.x - n.width / 2.0, n.y - n.height / 2.0);
        match &n.image {
            Some(img) => {
                let _ = writeln!(
                    s,
                    "<image x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" preserveAspectRatio=\"xMidYMid meet\" xlink:href=\"{}\"/>",
                    n.width,
                    n.height,
                    esc(&img.uri)
                );
                let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", n.x, y0 + n.height + 14.0, esc(&n.label));
            }
            None => {
                let (fill, stroke, dash) = match (n.is_group, n.kind) {
                    (true, _) => ("#fff6d5", "#c49a00", " stroke-dasharray=\"4 2\""),
                    (false, FrameKind::Entity) => ("#e3f0ff", "#3b6fb6", ""),
                    (false, FrameKind::Action) => ("#eaf7e6", "#4a8f3c", ""),
                };
                let _ = writeln!(
                    s,
                    "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" rx=\"6\" fill=\"{fill}\" stroke=\"{stroke}\"{dash}/>",
                    n.width, n.height
                );
                let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", n.x, n.y + 5.0, esc(&n.label));
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</g>\n</svg>\n");
    s
}

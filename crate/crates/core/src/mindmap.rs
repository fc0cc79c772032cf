//! From a meaning graph to a drawn MindMap: image lookup, sizing, layout,
//! scene and SVG. Also the multi-map export of a whole tree.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::graph::{FrameId, MeaningGraph};
use crate::layout::{minimize_layout, LayoutError, LayoutProblem};
use crate::mlmr::MlmrNode;
use crate::mrsa::{assign_action_weights, assign_entity_weights};
use crate::ontology::Ontology;
use crate::render::{build_scene, node_rects, render_svg, RenderError, Scene, SceneInput, Visual};
use crate::visual_query::{display_size, fetch_image, generate_query, is_visual_frame, FetchError, ImageCache, ImageProvider, QueryError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MindMap {
    pub scene: Scene,
    pub svg: String,
    pub layout_cost: f64,
    /// Image query issued for each visual frame.
    pub queries: BTreeMap<FrameId, String>,
}

pub struct MindMapper<'a> {
    pub ontology: &'a Ontology,
    pub config: &'a Config,
    pub provider: &'a dyn ImageProvider,
    pub cache: Option<&'a ImageCache>,
}

impl MindMapper<'_> {
    /// Draws `mr`. Group frames are marked expandable and never get images.
    pub fn draw(&self, mr: &MeaningGraph, groups: &BTreeSet<FrameId>, mains: &BTreeSet<FrameId>) -> Result<MindMap, PipelineError> {
        let cfg = self.config;
        let weights_cfg = &cfg.mlmr.summarize.weights;
        let mut weights = assign_entity_weights(mr, weights_cfg);
        let actions = assign_action_weights(mr, &weights, weights_cfg);
        weights.extend(actions.weights);

        let visual: Vec<FrameId> = mr
            .frames
            .values()
            .filter(|f| !groups.contains(&f.id) && is_visual_frame(f, self.ontology))
            .map(|f| f.id.clone())
            .collect();
        let looked_up: Vec<(FrameId, String, Visual)> = visual
            .par_iter()
            .map(|id| -> Result<_, PipelineError> {
                let q = generate_query(id, mr, &weights, self.ontology, &cfg.query)?;
                let image = fetch_image(self.provider, self.cache, &q, cfg.query.type_filter, cfg.query.size_mode)?;
                let size = display_size(id, mr, &cfg.query);
                Ok((id.clone(), q, Visual { image, size }))
            })
            .collect::<Result<_, _>>()?;
        let mut queries = BTreeMap::new();
        let mut visuals = BTreeMap::new();
        for (id, q, v) in looked_up {
            queries.insert(id.clone(), q);
            visuals.insert(id, v);
        }

        let rects = node_rects(mr, &visuals, &cfg.render);
        let layout = minimize_layout(&LayoutProblem::from_mr(mr, &rects)?, &cfg.layout)?;
        let scene = build_scene(
            &SceneInput {
                mr,
                layout: &layout,
                visuals: &visuals,
                groups,
                mains,
            },
            &cfg.render,
        )?;
        Ok(MindMap {
            svg: render_svg(&scene),
            scene,
            layout_cost: layout.cost,
            queries,
        })
    }

    pub fn draw_node(&self, node: &MlmrNode) -> Result<MindMap, PipelineError> {
        let groups: BTreeSet<FrameId> = node.group_links.keys().cloned().collect();
        let mains: BTreeSet<FrameId> = node.main_frames.iter().cloned().collect();
        self.draw(&node.mr, &groups, &mains)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    /// File stem of this node's map, `n0` for the root.
    pub name: String,
    pub depth: usize,
    pub parent: Option<String>,
    /// Group frames leading here from the root.
    pub path: Vec<FrameId>,
    /// Label of the group frame this node details.
    pub label: Option<String>,
    pub frames: usize,
    pub relations: usize,
    /// Child map name for each group frame.
    pub children: BTreeMap<FrameId, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TreeIndex {
    pub height: usize,
    pub nodes: Vec<IndexEntry>,
}

/// Names every expanded node `n{k}` in pre-order.
pub fn tree_index(root: &MlmrNode) -> TreeIndex {
    let order = root.preorder();
    let names: BTreeMap<Vec<FrameId>, String> = order.iter().enumerate().map(|(k, (path, _))| (path.clone(), format!("n{k}"))).collect();
    let mut nodes = Vec::with_capacity(order.len());
    for (path, node) in &order {
        let parent = (!path.is_empty()).then(|| names[&path[..path.len() - 1]].clone());
        let label = path.last().and_then(|g| {
            let up = root.at_path(&path[..path.len() - 1])?;
            up.mr.frames.get(g).map(|f| f.label())
        });
        let children = node
            .group_links
            .iter()
            .filter(|(_, l)| l.node().is_some())
            .map(|(g, _)| {
                let mut p = path.clone();
                p.push(g.clone());
                (g.clone(), names[&p].clone())
            })
            .collect();
        nodes.push(IndexEntry {
            name: names[path].clone(),
            depth: node.depth,
            parent,
            path: path.clone(),
            label,
            frames: node.mr.frames.len(),
            relations: node.mr.relations.len(),
            children,
        });
    }
    TreeIndex {
        height: root.height(),
        nodes,
    }
}

/// One map per expanded node, in index order.
pub fn draw_tree(mapper: &MindMapper<'_>, root: &MlmrNode) -> Result<(TreeIndex, Vec<MindMap>), PipelineError> {
    let index = tree_index(root);
    let maps = index
        .nodes
        .iter()
        .map(|e| mapper.draw_node(root.at_path(&e.path).expect("index paths resolve")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((index, maps))
}

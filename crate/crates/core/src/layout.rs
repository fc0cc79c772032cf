//! Spring-model node placement for rectangular nodes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FrameId, MeaningGraph};

/// Hop count reported for disconnected pairs.
pub const UNREACHABLE: u32 = u32::MAX;

/// Offset applied to one node of a coincident pair before differentiating.
pub const JITTER: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    /// Rest length between adjacent nodes, in pixels.
    pub l: f64,
    /// Drawing diameter in pixels.
    pub diameter: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
    /// Blank border kept around the drawing.
    pub margin: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            l: 50.0,
            diameter: 600.0,
            restarts: 10,
            max_iterations: 2000,
            gradient_tolerance: 1e-3,
            seed: 0,
            margin: 20.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("layout config: {0}")]
    Config(String),
    #[error("no rectangle for frame `{0}`")]
    MissingRect(FrameId),
    #[error("rectangle of `{0}` must have positive width and height")]
    EmptyRect(FrameId),
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if !(self.l > 0.0) {
            return Err(LayoutError::Config(format!("l must be positive, got {}", self.l)));
        }
        if !(self.diameter > self.l) {
            return Err(LayoutError::Config(format!("diameter {} must exceed l {}", self.diameter, self.l)));
        }
        if self.restarts == 0 {
            return Err(LayoutError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRect {
    pub width: f64,
    pub height: f64,
}

impl NodeRect {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn diameter(&self) -> f64 {
        self.width.hypot(self.height)
    }
}

/// Hop counts by Floyd-Warshall; `UNREACHABLE` for disconnected pairs.
pub fn all_pairs_shortest_paths(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut d = vec![vec![UNREACHABLE; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        if a != b {
            d[a][b] = 1;
            d[b][a] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == UNREACHABLE {
                continue;
            }
            for j in 0..n {
                if d[k][j] == UNREACHABLE {
                    continue;
                }
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn max_finite(dist: &[Vec<u32>]) -> u32 {
    dist.iter().flatten().copied().filter(|&x| x != UNREACHABLE).max().unwrap_or(0)
}

/// Rest lengths: `l` for adjacent pairs, `D * d / max d` for other connected
/// pairs, `D` for disconnected pairs, each plus the mean of the two
/// rectangle diameters.
pub fn desired_lengths(dist: &[Vec<u32>], rects: &[NodeRect], cfg: &LayoutConfig) -> Vec<Vec<f64>> {
    let n = dist.len();
    let max_d = max_finite(dist).max(1) as f64;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let base = match dist[i][j] {
                1 => cfg.l,
                UNREACHABLE => cfg.diameter,
                d => cfg.diameter * d as f64 / max_d,
            };
            out[i][j] = base + (rects[i].diameter() + rects[j].diameter()) / 2.0;
        }
    }
    out
}

/// Spring strengths `1 / d*^2` where `d*` is the shortest-path length in
/// pixels: `l` per hop, and one hop past the longest path when disconnected.
pub fn spring_constants(dist: &[Vec<u32>], cfg: &LayoutConfig) -> Vec<Vec<f64>> {
    let n = dist.len();
    let far = max_finite(dist) as f64 + 1.0;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let hops = match dist[i][j] {
                UNREACHABLE => far,
                d => d as f64,
            };
            let ds = cfg.l * hops;
            out[i][j] = 1.0 / (ds * ds);
        }
    }
    out
}

pub fn spring_energy(pos: &[(f64, f64)], l: &[Vec<f64>], k: &[Vec<f64>]) -> f64 {
    let n = pos.len();
    let mut e = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dx = pos[i].0 - pos[j].0;
            let dy = pos[i].1 - pos[j].1;
            let r2 = dx * dx + dy * dy;
            e += k[i][j] * (r2 + l[i][j] * l[i][j] - 2.0 * l[i][j] * r2.sqrt());
        }
    }
    e
}

/// Analytic gradient in `(d/dx_i, d/dy_i)` pairs. A coincident pair is
/// differentiated as if its second node sat `JITTER` to the right.
pub fn spring_gradient(pos: &[(f64, f64)], l: &[Vec<f64>], k: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = pos.len();
    let mut g = vec![(0.0, 0.0); n];
    for i in 0..n {
        for j in i + 1..n {
            let mut dx = pos[i].0 - pos[j].0;
            let mut dy = pos[i].1 - pos[j].1;
            let mut r = (dx * dx + dy * dy).sqrt();
            if r == 0.0 {
                dx = -JITTER;
                dy = 0.0;
                r = JITTER;
            }
            let s = 2.0 * k[i][j] * (1.0 - l[i][j] / r);
            g[i].0 += s * dx;
            g[i].1 += s * dy;
            g[j].0 -= s * dx;
            g[j].1 -= s * dy;
        }
    }
    g
}

fn norm2(g: &[(f64, f64)]) -> f64 {
    g.iter().map(|(a, b)| a * a + b * b).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRun {
    pub seed: u64,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after each accepted step, starting with the initial energy.
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
    #[serde(skip)]
    pub positions: Vec<(f64, f64)>,
}

const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-18;

/// Steepest descent with backtracking from `start`. The gradient tolerance
/// applies to the gradient divided by the stiffest spring constant, so it
/// does not depend on the overall scale of `k`.
pub fn descend(start: Vec<(f64, f64)>, l: &[Vec<f64>], k: &[Vec<f64>], cfg: &LayoutConfig, seed: u64) -> RestartRun {
    let k_max = k.iter().flatten().copied().fold(0.0, f64::max);
    let scale = if k_max > 0.0 { 1.0 / k_max } else { 1.0 };
    let mut x = start;
    let mut e = spring_energy(&x, l, k);
    let mut trace = vec![e];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        let g = spring_gradient(&x, l, k);
        let gg = norm2(&g);
        if gg.sqrt() * scale < cfg.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut t = step * 2.0;
        let accepted = loop {
            let trial: Vec<(f64, f64)> = x.iter().zip(&g).map(|(p, d)| (p.0 - t * d.0, p.1 - t * d.1)).collect();
            let et = spring_energy(&trial, l, k);
            if et <= e - ARMIJO_C * t * gg {
                break Some((trial, et));
            }
            t *= SHRINK;
            if t < MIN_STEP {
                break None;
            }
        };
        match accepted {
            Some((trial, et)) => {
                x = trial;
                e = et;
                step = t;
                trace.push(e);
            }
            None => break,
        }
    }
    RestartRun {
        seed,
        initial_cost: trace[0],
        final_cost: e,
        iterations,
        converged,
        energy_trace: trace,
        positions: x,
    }
}

/// Graph to lay out: nodes in id order with their rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutProblem {
    pub ids: Vec<FrameId>,
    pub rects: Vec<NodeRect>,
    pub edges: Vec<(usize, usize)>,
}

impl LayoutProblem {
    pub fn from_mr(mr: &MeaningGraph, rects: &BTreeMap<FrameId, NodeRect>) -> Result<Self, LayoutError> {
        let ids: Vec<FrameId> = mr.frames.keys().cloned().collect();
        let index: BTreeMap<&FrameId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut out = Vec::with_capacity(ids.len());
        for id in &ids {
            let r = *rects.get(id).ok_or_else(|| LayoutError::MissingRect(id.clone()))?;
            if !(r.width > 0.0 && r.height > 0.0) {
                return Err(LayoutError::EmptyRect(id.clone()));
            }
            out.push(r);
        }
        let mut edges: Vec<(usize, usize)> = mr
            .relations
            .iter()
            .filter_map(|r| {
                let (a, b) = (*index.get(&r.from)?, *index.get(&r.to)?);
                Some((a.min(b), a.max(b)))
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { ids, rects: out, edges })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutResult {
    /// Node centers on the canvas.
    pub positions: BTreeMap<FrameId, (f64, f64)>,
    pub cost: f64,
    pub restart_index: usize,
    pub width: f64,
    pub height: f64,
    pub runs: Vec<RestartRun>,
}

/// Best of `restarts` descents from uniform starts in the D x D box, then
/// translated so every rectangle lies inside the canvas margin.
pub fn minimize_layout(p: &LayoutProblem, cfg: &LayoutConfig) -> Result<LayoutResult, LayoutError> {
    cfg.validate()?;
    let n = p.ids.len();
    let dist = all_pairs_shortest_paths(n, &p.edges);
    let l = desired_lengths(&dist, &p.rects, cfg);
    let k = spring_constants(&dist, cfg);
    let runs: Vec<RestartRun> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = (0..n)
                .map(|_| (rng.random_range(0.0..cfg.diameter), rng.random_range(0.0..cfg.diameter)))
                .collect();
            descend(start, &l, &k, cfg, seed)
        })
        .collect();
    let best = (0..runs.len())
        .min_by(|&a, &b| runs[a].final_cost.total_cmp(&runs[b].final_cost).then(a.cmp(&b)))
        .expect("at least one restart");
    let pos = &runs[best].positions;

    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (p, r) in pos.iter().zip(&p.rects) {
        x0 = x0.min(p.0 - r.width / 2.0);
        y0 = y0.min(p.1 - r.height / 2.0);
        x1 = x1.max(p.0 + r.width / 2.0);
        y1 = y1.max(p.1 + r.height / 2.0);
    }
    let (width, height, dx, dy) = if n == 0 {
        (2.0 * cfg.margin, 2.0 * cfg.margin, 0.0, 0.0)
    } else {
        (x1 - x0 + 2.0 * cfg.margin, y1 - y0 + 2.0 * cfg.margin, cfg.margin - x0, cfg.margin - y0)
    };
    Ok(LayoutResult {
        positions: p.ids.iter().cloned().zip(pos.iter().map(|(x, y)| (x + dx, y + dy))).collect(),
        cost: runs[best].final_cost,
        restart_index: best,
        width,
        height,
        runs,
    })
}

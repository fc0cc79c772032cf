//! Reference computations for the acceptance suite, written from the
//! definitions and sharing no code with the engine.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use mindmap_core::{FrameId, MeaningGraph, Ontology, WeightConfig};

/// Entity weight as a sum over every relation in the graph.
pub fn entity_weights(g: &MeaningGraph, cfg: &WeightConfig) -> BTreeMap<FrameId, f64> {
    let mut out = BTreeMap::new();
    for f in g.frames.values().filter(|f| f.is_entity()) {
        let mut w = 0.0;
        for r in &g.relations {
            if r.from == f.id || r.to == f.id {
                w += cfg.constants.get(&r.kind).copied().unwrap_or(0.0);
            }
        }
        out.insert(f.id.clone(), w);
    }
    out
}

/// Action weights from the linear system `(I - A) x = b`, solved by
/// Gaussian elimination with partial pivoting.
pub fn action_weights(g: &MeaningGraph, entity: &BTreeMap<FrameId, f64>, cfg: &WeightConfig) -> BTreeMap<FrameId, f64> {
    let actions: Vec<&FrameId> = g.frames.values().filter(|f| f.is_action()).map(|f| &f.id).collect();
    let n = actions.len();
    let pos = |id: &FrameId| actions.iter().position(|a| *a == id);
    let mut m = vec![vec![0.0; n + 1]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for r in &g.relations {
        let ratio = cfg.ratios.get(&r.kind).copied().unwrap_or(0.0);
        for (me, other) in [(&r.from, &r.to), (&r.to, &r.from)] {
            let Some(i) = pos(me) else { continue };
            match pos(other) {
                Some(j) => m[i][j] -= ratio,
                None => m[i][n] += ratio * entity.get(other).copied().unwrap_or(0.0),
            }
        }
    }
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    actions.iter().enumerate().map(|(i, id)| ((*id).clone(), m[i][n] / m[i][i])).collect()
}

/// Exact 1-D k-means cost: optimal contiguous segmentation of the sorted
/// values, with segment costs from prefix sums.
pub fn kmeans_optimum(values: &[f64], k: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let seg = |i: usize, j: usize| -> f64 {
        let s = &v[i..j];
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|x| (x - mean) * (x - mean)).sum()
    };
    let mut best = vec![f64::INFINITY; n + 1];
    best[0] = 0.0;
    for _ in 0..k {
        let mut next = vec![f64::INFINITY; n + 1];
        for j in 1..=n {
            for i in 0..j {
                if best[i].is_finite() {
                    next[j] = next[j].min(best[i] + seg(i, j));
                }
            }
        }
        best = next;
    }
    best[n]
}

/// Hop counts by breadth-first search from every node.
pub fn bfs_hops(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<u32>>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|s| {
            let mut d = vec![None; n];
            d[s] = Some(0);
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if d[v].is_none() {
                        d[v] = Some(d[u].unwrap() + 1);
                        q.push_back(v);
                    }
                }
            }
            d
        })
        .collect()
}

pub struct SpringParams {
    pub l: f64,
    pub diameter: f64,
}

/// Spring energy of a placement, computed from the graph, the rectangles
/// and the two length parameters.
pub fn spring_energy(pos: &[(f64, f64)], edges: &[(usize, usize)], rects: &[(f64, f64)], p: &SpringParams) -> f64 {
    let n = pos.len();
    let hops = bfs_hops(n, edges);
    let longest = hops.iter().flatten().flatten().copied().max().unwrap_or(0);
    let norm = f64::from(longest.max(1));
    let m = |i: usize| (rects[i].0 * rects[i].0 + rects[i].1 * rects[i].1).sqrt();
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j <= i {
                continue;
            }
            let (rest, span) = match hops[i][j] {
                Some(1) => (p.l, p.l),
                Some(d) => (p.diameter * f64::from(d) / norm, p.l * f64::from(d)),
                None => (p.diameter, p.l * f64::from(longest + 1)),
            };
            let rest = rest + (m(i) + m(j)) / 2.0;
            let k = 1.0 / (span * span);
            let r = (pos[i].0 - pos[j].0).hypot(pos[i].1 - pos[j].1);
            e += k * (r - rest) * (r - rest);
        }
    }
    e
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn finite_difference(f: impl Fn(&[(f64, f64)]) -> f64, x: &[(f64, f64)], h: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let mut g = [0.0; 2];
        for (c, gc) in g.iter_mut().enumerate() {
            let orig = y[i];
            let bump = |p: &mut (f64, f64), d: f64| if c == 0 { p.0 += d } else { p.1 += d };
            bump(&mut y[i], h);
            let up = f(&y);
            y[i] = orig;
            bump(&mut y[i], -h);
            let down = f(&y);
            y[i] = orig;
            *gc = (up - down) / (2.0 * h);
        }
        out.push((g[0], g[1]));
    }
    out
}

/// Representative of an oracle group: a concept id or the virtual top.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rep {
    Top,
    Concept(String),
}

/// Concept partition by exhaustive search over pairs each round.
///
/// Distances are breadth-first hops in the undirected hierarchy with a
/// virtual node joined to every root. Ties: distance, then the two
/// representative ids (the virtual node sorts as ""), then the two smallest
/// member ids.
pub fn concept_partition(frames: &[(FrameId, String)], o: &Ontology, g_th: usize) -> Vec<(Rep, Vec<FrameId>)> {
    const TOP: &str = "";
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for c in o.concepts() {
        let up = c.parent.as_deref().unwrap_or(TOP);
        adj.entry(&c.id).or_default().push(up);
        adj.entry(up).or_default().push(&c.id);
    }
    let hops = |a: &str, b: &str| -> u32 {
        let mut seen = BTreeMap::from([(a, 0u32)]);
        let mut q = VecDeque::from([a]);
        while let Some(u) = q.pop_front() {
            if u == b {
                return seen[u];
            }
            for &v in &adj[u] {
                if !seen.contains_key(v) {
                    seen.insert(v, seen[u] + 1);
                    q.push_back(v);
                }
            }
        }
        unreachable!("hierarchy is connected through the virtual node")
    };
    let ancestors = |a: &str| -> Vec<String> {
        let mut out = vec![a.to_string()];
        let mut at = a;
        while let Some(p) = o.concepts().iter().find(|c| c.id == at).and_then(|c| c.parent.as_deref()) {
            out.push(p.to_string());
            at = p;
        }
        out
    };
    let key = |r: &Rep| match r {
        Rep::Top => TOP.to_string(),
        Rep::Concept(c) => c.clone(),
    };

    let mut groups: Vec<(Rep, BTreeSet<FrameId>)> = Vec::new();
    for (id, c) in frames {
        let rep = Rep::Concept(c.clone());
        match groups.iter_mut().find(|g| g.0 == rep) {
            Some(g) => {
                g.1.insert(id.clone());
            }
            None => groups.push((rep, BTreeSet::from([id.clone()]))),
        }
    }
    while groups.len() > g_th {
        let mut candidates = Vec::new();
        for (i, a) in groups.iter().enumerate() {
            for (j, b) in groups.iter().enumerate().skip(i + 1) {
                let (ka, kb) = (key(&a.0), key(&b.0));
                let d = hops(&ka, &kb);
                let (ma, mb) = (a.1.first().unwrap().clone(), b.1.first().unwrap().clone());
                candidates.push(((d, ka.clone().min(kb.clone()), ka.max(kb), ma.clone().min(mb.clone()), ma.max(mb)), i, j));
            }
        }
        candidates.sort();
        let (_, i, j) = candidates.remove(0);
        let (rb, mb) = groups.remove(j);
        let rep = match (&groups[i].0, &rb) {
            (Rep::Concept(x), Rep::Concept(y)) => {
                let ay = ancestors(y);
                ancestors(x).into_iter().find(|c| ay.contains(c)).map_or(Rep::Top, Rep::Concept)
            }
            _ => Rep::Top,
        };
        groups[i].0 = rep;
        groups[i].1.extend(mb);
    }
    let mut out: Vec<(Rep, Vec<FrameId>)> = groups.into_iter().map(|(r, m)| (r, m.into_iter().collect())).collect();
    out.sort_by(|a, b| a.1[0].cmp(&b.1[0]));
    out
}

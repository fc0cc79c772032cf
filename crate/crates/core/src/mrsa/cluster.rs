use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MrsaError;
use crate::graph::FrameId;

const MAX_LLOYD_ROUNDS: usize = 300;

/// A 1-D k-means result. `assignment[i]` indexes `centers`.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centers: Vec<f64>,
    pub assignment: Vec<usize>,
}

impl Clustering {
    /// Sum of squared distances to assigned centers.
    pub fn cost(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.assignment).map(|(x, &c)| (x - self.centers[c]).powi(2)).sum()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment.iter().enumerate().filter(move |(_, &c)| c == cluster).map(|(i, _)| i)
    }
}

fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, c) in centers.iter().enumerate().skip(1) {
        if (x - c).powi(2) < (x - centers[best]).powi(2) {
            best = i;
        }
    }
    best
}

/// K-means++ seeding followed by Lloyd iterations until assignments settle.
pub fn cluster_1d(values: &[f64], k: usize, seed: u64) -> Result<Clustering, MrsaError> {
    if k == 0 || k > values.len() {
        return Err(MrsaError::ClusterCount { k, n: values.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![values[rng.random_range(0..values.len())]];
    while centers.len() < k {
        let d2: Vec<f64> = values.iter().map(|&x| (x - centers[nearest(&centers, x)]).powi(2)).collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random_range(0.0..total);
            let mut chosen = d2.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if r < *d {
                    chosen = i;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            rng.random_range(0..values.len())
        };
        centers.push(values[pick]);
    }

    let mut assignment: Vec<usize> = values.iter().map(|&x| nearest(&centers, x)).collect();
    for _ in 0..MAX_LLOYD_ROUNDS {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in values.iter().zip(&assignment) {
            sums[c] += x;
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c] / counts[c] as f64;
            } else {
                // Re-seed at the point farthest from its current center.
                let far = (0..values.len())
                    .max_by(|&i, &j| {
                        let di = (values[i] - centers[assignment[i]]).abs();
                        let dj = (values[j] - centers[assignment[j]]).abs();
                        di.total_cmp(&dj).then(j.cmp(&i))
                    })
                    .unwrap();
                centers[c] = values[far];
                assignment[far] = c;
            }
        }
        let next: Vec<usize> = values.iter().map(|&x| nearest(&centers, x)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(Clustering { centers, assignment })
}

/// Lowest-cost clustering over seeds `base..base + seeds`.
pub fn cluster_1d_best(values: &[f64], k: usize, seeds: usize, base: u64) -> Result<Clustering, MrsaError> {
    let mut best: Option<(f64, Clustering)> = None;
    for s in 0..seeds.max(1) as u64 {
        let c = cluster_1d(values, k, base.wrapping_add(s))?;
        let cost = c.cost(values);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, c));
        }
    }
    Ok(best.unwrap().1)
}

/// Ray-Turi quantities: mean squared distance to the assigned center, and
/// the smallest squared distance between two centers.
pub fn ray_turi(values: &[f64], c: &Clustering) -> (f64, f64) {
    let intra = c.cost(values) / values.len() as f64;
    let mut inter = f64::INFINITY;
    for i in 0..c.centers.len() {
        for j in i + 1..c.centers.len() {
            inter = inter.min((c.centers[i] - c.centers[j]).powi(2));
        }
    }
    (intra, inter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MainSelection {
    pub main: BTreeSet<FrameId>,
    /// Chosen cluster count; `None` when the input was too small to cluster.
    pub k: Option<usize>,
    pub validity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub max_k: usize,
    pub seeds: usize,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            max_k: 6,
            seeds: 20,
            seed: 0,
        }
    }
}

/// Frames in the highest-center cluster, with K picked over
/// `2..=min(max_k, n - 1)` by the smallest intra/inter ratio.
pub fn select_main_frames(weights: &BTreeMap<FrameId, f64>, cfg: &SelectionConfig) -> MainSelection {
    let ids: Vec<&FrameId> = weights.keys().collect();
    let values: Vec<f64> = weights.values().copied().collect();
    let n = values.len();
    let all = || ids.iter().map(|id| (*id).clone()).collect::<BTreeSet<_>>();
    if n <= 1 {
        return MainSelection {
            main: all(),
            k: None,
            validity: None,
        };
    }
    if n == 2 {
        let main = if values[0] == values[1] {
            all()
        } else {
            let top = if values[0] > values[1] { 0 } else { 1 };
            BTreeSet::from([ids[top].clone()])
        };
        return MainSelection {
            main,
            k: None,
            validity: None,
        };
    }

    let mut best: Option<(f64, usize, Clustering)> = None;
    for k in 2..=cfg.max_k.min(n - 1) {
        let Ok(c) = cluster_1d_best(&values, k, cfg.seeds, cfg.seed) else {
            continue;
        };
        let (intra, inter) = ray_turi(&values, &c);
        if !(inter > 0.0) {
            continue;
        }
        let ratio = intra / inter;
        if best.as_ref().is_none_or(|(b, _, _)| ratio < *b) {
            best = Some((ratio, k, c));
        }
    }
    match best {
        Some((ratio, k, c)) => {
            let top = (0..c.centers.len())
                .max_by(|&i, &j| c.centers[i].total_cmp(&c.centers[j]).then(j.cmp(&i)))
                .unwrap();
            MainSelection {
                main: c.members(top).map(|i| ids[i].clone()).collect(),
                k: Some(k),
                validity: Some(ratio),
            }
        }
        None => MainSelection {
            main: all(),
            k: None,
            validity: None,
        },
    }
}

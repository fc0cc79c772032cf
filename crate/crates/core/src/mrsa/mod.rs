//! Summarization of a meaning representation: frame weights, main-frame
//! selection by 1-D clustering, and concept-based grouping.

mod cluster;
mod partition;
mod summarize;
mod weights;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cluster::{cluster_1d, cluster_1d_best, ray_turi, select_main_frames, Clustering, MainSelection, SelectionConfig};
pub use partition::{concept_partition, ConceptGroup, Representative, SUPER_ROOT_LABEL};
pub use summarize::{structural_signature, summarize, DmrRegion, SummarizedMr};
pub use weights::{assign_action_weights, assign_entity_weights, ActionWeights, WeightConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MrsaError {
    #[error("cannot summarize an empty meaning representation")]
    EmptyGraph,
    #[error("cannot form {k} clusters from {n} values")]
    ClusterCount { k: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummarizeConfig {
    pub weights: WeightConfig,
    /// Group-count threshold for concept partitioning.
    pub g_th: usize,
    pub max_k: usize,
    pub kmeans_seeds: usize,
    pub seed: u64,
}

impl Default for SummarizeConfig {
    fn default() -> Self {
        Self {
            weights: WeightConfig::default(),
            g_th: 6,
            max_k: 6,
            kmeans_seeds: 20,
            seed: 0,
        }
    }
}

impl SummarizeConfig {
    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            max_k: self.max_k,
            seeds: self.kmeans_seeds,
            seed: self.seed,
        }
    }
}

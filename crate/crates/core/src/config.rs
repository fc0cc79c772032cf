//! Run configuration: one JSON file with a section per stage. Missing
//! sections and fields take their defaults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::LayoutConfig;
use crate::mlmr::MlmrConfig;
use crate::render::RenderConfig;
use crate::visual_query::QueryConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub mlmr: MlmrConfig,
    pub query: QueryConfig,
    pub layout: LayoutConfig,
    pub render: RenderConfig,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed config at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ConfigError> {
        let c: Config = serde_json::from_slice(bytes).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        c.validate()?;
        Ok(c)
    }

    /// Seeds every random stage from one value.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mlmr.summarize.seed = seed;
        self.layout.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Err(m) = self.mlmr.summarize.weights.validate() {
            return bad(m);
        }
        if self.mlmr.summarize.g_th == 0 {
            return bad("g_th must be at least 1".into());
        }
        if self.mlmr.summarize.max_k < 2 {
            return bad("max_k must be at least 2".into());
        }
        if self.mlmr.max_depth == 0 {
            return bad("max_depth must be at least 1".into());
        }
        if let Err(e) = self.query.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.layout.validate() {
            return bad(e.to_string());
        }
        let r = &self.render;
        if !(r.small_px > 0.0 && r.medium_px > 0.0 && r.char_width > 0.0 && r.text_height > 0.0) {
            return bad("render sizes must be positive".into());
        }
        Ok(())
    }
}

//! Image-search queries for visual frames, image providers and the on-disk
//! result cache.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{Frame, FrameId, MeaningGraph};
use crate::ontology::Ontology;

pub const ENDPOINT_ENV: &str = "MINDMAP_IMAGE_ENDPOINT";
pub const API_KEY_ENV: &str = "MINDMAP_IMAGE_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    #[default]
    Direct,
    ConceptCombination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeFilter {
    #[default]
    All,
    ClipArt,
    LineArt,
}

impl TypeFilter {
    pub fn name(self) -> &'static str {
        match self {
            TypeFilter::All => "all",
            TypeFilter::ClipArt => "clipart",
            TypeFilter::LineArt => "lineart",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeMode {
    All,
    #[default]
    Auto,
    Small,
}

impl SizeMode {
    pub fn name(self) -> &'static str {
        match self {
            SizeMode::All => "all",
            SizeMode::Auto => "auto",
            SizeMode::Small => "small",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryConfig {
    pub mode: QueryMode,
    /// A neighbor contextualizes a frame when its weight exceeds the frame's
    /// by more than this factor.
    pub th: f64,
    pub type_filter: TypeFilter,
    pub size_mode: SizeMode,
    pub auto_relation_threshold: usize,
}

impl Default for QueryConfig {
    fn default() -> Self {
        Self {
            mode: QueryMode::Direct,
            th: 6.0,
            type_filter: TypeFilter::All,
            size_mode: SizeMode::Auto,
            auto_relation_threshold: 6,
        }
    }
}

impl QueryConfig {
    pub fn validate(&self) -> Result<(), QueryError> {
        if self.th > 0.0 && self.th.is_finite() {
            Ok(())
        } else {
            Err(QueryError::InvalidThreshold(self.th))
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("frame `{0}` is not visual")]
    NotVisual(FrameId),
    #[error("frame `{0}` is not in the meaning representation")]
    UnknownFrame(FrameId),
    #[error("relative-importance threshold must be positive, got {0}")]
    InvalidThreshold(f64),
}

pub fn is_visual_frame(frame: &Frame, o: &Ontology) -> bool {
    frame.concept.as_deref().is_some_and(|c| o.is_visual(c))
}

/// Attribute values (size, then color, then the rest by kind and value)
/// followed by the surface, lowercased.
pub fn generate_direct_query(frame: &Frame, o: &Ontology) -> Result<String, QueryError> {
    if !is_visual_frame(frame, o) {
        return Err(QueryError::NotVisual(frame.id.clone()));
    }
    let rank = |kind: &str| match kind {
        "size" => 0,
        "color" => 1,
        _ => 2,
    };
    let mut attrs: Vec<_> = frame.attributes.iter().collect();
    attrs.sort_by(|a, b| (rank(&a.kind), &a.kind, &a.value).cmp(&(rank(&b.kind), &b.kind, &b.value)));
    let mut words: Vec<&str> = attrs.iter().map(|a| a.value.as_str()).collect();
    words.push(&frame.surface);
    Ok(words.join(" ").to_lowercase())
}

/// The direct query prefixed by up to two entity frames within two edges
/// whose weight is more than `th` times the frame's own, heaviest first.
pub fn generate_cc_query(
    frame: &FrameId,
    mr: &MeaningGraph,
    weights: &BTreeMap<FrameId, f64>,
    o: &Ontology,
    cfg: &QueryConfig,
) -> Result<String, QueryError> {
    let f = mr.frame(frame).ok_or_else(|| QueryError::UnknownFrame(frame.clone()))?;
    let direct = generate_direct_query(f, o)?;
    let wi = weights.get(frame).copied().unwrap_or(0.0);
    let mut context: Vec<(f64, &Frame)> = mr
        .hops_from(frame, 2)
        .into_iter()
        .filter(|(id, hops)| *hops > 0 && id != frame)
        .filter_map(|(id, _)| {
            let j = mr.frame(&id)?;
            let wj = weights.get(&id).copied().unwrap_or(0.0);
            (j.is_entity() && wj > cfg.th * wi && wj > 0.0).then_some((wj, j))
        })
        .collect();
    context.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
    let mut names: Vec<String> = Vec::new();
    for (_, j) in context {
        let name = j.surface.to_lowercase();
        if !names.contains(&name) && !direct.split(' ').any(|w| w == name) {
            names.push(name);
        }
        if names.len() == 2 {
            break;
        }
    }
    names.push(direct);
    Ok(names.join(" "))
}

pub fn generate_query(
    frame: &FrameId,
    mr: &MeaningGraph,
    weights: &BTreeMap<FrameId, f64>,
    o: &Ontology,
    cfg: &QueryConfig,
) -> Result<String, QueryError> {
    match cfg.mode {
        QueryMode::Direct => {
            let f = mr.frame(frame).ok_or_else(|| QueryError::UnknownFrame(frame.clone()))?;
            generate_direct_query(f, o)
        }
        QueryMode::ConceptCombination => generate_cc_query(frame, mr, weights, o, cfg),
    }
}

/// Medium when more than `auto_relation_threshold` relations touch the frame.
pub fn auto_size(frame: &FrameId, mr: &MeaningGraph, cfg: &QueryConfig) -> SizeClass {
    if mr.degree(frame) > cfg.auto_relation_threshold {
        SizeClass::Medium
    } else {
        SizeClass::Small
    }
}

/// Display size under the configured size mode.
pub fn display_size(frame: &FrameId, mr: &MeaningGraph, cfg: &QueryConfig) -> SizeClass {
    match cfg.size_mode {
        SizeMode::All => SizeClass::Medium,
        SizeMode::Small => SizeClass::Small,
        SizeMode::Auto => auto_size(frame, mr, cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub query: String,
    pub uri: String,
    pub width: u32,
    pub height: u32,
    pub provider: String,
    #[serde(default)]
    pub missing: bool,
}

impl ImageRef {
    pub fn placeholder(query: &str, provider: &str) -> Self {
        Self {
            query: query.to_string(),
            uri: String::new(),
            width: 1,
            height: 1,
            provider: provider.to_string(),
            missing: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("image provider `{provider}` is unreachable: {message}; check {ENDPOINT_ENV} and retry")]
    Unreachable { provider: String, message: String },
    #[error("image provider `{provider}` returned an unusable response: {message}")]
    BadResponse { provider: String, message: String },
    #[error("image provider is not configured: set {0}")]
    NotConfigured(&'static str),
    #[error("invalid image endpoint: {0}")]
    BadEndpoint(String),
    #[error("image manifest: {0}")]
    Manifest(String),
    #[error("image cache at {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A search backend. Results are in rank order and already honor the
/// filters as far as the backend can.
pub trait ImageProvider: Send + Sync {
    fn tag(&self) -> &str;
    fn search(&self, query: &str, type_filter: TypeFilter, size: SizeMode) -> Result<Vec<ImageRef>, FetchError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub image_type: Option<TypeFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<SizeClass>,
}

impl ManifestEntry {
    /// Declared size, or Small when neither side exceeds 128 pixels.
    pub fn size_class(&self) -> SizeClass {
        self.size.unwrap_or(if self.width.max(self.height) <= 128 {
            SizeClass::Small
        } else {
            SizeClass::Medium
        })
    }
}

/// Offline provider: a JSON map from query string to one entry or a ranked
/// list of entries. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, Default)]
pub struct ManifestProvider {
    entries: BTreeMap<String, Vec<ManifestEntry>>,
    base: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(ManifestEntry),
    Many(Vec<ManifestEntry>),
}

impl ManifestProvider {
    pub fn from_json(bytes: &[u8]) -> Result<Self, FetchError> {
        let raw: BTreeMap<String, OneOrMany> = serde_json::from_slice(bytes).map_err(|e| FetchError::Manifest(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (q, v) in raw {
            let list = match v {
                OneOrMany::One(e) => vec![e],
                OneOrMany::Many(l) => l,
            };
            if let Some(bad) = list.iter().find(|e| e.width == 0 || e.height == 0) {
                return Err(FetchError::Manifest(format!("`{q}` -> {} has a zero dimension", bad.path)));
            }
            entries.insert(q.to_lowercase(), list);
        }
        Ok(Self { entries, base: None })
    }

    pub fn load(path: &Path) -> Result<Self, FetchError> {
        let bytes = fs::read(path).map_err(|e| FetchError::Manifest(format!("{}: {e}", path.display())))?;
        let mut m = Self::from_json(&bytes)?;
        m.base = path.parent().map(Path::to_path_buf);
        Ok(m)
    }

    fn resolve(&self, p: &str) -> String {
        match &self.base {
            Some(b) if Path::new(p).is_relative() => b.join(p).to_string_lossy().into_owned(),
            _ => p.to_string(),
        }
    }
}

impl ImageProvider for ManifestProvider {
    fn tag(&self) -> &str {
        "manifest"
    }

    fn search(&self, query: &str, type_filter: TypeFilter, size: SizeMode) -> Result<Vec<ImageRef>, FetchError> {
        let Some(list) = self.entries.get(&query.to_lowercase()) else {
            return Ok(vec![]);
        };
        Ok(list
            .iter()
            .filter(|e| type_filter == TypeFilter::All || e.image_type == Some(type_filter))
            .filter(|e| size != SizeMode::Small || e.size_class() == SizeClass::Small)
            .map(|e| ImageRef {
                query: query.to_string(),
                uri: self.resolve(&e.path),
                width: e.width,
                height: e.height,
                provider: self.tag().to_string(),
                missing: false,
            })
            .collect())
    }
}

/// Generic JSON image-search client. Sends `GET {endpoint}?q=..&type=..&size=..`
/// with the key in `key` when set, and expects
/// `{"results": [{"url": .., "width": .., "height": ..}, ..]}`.
pub struct HttpProvider {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct HttpResults {
    results: Vec<HttpResult>,
}

#[derive(Deserialize)]
struct HttpResult {
    url: String,
    width: u32,
    height: u32,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key,
            client: reqwest::blocking::Client::builder()
                .timeout(std::time::Duration::from_secs(20))
                .build()
                .expect("default TLS backend is available"),
        }
    }

    pub fn from_env() -> Result<Self, FetchError> {
        let endpoint = std::env::var(ENDPOINT_ENV).map_err(|_| FetchError::NotConfigured(ENDPOINT_ENV))?;
        Ok(Self::new(endpoint, std::env::var(API_KEY_ENV).ok()))
    }
}

impl ImageProvider for HttpProvider {
    fn tag(&self) -> &str {
        "http"
    }

    fn search(&self, query: &str, type_filter: TypeFilter, size: SizeMode) -> Result<Vec<ImageRef>, FetchError> {
        let mut params = vec![("q", query), ("type", type_filter.name()), ("size", size.name())];
        if let Some(k) = &self.api_key {
            params.push(("key", k));
        }
        let unreachable = |e: reqwest::Error| FetchError::Unreachable {
            provider: self.endpoint.clone(),
            message: e.to_string(),
        };
        let url = reqwest::Url::parse_with_params(&self.endpoint, &params).map_err(|e| FetchError::BadEndpoint(e.to_string()))?;
        let resp = self.client.get(url).send().and_then(|r| r.error_for_status()).map_err(unreachable)?;
        let body: HttpResults = resp.json().map_err(|e| FetchError::BadResponse {
            provider: self.endpoint.clone(),
            message: e.to_string(),
        })?;
        Ok(body
            .results
            .into_iter()
            .filter(|r| r.width > 0 && r.height > 0)
            .map(|r| ImageRef {
                query: query.to_string(),
                uri: r.url,
                width: r.width,
                height: r.height,
                provider: self.tag().to_string(),
                missing: false,
            })
            .collect())
    }
}

/// Wraps a provider and counts calls to it.
pub struct CountingProvider<P> {
    pub inner: P,
    calls: AtomicUsize,
}

impl<P> CountingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: ImageProvider> ImageProvider for CountingProvider<P> {
    fn tag(&self) -> &str {
        self.inner.tag()
    }

    fn search(&self, query: &str, type_filter: TypeFilter, size: SizeMode) -> Result<Vec<ImageRef>, FetchError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.search(query, type_filter, size)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub query: String,
    pub type_filter: TypeFilter,
    pub size: SizeMode,
}

impl CacheKey {
    fn file_stem(&self) -> String {
        let canonical = serde_json::to_string(self).expect("key serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: CacheKey,
    image: ImageRef,
}

/// One JSON file per key, named by the key's SHA-256, plus `index.json`
/// mapping file stems to keys. Every write goes through a temporary file
/// and a rename.
#[derive(Debug, Clone)]
pub struct ImageCache {
    dir: PathBuf,
}

impl ImageCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, FetchError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| FetchError::Cache { path: dir.clone(), source })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, key: &CacheKey) -> Option<ImageRef> {
        let bytes = fs::read(self.dir.join(format!("{}.json", key.file_stem()))).ok()?;
        let rec: CacheRecord = serde_json::from_slice(&bytes).ok()?;
        (rec.key == *key).then_some(rec.image)
    }

    pub fn put(&self, key: &CacheKey, image: &ImageRef) -> Result<(), FetchError> {
        let stem = key.file_stem();
        let rec = CacheRecord {
            key: key.clone(),
            image: image.clone(),
        };
        self.write_atomic(&format!("{stem}.json"), &serde_json::to_vec_pretty(&rec).expect("record serializes"))?;
        let index_path = self.dir.join("index.json");
        let mut index: BTreeMap<String, CacheKey> = fs::read(&index_path)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default();
        index.insert(stem, key.clone());
        self.write_atomic("index.json", &serde_json::to_vec_pretty(&index).expect("index serializes"))
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<(), FetchError> {
        let err = |source| FetchError::Cache {
            path: self.dir.join(name),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        tmp.write_all(bytes).map_err(err)?;
        tmp.persist(self.dir.join(name)).map_err(|e| err(e.error))?;
        Ok(())
    }
}

/// First provider result for the triple, or a missing placeholder. A cache
/// hit skips the provider.
pub fn fetch_image(
    provider: &dyn ImageProvider,
    cache: Option<&ImageCache>,
    query: &str,
    type_filter: TypeFilter,
    size: SizeMode,
) -> Result<ImageRef, FetchError> {
    let key = CacheKey {
        query: query.to_string(),
        type_filter,
        size,
    };
    if let Some(hit) = cache.and_then(|c| c.get(&key)) {
        return Ok(hit);
    }
    let image = provider
        .search(query, type_filter, size)?
        .into_iter()
        .next()
        .unwrap_or_else(|| ImageRef::placeholder(query, provider.tag()));
    if let Some(c) = cache {
        c.put(&key, &image)?;
    }
    Ok(image)
}

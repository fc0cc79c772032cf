//! File-backed storage for uploaded documents and navigation sessions.
//!
//! Layout under the root directory: `documents/{id}.json` holds the SEPT
//! bytes as uploaded, `sessions/{id}.json` one [`StoredSession`]. A session
//! record that fails to parse is renamed to `{id}.corrupt` and reported as
//! unrecoverable from then on.

use std::collections::BTreeMap;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mindmap_core::{Config, Scene, Session};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no record `{0}`")]
    NotFound(String),
    #[error("session `{0}` is corrupt and cannot be recovered")]
    Unrecoverable(String),
    #[error("{path}: {1}", path = .0.display())]
    Io(PathBuf, #[source] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSession {
    pub session_id: String,
    pub document_id: String,
    pub config: Config,
    pub state: Session,
    /// Scenes already drawn, keyed by group-frame path joined with `/`.
    #[serde(default)]
    pub scenes: BTreeMap<String, CachedScene>,
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedScene {
    pub scene: Scene,
    pub svg: String,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Content-derived document id: the first 16 hex digits of the SHA-256.
pub fn document_id(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for sub in ["documents", "sessions"] {
            let d = root.join(sub);
            fs::create_dir_all(&d).map_err(|e| StoreError::Io(d, e))?;
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, kind: &str, id: &str, ext: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound(id.to_string()));
        }
        Ok(self.root.join(kind).join(format!("{id}.{ext}")))
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let dir = path.parent().expect("store paths have a parent");
        let io = |e| StoreError::Io(path.to_path_buf(), e);
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn put_document(&self, bytes: &[u8]) -> Result<String, StoreError> {
        let id = document_id(bytes);
        let path = self.path("documents", &id, "json")?;
        if !path.exists() {
            self.write_atomic(&path, bytes)?;
        }
        Ok(id)
    }

    pub fn document(&self, id: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.path("documents", id, "json")?;
        fs::read(&path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => StoreError::NotFound(id.to_string()),
            _ => StoreError::Io(path, e),
        })
    }

    pub fn persist(&self, s: &StoredSession) -> Result<(), StoreError> {
        let path = self.path("sessions", &s.session_id, "json")?;
        self.write_atomic(&path, &serde_json::to_vec(s).expect("session serializes"))
    }

    pub fn load(&self, id: &str) -> Result<StoredSession, StoreError> {
        let path = self.path("sessions", id, "json")?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(if self.path("sessions", id, "corrupt")?.exists() {
                    StoreError::Unrecoverable(id.to_string())
                } else {
                    StoreError::NotFound(id.to_string())
                });
            }
            Err(e) => return Err(StoreError::Io(path, e)),
        };
        match serde_json::from_slice::<StoredSession>(&bytes) {
            Ok(s) if s.session_id == id => Ok(s),
            _ => {
                let corrupt = self.path("sessions", id, "corrupt")?;
                fs::rename(&path, &corrupt).map_err(|e| StoreError::Io(path, e))?;
                log::error!("session {id} failed to load; kept as {}", corrupt.display());
                Err(StoreError::Unrecoverable(id.to_string()))
            }
        }
    }
}

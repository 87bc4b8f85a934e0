//! Content-addressed response cache.
//!
//! Keys are collision-resistant digests over the full request identity.
//! Values are the replies of deterministic backends, so a duplicated
//! concurrent miss is a benign race: both writers store the same value.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::RwLock;

use sha2::{Digest, Sha256};

use super::{BackendError, CompletionReply, CompletionRequest};

/// Digest over (backend_id, model_id, rendered_prompt, temperature, seed,
/// max_tokens). Strings are length-prefixed so field boundaries cannot
/// collide; temperature hashes by bit pattern.
pub fn cache_key(request: &CompletionRequest) -> String {
    let mut hasher = Sha256::new();
    for field in [
        request.backend_id.as_str(),
        request.model_id.as_str(),
        request.rendered_prompt.as_str(),
    ] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hasher.update(request.temperature.to_bits().to_le_bytes());
    hasher.update(request.seed.to_le_bytes());
    hasher.update(u64::from(request.max_tokens).to_le_bytes());
    hex_encode(&hasher.finalize())
}

fn hex_encode(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub struct CacheStore {
    mem: RwLock<HashMap<String, CompletionReply>>,
    dir: Option<PathBuf>,
}

impl CacheStore {
    pub fn in_memory() -> Self {
        CacheStore {
            mem: RwLock::new(HashMap::new()),
            dir: None,
        }
    }

    /// Persistent cache under `dir` (typically `<run_dir>/cache`).
    pub fn persistent(dir: PathBuf) -> Result<Self, BackendError> {
        std::fs::create_dir_all(&dir)?;
        Ok(CacheStore {
            mem: RwLock::new(HashMap::new()),
            dir: Some(dir),
        })
    }

    fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(&key[..2]).join(format!("{key}.json")))
    }

    pub fn get(&self, key: &str) -> Result<Option<CompletionReply>, BackendError> {
        if let Some(hit) = self.mem.read().unwrap().get(key) {
            return Ok(Some(hit.clone()));
        }
        if let Some(path) = self.path_for(key) {
            if path.exists() {
                let text = std::fs::read_to_string(&path)?;
                let reply: CompletionReply = serde_json::from_str(&text)
                    .map_err(|e| BackendError::Protocol(format!("corrupt cache entry {key}: {e}")))?;
                self.mem.write().unwrap().insert(key.to_owned(), reply.clone());
                return Ok(Some(reply));
            }
        }
        Ok(None)
    }

    pub fn put(&self, key: &str, reply: &CompletionReply) -> Result<(), BackendError> {
        let mut stored = reply.clone();
        stored.cached = false;
        if let Some(path) = self.path_for(key) {
            std::fs::create_dir_all(path.parent().unwrap())?;
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, serde_json::to_string(&stored).unwrap())?;
            std::fs::rename(&tmp, &path)?;
        }
        self.mem.write().unwrap().insert(key.to_owned(), stored);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mem.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

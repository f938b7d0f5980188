use std::fmt;
use std::num::NonZeroUsize;

use lru::LruCache;
use parking_lot::Mutex;
use sha2::{Digest, Sha256};

use super::GateDecision;
use crate::corpus::normalize_text;

/// Digest identifying one gate outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey([u8; 32]);

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// NFC, then runs of whitespace collapsed to one space and ends trimmed.
pub fn normalize_for_key(text: &str) -> String {
    normalize_text(text).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Everything a cached decision depends on besides the texts.
#[derive(Debug, Clone, Copy)]
pub struct KeyContext<'a> {
    pub backend_id: &'a str,
    pub threshold: f64,
    pub model_version: &'a str,
}

pub fn cache_key(query: &str, context: &str, downstream: Option<&str>, ctx: KeyContext<'_>) -> CacheKey {
    let mut h = Sha256::new();
    let mut field = |bytes: &[u8]| {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    field(normalize_for_key(query).as_bytes());
    field(normalize_for_key(context).as_bytes());
    field(ctx.backend_id.as_bytes());
    field(&ctx.threshold.to_bits().to_le_bytes());
    field(ctx.model_version.as_bytes());
    match downstream {
        Some(d) => field(format!("1{d}").as_bytes()),
        None => field(b"0"),
    }
    CacheKey(h.finalize().into())
}

/// Bounded LRU of finished decisions. Concurrent inserts for one key are
/// last-writer-wins.
pub struct DecisionCache {
    inner: Mutex<LruCache<CacheKey, GateDecision>>,
}

impl DecisionCache {
    pub fn new(capacity: NonZeroUsize) -> Self {
        DecisionCache {
            inner: Mutex::new(LruCache::new(capacity)),
        }
    }

    pub fn get(&self, key: &CacheKey) -> Option<GateDecision> {
        self.inner.lock().get(key).cloned()
    }

    pub fn insert(&self, key: CacheKey, decision: GateDecision) {
        self.inner.lock().put(key, decision);
    }

    pub fn len(&self) -> usize {
        self.inner.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

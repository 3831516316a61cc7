//! On-disk result store.
//!
//! One JSON document per key at `<root>/<aa>/<bb>/<digest>.json`, where the
//! digest is the SHA-256 of the key without its version, so an entry written
//! by another format version is found and rejected rather than shadowed.
//! Documents carry a SHA-256 checksum of their payload; anything that fails to
//! parse, verify or match the reader's version is a miss.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const CACHE_FORMAT_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Count,
    Newform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub family: String,
    pub d: i64,
    pub p: u64,
    pub kind: Kind,
    pub version: String,
}

impl CacheKey {
    /// Point count of `X_d` over `F_p`.
    pub fn count(d: i64, p: u64) -> Self {
        CacheKey { family: "schoen".into(), d, p, kind: Kind::Count, version: CACHE_FORMAT_VERSION.into() }
    }

    /// Rational newforms of level `N` and weight `k` (stored as `d = N`, `p = k`).
    pub fn newforms(level: u64, weight: u32) -> Self {
        CacheKey { family: "gamma0".into(), d: level as i64, p: weight as u64, kind: Kind::Newform, version: CACHE_FORMAT_VERSION.into() }
    }

    fn digest(&self) -> String {
        let kind = match self.kind {
            Kind::Count => "count",
            Kind::Newform => "newform",
        };
        hex::encode(Sha256::digest(format!("{kind}/{}/{}/{}", self.family, self.d, self.p)))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: CacheKey,
    checksum: String,
    payload: Value,
}

pub fn checksum(payload: &Value) -> String {
    hex::encode(Sha256::digest(payload.to_string()))
}

#[derive(Debug, PartialEq)]
pub enum Lookup<T> {
    Hit(T),
    Absent,
    /// Written under another format version.
    Stale { found: String },
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

static WRITE_LOCK: Mutex<()> = Mutex::new(());
static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Cache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).with_context(|| format!("creating cache directory {}", root.display()))?;
        Ok(Cache { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, key: &CacheKey) -> PathBuf {
        let h = key.digest();
        self.root.join(&h[0..2]).join(&h[2..4]).join(format!("{h}.json"))
    }

    /// Write-temp-then-rename, so readers see either the old or the new document.
    pub fn put<T: Serialize>(&self, key: &CacheKey, value: &T) -> Result<()> {
        let payload = serde_json::to_value(value)?;
        let entry = Entry { key: key.clone(), checksum: checksum(&payload), payload };
        let path = self.path(key);
        let dir = path.parent().expect("fan-out directory");
        let _guard = WRITE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".{}.{}.{}.tmp",
            key.digest(),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(serde_json::to_string_pretty(&entry)?.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
        Ok(())
    }

    pub fn lookup<T: DeserializeOwned>(&self, key: &CacheKey) -> Lookup<T> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Absent,
            Err(e) => return Lookup::Corrupt(e.to_string()),
        };
        let entry: Entry = match serde_json::from_str(&text) {
            Ok(e) => e,
            Err(e) => return Lookup::Corrupt(format!("unparsable entry: {e}")),
        };
        if entry.key.version != key.version {
            return Lookup::Stale { found: entry.key.version };
        }
        if entry.key != *key {
            return Lookup::Corrupt("entry key does not match its location".into());
        }
        if checksum(&entry.payload) != entry.checksum {
            return Lookup::Corrupt("checksum mismatch".into());
        }
        match serde_json::from_value(entry.payload) {
            Ok(v) => Lookup::Hit(v),
            Err(e) => Lookup::Corrupt(format!("payload does not decode: {e}")),
        }
    }

    /// As [`Cache::lookup`], warning on standard error about rejected entries.
    pub fn get<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        match self.lookup(key) {
            Lookup::Hit(v) => Some(v),
            Lookup::Absent => None,
            Lookup::Stale { found } => {
                eprintln!(
                    "warning: ignoring cache entry {} with version {found} (reader is {})",
                    self.path(key).display(),
                    key.version
                );
                None
            }
            Lookup::Corrupt(why) => {
                eprintln!("warning: ignoring cache entry {}: {why}", self.path(key).display());
                None
            }
        }
    }
}

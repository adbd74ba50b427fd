//! Content-addressed on-disk cache for search responses and page bodies.
//!
//! Each entry is a file named by the SHA-256 of `(namespace, key)`. The
//! first line holds a magic tag and the SHA-256 of the payload; entries
//! whose checksum does not match are treated as misses and removed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CACHE_DIR_ENV: &str = "VERISCOPE_CACHE_DIR";

const MAGIC: &str = "veriscope-cache-v1";

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(DiskCache { dir })
    }

    /// Cache rooted at `$VERISCOPE_CACHE_DIR`, if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => DiskCache::new(PathBuf::from(dir)).map(Some),
            _ => Ok(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, namespace: &str, key: &str) -> PathBuf {
        let mut material = Vec::with_capacity(namespace.len() + key.len() + 1);
        material.extend_from_slice(namespace.as_bytes());
        material.push(0);
        material.extend_from_slice(key.as_bytes());
        self.dir.join(sha256_hex(&material))
    }

    pub fn get(&self, namespace: &str, key: &str) -> Option<Vec<u8>> {
        let path = self.entry_path(namespace, key);
        let raw = fs::read(&path).ok()?;
        match decode_entry(&raw) {
            Some(payload) => Some(payload.to_vec()),
            None => {
                log::warn!("evicting corrupt cache entry {}", path.display());
                let _ = fs::remove_file(&path);
                None
            }
        }
    }

    /// Atomic write: the entry appears complete or not at all.
    pub fn put(&self, namespace: &str, key: &str, payload: &[u8]) -> Result<()> {
        let path = self.entry_path(namespace, key);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let header = format!("{MAGIC} {}\n", sha256_hex(payload));
        tmp.write_all(header.as_bytes())
            .and_then(|_| tmp.write_all(payload))
            .and_then(|_| tmp.flush())
            .map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }
}

fn decode_entry(raw: &[u8]) -> Option<&[u8]> {
    let newline = raw.iter().position(|&b| b == b'\n')?;
    let header = std::str::from_utf8(&raw[..newline]).ok()?;
    let checksum = header.strip_prefix(MAGIC)?.trim();
    let payload = &raw[newline + 1..];
    (sha256_hex(payload) == checksum).then_some(payload)
}

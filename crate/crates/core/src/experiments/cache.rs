//! Content-addressed artifact cache.
//!
//! Entries live at `<root>/<sha256 of key>.bin` and carry a digest of their
//! payload, so a truncated or altered file is detected and rebuilt.

use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::{decode_basis, encode_basis, solve_spectrum, SpectralBasis};

use super::config::BasisConfig;

pub const CACHE_ENV: &str = "GIBBS_CACHE_DIR";
const DEFAULT_ROOT: &str = ".gibbs-cache";
const ENTRY_MAGIC: &[u8; 8] = b"GIBBSCAC";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cache {
    root: PathBuf,
}

/// Whether `get_or_build` served the entry from disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Built,
    Rebuilt,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// Root from `GIBBS_CACHE_DIR`, else `./.gibbs-cache`.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_ROOT)))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Hex digest of a namespace and the JSON form of `key`.
    pub fn key<K: Serialize>(namespace: &str, key: &K) -> Result<String> {
        let mut h = Sha256::new();
        h.update(namespace.as_bytes());
        h.update([0u8]);
        h.update(serde_json::to_vec(key)?);
        Ok(hex::encode(h.finalize()))
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.root.join(format!("{key}.bin"))
    }

    fn read_entry(path: &Path) -> Option<Vec<u8>> {
        let bytes = std::fs::read(path).ok()?;
        if bytes.len() < 40 || &bytes[..8] != ENTRY_MAGIC {
            return None;
        }
        let (digest, payload) = bytes[8..].split_at(32);
        (Sha256::digest(payload).as_slice() == digest).then(|| payload.to_vec())
    }

    fn write_entry(path: &Path, payload: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut bytes = Vec::with_capacity(payload.len() + 40);
        bytes.extend_from_slice(ENTRY_MAGIC);
        bytes.extend_from_slice(&Sha256::digest(payload));
        bytes.extend_from_slice(payload);
        // Write then rename so concurrent readers never see a partial entry.
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, &bytes)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Load the payload stored under `key`, or build, store, and return it.
    /// `accept` rejects payloads that verify but fail to decode.
    pub fn get_or_build(
        &self,
        key: &str,
        build: impl FnOnce() -> Result<Vec<u8>>,
        accept: impl Fn(&[u8]) -> bool,
    ) -> Result<(Vec<u8>, CacheOutcome)> {
        let path = self.path_for(key);
        let existed = path.exists();
        if existed {
            match Self::read_entry(&path) {
                Some(payload) if accept(&payload) => {
                    debug!("cache hit {}", path.display());
                    return Ok((payload, CacheOutcome::Hit));
                }
                _ => warn!("cache entry {} is corrupted; rebuilding", path.display()),
            }
        }
        let payload = build()?;
        Self::write_entry(&path, &payload)?;
        Ok((payload, if existed { CacheOutcome::Rebuilt } else { CacheOutcome::Built }))
    }

    /// Solve or load the spectral basis described by `cfg`.
    pub fn basis(&self, cfg: &BasisConfig) -> Result<(SpectralBasis, CacheOutcome)> {
        let key = Self::key("basis-v1", cfg)?;
        let (bytes, outcome) = self.get_or_build(
            &key,
            || {
                let basis = solve_spectrum(cfg.s_exponent(), cfg.grid()?, cfg.modes)?;
                Ok(encode_basis(&basis))
            },
            |b| decode_basis(b).is_ok(),
        )?;
        let basis = decode_basis(&bytes)
            .map_err(|e| Error::Internal(format!("verified cache entry failed to decode: {e}")))?;
        Ok((basis, outcome))
    }
}

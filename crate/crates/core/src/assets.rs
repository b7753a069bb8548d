//! Content-addressed asset storage.
//!
//! Every asset is stored as `<sha256-hex>.<ext>` under one directory. Writes go
//! through a temporary file and an atomic rename.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("asset io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("asset not found: {0}")]
    NotFound(String),
    #[error("invalid asset reference: {0}")]
    InvalidRef(String),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reference to a stored asset, serialized as the file name relative to the
/// assets directory (`<hash>.<ext>`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AssetRef {
    hash: String,
    ext: String,
}

impl AssetRef {
    pub fn new(hash: impl Into<String>, ext: impl Into<String>) -> Result<Self, AssetError> {
        let (hash, ext) = (hash.into(), ext.into());
        let hash_ok = hash.len() == 64 && hash.bytes().all(|b| b.is_ascii_hexdigit());
        let ext_ok = !ext.is_empty()
            && ext
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'.' || b == b'_');
        if !hash_ok || !ext_ok || ext.starts_with('.') {
            return Err(AssetError::InvalidRef(format!("{hash}.{ext}")));
        }
        Ok(Self { hash, ext })
    }

    pub fn for_bytes(bytes: &[u8], ext: &str) -> Result<Self, AssetError> {
        Self::new(sha256_hex(bytes), ext)
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn ext(&self) -> &str {
        &self.ext
    }

    pub fn file_name(&self) -> String {
        format!("{}.{}", self.hash, self.ext)
    }
}

impl fmt::Display for AssetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.hash, self.ext)
    }
}

impl FromStr for AssetRef {
    type Err = AssetError;

    fn from_str(s: &str) -> Result<Self, AssetError> {
        match s.split_once('.') {
            Some((hash, ext)) => Self::new(hash, ext),
            None => Err(AssetError::InvalidRef(s.to_string())),
        }
    }
}

impl TryFrom<String> for AssetRef {
    type Error = AssetError;

    fn try_from(s: String) -> Result<Self, AssetError> {
        s.parse()
    }
}

impl From<AssetRef> for String {
    fn from(r: AssetRef) -> Self {
        r.to_string()
    }
}

#[derive(Clone, Debug)]
pub struct AssetStore {
    root: PathBuf,
}

impl AssetStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, AssetError> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, asset: &AssetRef) -> PathBuf {
        self.root.join(asset.file_name())
    }

    pub fn put(&self, bytes: &[u8], ext: &str) -> Result<AssetRef, AssetError> {
        let asset = AssetRef::for_bytes(bytes, ext)?;
        let target = self.path(&asset);
        if !target.exists() {
            atomic_write(&target, bytes)?;
        }
        Ok(asset)
    }

    /// Writes a file next to an asset, named `<asset file name>.<suffix>`.
    pub fn put_sidecar(&self, asset: &AssetRef, suffix: &str, bytes: &[u8]) -> Result<PathBuf, AssetError> {
        let path = self.sidecar_path(asset, suffix);
        atomic_write(&path, bytes)?;
        Ok(path)
    }

    pub fn sidecar_path(&self, asset: &AssetRef, suffix: &str) -> PathBuf {
        self.root.join(format!("{}.{suffix}", asset.file_name()))
    }

    pub fn get(&self, asset: &AssetRef) -> Result<Vec<u8>, AssetError> {
        std::fs::read(self.path(asset)).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => AssetError::NotFound(asset.to_string()),
            _ => AssetError::Io(e),
        })
    }

    pub fn contains(&self, asset: &AssetRef) -> bool {
        self.path(asset).is_file()
    }

    /// Finds a primary asset by hash alone (sidecars are skipped).
    pub fn find_by_hash(&self, hash: &str) -> Result<AssetRef, AssetError> {
        let prefix = format!("{hash}.");
        let mut found: Vec<AssetRef> = std::fs::read_dir(&self.root)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|name| name.starts_with(&prefix))
            .filter_map(|name| name.parse::<AssetRef>().ok())
            .filter(|r| !r.ext().contains('.'))
            .collect();
        found.sort();
        found
            .into_iter()
            .next()
            .ok_or_else(|| AssetError::NotFound(hash.to_string()))
    }
}

pub fn atomic_write(target: &Path, bytes: &[u8]) -> Result<(), AssetError> {
    let dir = target.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(target).map_err(|e| AssetError::Io(e.error))?;
    Ok(())
}

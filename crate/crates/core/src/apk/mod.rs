//! APK container, binary manifest, permission and signer parsing.

pub mod axml;
pub mod cert;
pub mod manifest;
pub mod permissions;
pub mod zip;

use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cert::{DnField, KnownSignature, KnownSignatureDb, SignatureClass, SignerIdentity};
pub use manifest::{parse_manifest, ManifestInfo};
pub use permissions::{permission_profile, DangerousPermissions, PermissionProfile};

use self::zip::{ZipError, ZipIndex};

pub const MANIFEST_PATH: &str = "AndroidManifest.xml";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApkError {
    #[error("not a ZIP archive: {0}")]
    NotAZip(#[from] ZipError),
    #[error("archive has no AndroidManifest.xml entry")]
    NoManifest,
    #[error("manifest undecodable: {0}")]
    ManifestUndecodable(String),
    #[error("signature block `{0}` undecodable")]
    CertUndecodable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryInfo {
    pub path: String,
    pub size: u64,
    pub mtime: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum SignatureStatus {
    Present,
    /// No `META-INF` signature block.
    Missing,
    Undecodable(String),
}

/// A parsed APK. The raw bytes are retained so entries can be read later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApkArtifact {
    /// SHA-256 of the raw file bytes, lowercase hex.
    pub sample_id: String,
    pub package_name: String,
    pub entries: Vec<EntryInfo>,
    pub manifest: Option<ManifestInfo>,
    /// Set when the manifest entry exists but failed to decode.
    pub manifest_error: Option<String>,
    pub signers: Vec<SignerIdentity>,
    pub signature_status: SignatureStatus,
    pub manifest_mtime: DateTime<Utc>,
    /// Every string in the manifest's string pool.
    #[serde(skip)]
    pub manifest_strings: Vec<String>,
    #[serde(skip)]
    raw: Option<Arc<RawArchive>>,
}

#[derive(Debug)]
struct RawArchive {
    bytes: Vec<u8>,
    index: ZipIndex,
}

impl ApkArtifact {
    pub fn is_valid(&self) -> bool {
        self.manifest.is_some()
    }

    pub fn entry(&self, path: &str) -> Option<&EntryInfo> {
        self.entries.iter().find(|e| e.path == path)
    }

    pub fn has_entry(&self, path: &str) -> bool {
        self.entry(path).is_some()
    }

    /// Decompressed contents of one entry.
    pub fn read_entry(&self, path: &str) -> Result<Vec<u8>, ApkError> {
        let raw = self
            .raw
            .as_ref()
            .ok_or_else(|| ApkError::NotAZip(ZipError::NotFound(path.to_string())))?;
        Ok(raw.index.read_path(&raw.bytes, path)?)
    }

    pub fn main_activity(&self) -> Option<&str> {
        self.manifest
            .as_ref()
            .and_then(|m| m.main_activity.as_deref())
    }
}

/// Parser settings shared across many APKs.
#[derive(Debug, Clone)]
pub struct ApkParser {
    pub known_signatures: KnownSignatureDb,
}

impl Default for ApkParser {
    fn default() -> Self {
        Self {
            known_signatures: KnownSignatureDb::embedded(),
        }
    }
}

pub fn sample_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parse with the embedded known-signature database.
pub fn open_apk(file_bytes: &[u8]) -> Result<ApkArtifact, ApkError> {
    ApkParser::default().open(file_bytes.to_vec())
}

/// Signer identities of every v1 signature block in the archive.
/// An empty list means the archive carries no signature block.
pub fn extract_signers(
    file_bytes: &[u8],
    db: &KnownSignatureDb,
) -> Result<Vec<SignerIdentity>, ApkError> {
    let index = ZipIndex::parse(file_bytes)?;
    signers_in(&index, file_bytes, db)
}

fn signers_in(
    index: &ZipIndex,
    bytes: &[u8],
    db: &KnownSignatureDb,
) -> Result<Vec<SignerIdentity>, ApkError> {
    let mut blocks: Vec<&str> = index
        .entries()
        .iter()
        .map(|e| e.path.as_str())
        .filter(|p| cert::is_signature_block(p))
        .collect();
    blocks.sort_unstable();
    let mut loaded = Vec::with_capacity(blocks.len());
    for path in blocks {
        let data = index
            .read_path(bytes, path)
            .map_err(|_| ApkError::CertUndecodable(path.to_string()))?;
        loaded.push((path, data));
    }
    cert::signers_from_blocks(loaded, db)
}

impl ApkParser {
    pub fn open(&self, bytes: Vec<u8>) -> Result<ApkArtifact, ApkError> {
        let index = ZipIndex::parse(&bytes)?;
        let manifest_entry = index
            .get(MANIFEST_PATH)
            .ok_or(ApkError::NoManifest)?
            .clone();

        let entries = index
            .entries()
            .iter()
            .map(|e| EntryInfo {
                path: e.path.clone(),
                size: e.size,
                mtime: e.mtime,
            })
            .collect();

        let (manifest, manifest_error, manifest_strings) = match index.read(&bytes, &manifest_entry)
        {
            Err(e) => (None, Some(e.to_string()), Vec::new()),
            Ok(data) => match axml::parse(&data) {
                Err(e) => (None, Some(e.to_string()), Vec::new()),
                Ok(doc) => match manifest::manifest_from_document(&doc) {
                    Ok(m) => (Some(m), None, doc.strings),
                    Err(e) => (None, Some(e.to_string()), doc.strings),
                },
            },
        };

        let (signers, signature_status) = match signers_in(&index, &bytes, &self.known_signatures) {
            Ok(s) if s.is_empty() => (s, SignatureStatus::Missing),
            Ok(s) => (s, SignatureStatus::Present),
            Err(e) => (Vec::new(), SignatureStatus::Undecodable(e.to_string())),
        };

        Ok(ApkArtifact {
            sample_id: sample_digest(&bytes),
            package_name: manifest
                .as_ref()
                .map(|m| m.package_name.clone())
                .unwrap_or_default(),
            entries,
            manifest,
            manifest_error,
            signers,
            signature_status,
            manifest_mtime: manifest_entry.mtime,
            manifest_strings,
            raw: Some(Arc::new(RawArchive { bytes, index })),
        })
    }
}

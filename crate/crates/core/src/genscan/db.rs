use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cipher::TeaVariant;
use crate::apk::ApkArtifact;

const EMBEDDED_GENERATORS: &str = include_str!("../../data/generators.json");

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceRule {
    MainActivityEquals(String),
    PackagePrefix(String),
    /// Exact entry path, or any entry under it when it ends with `/`.
    AssetPathExists(String),
    /// File name of a bundled native library under `lib/<abi>/`.
    NativeLibExists(String),
}

impl EvidenceRule {
    pub fn fires(&self, apk: &ApkArtifact) -> bool {
        match self {
            EvidenceRule::MainActivityEquals(name) => apk.main_activity() == Some(name.as_str()),
            EvidenceRule::PackagePrefix(prefix) => {
                !apk.package_name.is_empty() && apk.package_name.starts_with(prefix.as_str())
            }
            EvidenceRule::AssetPathExists(path) if path.ends_with('/') => apk
                .entries
                .iter()
                .any(|e| e.path.starts_with(path.as_str())),
            EvidenceRule::AssetPathExists(path) => apk.has_entry(path),
            EvidenceRule::NativeLibExists(name) => apk.entries.iter().any(|e| {
                e.path.starts_with("lib/") && e.path.rsplit('/').next() == Some(name.as_str())
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KeySource {
    Constant {
        hex: String,
    },
    /// `length` bytes at `offset` inside entry `path`.
    EntryOffset {
        path: String,
        offset: usize,
        length: usize,
    },
    /// Must be supplied by the caller (CLI flag or environment).
    Supplied,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IvSource {
    #[default]
    Zero,
    /// Leading key bytes reused as the IV.
    Key,
    Constant {
        hex: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum CipherSpec {
    None,
    Rc4 {
        key_source: KeySource,
        #[serde(default)]
        encrypted_paths: Vec<String>,
    },
    Tea {
        key_source: KeySource,
        #[serde(default)]
        variant: TeaVariant,
        #[serde(default)]
        encrypted_paths: Vec<String>,
    },
    AesCbc {
        key_source: KeySource,
        #[serde(default)]
        iv: IvSource,
        #[serde(default)]
        encrypted_paths: Vec<String>,
    },
    DesCbc {
        key_source: KeySource,
        #[serde(default)]
        iv: IvSource,
        #[serde(default)]
        encrypted_paths: Vec<String>,
    },
}

impl CipherSpec {
    pub fn key_source(&self) -> Option<&KeySource> {
        match self {
            CipherSpec::None => None,
            CipherSpec::Rc4 { key_source, .. }
            | CipherSpec::Tea { key_source, .. }
            | CipherSpec::AesCbc { key_source, .. }
            | CipherSpec::DesCbc { key_source, .. } => Some(key_source),
        }
    }

    pub fn encrypted_paths(&self) -> &[String] {
        match self {
            CipherSpec::None => &[],
            CipherSpec::Rc4 {
                encrypted_paths, ..
            }
            | CipherSpec::Tea {
                encrypted_paths, ..
            }
            | CipherSpec::AesCbc {
                encrypted_paths, ..
            }
            | CipherSpec::DesCbc {
                encrypted_paths, ..
            } => encrypted_paths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorFingerprint {
    pub generator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub website: Option<String>,
    /// Human-readable cipher label as catalogued (e.g. "RC4 (Native)").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encryption: Option<String>,
    pub rules: Vec<EvidenceRule>,
    pub cipher: CipherSpec,
    #[serde(default)]
    pub template_paths: Vec<String>,
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("fingerprint database is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate generator id `{0}`")]
    DuplicateId(String),
    #[error("generator `{0}` has no evidence rules")]
    NoRules(String),
}

/// Generator catalog, sorted by `generator_id` after load.
#[derive(Debug, Clone)]
pub struct FingerprintDb {
    generators: Vec<GeneratorFingerprint>,
}

impl FingerprintDb {
    pub fn new(mut generators: Vec<GeneratorFingerprint>) -> Result<Self, DbError> {
        let mut seen = BTreeSet::new();
        for g in &generators {
            if !seen.insert(g.generator_id.clone()) {
                return Err(DbError::DuplicateId(g.generator_id.clone()));
            }
            if g.rules.is_empty() {
                return Err(DbError::NoRules(g.generator_id.clone()));
            }
        }
        generators.sort_by(|a, b| a.generator_id.cmp(&b.generator_id));
        Ok(Self { generators })
    }

    pub fn from_json(text: &str) -> Result<Self, DbError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED_GENERATORS).expect("embedded generator db is valid")
    }

    pub fn generators(&self) -> &[GeneratorFingerprint] {
        &self.generators
    }

    pub fn get(&self, id: &str) -> Option<&GeneratorFingerprint> {
        self.generators
            .binary_search_by(|g| g.generator_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.generators[i])
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_catalog_has_47_generators() {
        let db = FingerprintDb::embedded();
        assert_eq!(db.len(), 47);
        assert!(db.get("DCloud").is_some());
        assert!(matches!(
            db.get("AppCan").unwrap().cipher,
            CipherSpec::Rc4 { .. }
        ));
        assert!(matches!(
            db.get("Appmachine").unwrap().cipher,
            CipherSpec::Tea { .. }
        ));
        assert!(matches!(
            db.get("AppYet").unwrap().cipher,
            CipherSpec::DesCbc { .. }
        ));
        assert!(matches!(
            db.get("BSLApp").unwrap().cipher,
            CipherSpec::AesCbc { .. }
        ));
    }

    #[test]
    fn rejects_duplicates_and_empty_rules() {
        let g = GeneratorFingerprint {
            generator_id: "X".into(),
            website: None,
            encryption: None,
            rules: vec![EvidenceRule::PackagePrefix("x.".into())],
            cipher: CipherSpec::None,
            template_paths: vec![],
        };
        assert!(matches!(
            FingerprintDb::new(vec![g.clone(), g.clone()]),
            Err(DbError::DuplicateId(_))
        ));
        let empty = GeneratorFingerprint { rules: vec![], ..g };
        assert!(matches!(
            FingerprintDb::new(vec![empty]),
            Err(DbError::NoRules(_))
        ));
    }

    #[test]
    fn schema_round_trip() {
        let text = r#"[{"generator_id":"G","rules":[{"package_prefix":"g."}],
            "cipher":{"algo":"aes_cbc","key_source":{"kind":"constant","hex":"00"},"iv":{"kind":"key"}},
            "template_paths":["assets/sdk/"]}]"#;
        let db = FingerprintDb::from_json(text).unwrap();
        let g = db.get("G").unwrap();
        assert_eq!(g.template_paths, vec!["assets/sdk/".to_string()]);
        assert!(matches!(
            &g.cipher,
            CipherSpec::AesCbc {
                iv: IvSource::Key,
                ..
            }
        ));
    }
}

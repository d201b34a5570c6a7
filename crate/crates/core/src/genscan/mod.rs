//! App-generator provenance: detection, asset decryption and separation of
//! user content from generator template content.

pub mod cipher;
pub mod db;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apk::{ApkArtifact, ApkError};
use cipher::{AesCbc, AssetCipher, DesCbc, Rc4, Tea};
pub use db::{CipherSpec, EvidenceRule, FingerprintDb, GeneratorFingerprint, IvSource, KeySource};

#[derive(Debug, Error)]
pub enum GenscanError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{0}` does not encrypt its assets")]
    NoCipher(String),
    #[error("no key available for generator `{0}`")]
    KeyUnavailable(String),
    #[error("bad key material: {0}")]
    BadKey(String),
    #[error(transparent)]
    Apk(#[from] ApkError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMatch {
    pub generator_id: String,
    pub matched_rules: Vec<EvidenceRule>,
    pub total_rules: usize,
    /// matched / total rules of the fingerprint.
    pub confidence: f64,
    /// Generator that tied on confidence but lost on id ordering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runner_up: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserContent {
    pub user_entries: Vec<String>,
    pub template_entries: Vec<String>,
    #[serde(skip)]
    pub decrypted: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecryptOutcome {
    pub decrypted: BTreeMap<String, Vec<u8>>,
    /// Entries whose output failed validation; left encrypted.
    pub failed: Vec<String>,
}

/// Highest-confidence generator whose rules fire on `apk`. Confidence ties
/// go to the lexicographically smaller id; the runner-up is recorded.
pub fn detect_generator(apk: &ApkArtifact, db: &FingerprintDb) -> Option<GeneratorMatch> {
    let mut candidates: Vec<GeneratorMatch> = db
        .generators()
        .iter()
        .filter_map(|g| {
            let matched: Vec<EvidenceRule> =
                g.rules.iter().filter(|r| r.fires(apk)).cloned().collect();
            (!matched.is_empty()).then(|| GeneratorMatch {
                generator_id: g.generator_id.clone(),
                confidence: matched.len() as f64 / g.rules.len() as f64,
                matched_rules: matched,
                total_rules: g.rules.len(),
                runner_up: None,
            })
        })
        .collect();
    // exact rational comparison: a/b vs c/d
    let cmp = |x: &GeneratorMatch, y: &GeneratorMatch| {
        let lhs = x.matched_rules.len() * y.total_rules;
        let rhs = y.matched_rules.len() * x.total_rules;
        rhs.cmp(&lhs)
            .then_with(|| x.generator_id.cmp(&y.generator_id))
    };
    candidates.sort_by(cmp);
    let mut iter = candidates.into_iter();
    let mut best = iter.next()?;
    if let Some(second) = iter.next() {
        if best.matched_rules.len() * second.total_rules
            == second.matched_rules.len() * best.total_rules
        {
            best.runner_up = Some(second.generator_id);
        }
    }
    Some(best)
}

fn has_prefix(path: &str, prefixes: &[String]) -> bool {
    prefixes.iter().any(|p| path.starts_with(p.as_str()))
}

/// Partition asset entries into generator-owned template and user content.
pub fn split_user_content(apk: &ApkArtifact, fingerprint: &GeneratorFingerprint) -> UserContent {
    let (template_entries, user_entries): (Vec<String>, Vec<String>) = apk
        .entries
        .iter()
        .map(|e| e.path.clone())
        .filter(|p| p.starts_with("assets/"))
        .partition(|p| has_prefix(p, &fingerprint.template_paths));
    UserContent {
        user_entries,
        template_entries,
        decrypted: BTreeMap::new(),
    }
}

/// Accept output that starts with a known magic (ZIP, PNG, `<`) or whose
/// bytes are at least 90% valid UTF-8.
pub fn plausible_plaintext(data: &[u8]) -> bool {
    const MAGICS: [&[u8]; 3] = [b"PK\x03\x04", b"\x89PNG", b"<"];
    if data.is_empty() || MAGICS.iter().any(|m| data.starts_with(m)) {
        return true;
    }
    let valid: usize = data.utf8_chunks().map(|c| c.valid().len()).sum();
    valid * 10 >= data.len() * 9
}

fn decode_hex(s: &str) -> Result<Vec<u8>, GenscanError> {
    hex::decode(s.trim()).map_err(|e| GenscanError::BadKey(e.to_string()))
}

fn resolve_key(
    apk: &ApkArtifact,
    generator: &str,
    source: &KeySource,
    supplied: Option<&[u8]>,
) -> Result<Vec<u8>, GenscanError> {
    if let Some(k) = supplied {
        return Ok(k.to_vec());
    }
    match source {
        KeySource::Constant { hex } => decode_hex(hex),
        KeySource::EntryOffset {
            path,
            offset,
            length,
        } => {
            let data = apk.read_entry(path)?;
            offset
                .checked_add(*length)
                .and_then(|end| data.get(*offset..end))
                .map(<[u8]>::to_vec)
                .ok_or_else(|| GenscanError::KeyUnavailable(generator.to_string()))
        }
        KeySource::Supplied => Err(GenscanError::KeyUnavailable(generator.to_string())),
    }
}

fn resolve_iv(iv: &IvSource, key: &[u8], block: usize) -> Result<Vec<u8>, GenscanError> {
    match iv {
        IvSource::Zero => Ok(vec![0; block]),
        IvSource::Key => key
            .get(..block)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| GenscanError::BadKey("key shorter than IV".into())),
        IvSource::Constant { hex } => decode_hex(hex),
    }
}

/// Build the cipher a fingerprint describes, for the given key.
pub fn build_cipher(
    spec: &CipherSpec,
    key: &[u8],
) -> Result<Option<Box<dyn AssetCipher>>, GenscanError> {
    let bad = |e: cipher::CipherError| GenscanError::BadKey(e.to_string());
    Ok(Some(match spec {
        CipherSpec::None => return Ok(None),
        CipherSpec::Rc4 { .. } => Box::new(Rc4::new(key).map_err(bad)?),
        CipherSpec::Tea { variant, .. } => Box::new(Tea::new(key, *variant).map_err(bad)?),
        CipherSpec::AesCbc { iv, .. } => {
            Box::new(AesCbc::new(key, &resolve_iv(iv, key, 16)?).map_err(bad)?)
        }
        CipherSpec::DesCbc { iv, .. } => {
            Box::new(DesCbc::new(key, &resolve_iv(iv, key, 8)?).map_err(bad)?)
        }
    }))
}

/// Decrypt every entry under the generator's protected paths (or, when the
/// fingerprint names none, every user entry).
pub fn decrypt_assets(
    apk: &ApkArtifact,
    db: &FingerprintDb,
    matched: &GeneratorMatch,
    key: Option<&[u8]>,
) -> Result<DecryptOutcome, GenscanError> {
    let fp = db
        .get(&matched.generator_id)
        .ok_or_else(|| GenscanError::UnknownGenerator(matched.generator_id.clone()))?;
    let source = fp
        .cipher
        .key_source()
        .ok_or_else(|| GenscanError::NoCipher(fp.generator_id.clone()))?;
    let key = resolve_key(apk, &fp.generator_id, source, key)?;
    let cipher = build_cipher(&fp.cipher, &key)?.expect("cipher present");

    let protected = fp.cipher.encrypted_paths();
    let targets: Vec<String> = if protected.is_empty() {
        split_user_content(apk, fp).user_entries
    } else {
        apk.entries
            .iter()
            .filter(|e| has_prefix(&e.path, protected) && !has_prefix(&e.path, &fp.template_paths))
            .map(|e| e.path.clone())
            .collect()
    };

    let mut out = DecryptOutcome::default();
    for path in targets {
        let data = apk.read_entry(&path)?;
        match cipher.decrypt(&data) {
            Ok(plain) if plausible_plaintext(&plain) => {
                out.decrypted.insert(path, plain);
            }
            _ => out.failed.push(path),
        }
    }
    Ok(out)
}

/// Detection, splitting and (when possible) decryption in one pass.
pub fn analyze(
    apk: &ApkArtifact,
    db: &FingerprintDb,
    key: Option<&[u8]>,
) -> (Option<GeneratorMatch>, Option<UserContent>, Vec<String>) {
    let Some(m) = detect_generator(apk, db) else {
        return (None, None, Vec::new());
    };
    let fp = db.get(&m.generator_id).expect("match comes from db");
    let mut content = split_user_content(apk, fp);
    let mut notes = Vec::new();
    if !matches!(fp.cipher, CipherSpec::None) {
        match decrypt_assets(apk, db, &m, key) {
            Ok(outcome) => {
                notes.extend(
                    outcome
                        .failed
                        .iter()
                        .map(|p| format!("decrypt failed: {p}")),
                );
                content.decrypted = outcome.decrypted;
            }
            Err(e) => notes.push(e.to_string()),
        }
    }
    (Some(m), Some(content), notes)
}

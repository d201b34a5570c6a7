//! Single-sample static pass: container, generator, endpoints, paradigm.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::apk::{
    permission_profile, ApkError, ApkParser, DangerousPermissions, PermissionProfile,
    SignatureClass, SignatureStatus, SignerIdentity,
};
use crate::assoc::SampleFeatures;
use crate::extract::{
    classify_paradigm, extract_urls, filter_whitelist, ParadigmLabel, SuffixList, UrlSet,
    Whitelist, DEFAULT_WEB_ASSET_THRESHOLD,
};
use crate::genscan::{self, FingerprintDb, GeneratorMatch};

/// Shared, read-only inputs for scanning many samples.
#[derive(Debug, Clone)]
pub struct ScanContext {
    pub parser: ApkParser,
    pub generators: FingerprintDb,
    /// Per-generator decryption keys.
    pub keys: BTreeMap<String, Vec<u8>>,
    pub suffixes: SuffixList,
    pub whitelist: Whitelist,
    pub dangerous: DangerousPermissions,
    pub web_asset_threshold: f64,
}

impl Default for ScanContext {
    fn default() -> Self {
        Self {
            parser: ApkParser::default(),
            generators: FingerprintDb::embedded(),
            keys: BTreeMap::new(),
            suffixes: SuffixList::embedded(),
            whitelist: Whitelist::embedded_third_party(),
            dangerous: DangerousPermissions::embedded(),
            web_asset_threshold: DEFAULT_WEB_ASSET_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    #[serde(default)]
    pub source: String,
    pub package_name: String,
    pub manifest_valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main_activity: Option<String>,
    pub manifest_mtime: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permissions: Option<PermissionProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorMatch>,
    pub paradigm: ParadigmLabel,
    pub signature_status: SignatureStatus,
    #[serde(default)]
    pub signers: Vec<SignerIdentity>,
    /// Endpoints after whitelist filtering.
    pub url_set: UrlSet,
    #[serde(default)]
    pub user_entries: usize,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl SampleRecord {
    /// Signer used for association: the first developer-specific signer,
    /// else the first signer.
    pub fn primary_signer(&self) -> Option<&SignerIdentity> {
        self.signers
            .iter()
            .find(|s| s.signature_class == SignatureClass::DeveloperSpecific)
            .or_else(|| self.signers.first())
    }

    pub fn to_features(&self) -> SampleFeatures {
        let mut f = SampleFeatures::new(self.sample_id.clone());
        f.signature = self.primary_signer().cloned();
        f.url_set = self.url_set.clone();
        f
    }
}

/// Run every static stage over one APK.
pub fn scan_apk(bytes: Vec<u8>, source: &str, ctx: &ScanContext) -> Result<SampleRecord, ApkError> {
    let apk = ctx.parser.open(bytes)?;
    let mut notes = Vec::new();
    let (matched, content) = if apk.is_valid() {
        let key = genscan::detect_generator(&apk, &ctx.generators)
            .and_then(|m| ctx.keys.get(&m.generator_id));
        let (m, c, n) = genscan::analyze(&apk, &ctx.generators, key.map(Vec::as_slice));
        notes.extend(n);
        (m, c)
    } else {
        notes.push("manifest undecodable; generator detection skipped".into());
        (None, None)
    };
    let raw_urls = extract_urls(&apk, content.as_ref(), &ctx.suffixes);
    let url_set = filter_whitelist(&raw_urls, &ctx.whitelist);
    let paradigm = classify_paradigm(&apk, matched.as_ref(), ctx.web_asset_threshold);
    Ok(SampleRecord {
        sample_id: apk.sample_id.clone(),
        source: source.to_string(),
        package_name: apk.package_name.clone(),
        manifest_valid: apk.is_valid(),
        manifest_error: apk.manifest_error.clone(),
        main_activity: apk.main_activity().map(str::to_string),
        manifest_mtime: apk.manifest_mtime,
        permissions: apk
            .manifest
            .as_ref()
            .map(|m| permission_profile(m, &ctx.dangerous)),
        user_entries: content.as_ref().map_or(0, |c| c.user_entries.len()),
        generator: matched,
        paradigm,
        signature_status: apk.signature_status.clone(),
        signers: apk.signers.clone(),
        url_set,
        notes,
    })
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use culprit_core::apk::{ApkParser, DangerousPermissions, KnownSignatureDb};
use culprit_core::assoc::AssocConfig;
use culprit_core::extract::{SuffixList, Whitelist, DEFAULT_WEB_ASSET_THRESHOLD};
use culprit_core::genscan::FingerprintDb;
use culprit_core::payclass::{ChannelPatterns, LicensedDb};
use culprit_core::pipeline::ScanContext;
use culprit_infra::backend::LivenessRule;
use culprit_infra::geo::GeoDb;
use culprit_infra::schedule::Window;
use serde::{Deserialize, Serialize};

use crate::InputError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub assoc: AssocConfig,
    /// Ranked or plain domain lists merged into the whitelist.
    pub whitelist_paths: Vec<PathBuf>,
    pub whitelist_top_n: usize,
    pub fingerprint_db: Option<PathBuf>,
    pub known_signatures: Option<PathBuf>,
    pub dangerous_permissions: Option<PathBuf>,
    pub public_suffix_list: Option<PathBuf>,
    pub licensed_payment_db: Option<PathBuf>,
    pub currency_patterns: Option<Vec<String>>,
    pub geo_db: Option<PathBuf>,
    pub window: Option<WindowConfig>,
    pub cadence_days: i64,
    pub liveness: LivenessRule,
    pub probe_timeout_secs: u64,
    pub web_asset_threshold: f64,
    /// Hex-encoded decryption keys by generator id.
    pub keys: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            assoc: AssocConfig::default(),
            whitelist_paths: Vec::new(),
            whitelist_top_n: culprit_core::extract::whitelist::DEFAULT_TOP_N,
            fingerprint_db: None,
            known_signatures: None,
            dangerous_permissions: None,
            public_suffix_list: None,
            licensed_payment_db: None,
            currency_patterns: None,
            geo_db: None,
            window: None,
            cadence_days: 1,
            liveness: LivenessRule::default(),
            probe_timeout_secs: 10,
            web_asset_threshold: DEFAULT_WEB_ASSET_THRESHOLD,
            keys: BTreeMap::new(),
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))
        .map_err(Into::into)
}

impl Config {
    /// Load a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = read(path)?;
        let mut cfg: Config = serde_json::from_str(&text)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.whitelist_paths.iter_mut().for_each(fix);
        for p in [
            &mut cfg.fingerprint_db,
            &mut cfg.known_signatures,
            &mut cfg.dangerous_permissions,
            &mut cfg.public_suffix_list,
            &mut cfg.licensed_payment_db,
            &mut cfg.geo_db,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        Ok(cfg)
    }

    pub fn whitelist(&self) -> anyhow::Result<Whitelist> {
        let mut wl = Whitelist::embedded_third_party();
        for p in &self.whitelist_paths {
            wl.add_ranked(&read(p)?, self.whitelist_top_n);
        }
        Ok(wl)
    }

    pub fn scan_context(&self) -> anyhow::Result<ScanContext> {
        let mut ctx = ScanContext {
            whitelist: self.whitelist()?,
            web_asset_threshold: self.web_asset_threshold,
            ..Default::default()
        };
        if let Some(p) = &self.fingerprint_db {
            ctx.generators = FingerprintDb::from_json(&read(p)?)
                .map_err(|e| InputError(format!("{}: {e}", p.display())))?;
        }
        if let Some(p) = &self.known_signatures {
            ctx.parser = ApkParser {
                known_signatures: KnownSignatureDb::from_json(&read(p)?)
                    .map_err(|e| InputError(format!("{}: {e}", p.display())))?,
            };
        }
        if let Some(p) = &self.dangerous_permissions {
            ctx.dangerous = DangerousPermissions::parse(&read(p)?);
        }
        if let Some(p) = &self.public_suffix_list {
            ctx.suffixes = SuffixList::parse(&read(p)?);
        }
        for (id, key) in &self.keys {
            let bytes = hex::decode(key).map_err(|e| InputError(format!("key for {id}: {e}")))?;
            ctx.keys.insert(id.clone(), bytes);
        }
        Ok(ctx)
    }

    pub fn licensed(&self) -> anyhow::Result<LicensedDb> {
        Ok(match &self.licensed_payment_db {
            Some(p) => LicensedDb::parse(&read(p)?),
            None => LicensedDb::default(),
        })
    }

    pub fn channel_patterns(&self) -> anyhow::Result<ChannelPatterns> {
        match &self.currency_patterns {
            Some(v) => Ok(ChannelPatterns::new(v).map_err(|e| InputError(e.to_string()))?),
            None => Ok(ChannelPatterns::default()),
        }
    }

    pub fn geo(&self) -> anyhow::Result<GeoDb> {
        match &self.geo_db {
            Some(p) => {
                Ok(GeoDb::from_path(p).map_err(|e| InputError(format!("{}: {e}", p.display())))?)
            }
            None => Ok(GeoDb::default()),
        }
    }

    pub fn window(&self) -> anyhow::Result<Window> {
        let w = self
            .window
            .ok_or_else(|| InputError("config has no monitoring window".into()))?;
        Ok(Window::new(w.start, w.end).map_err(|e| InputError(e.to_string()))?)
    }
}

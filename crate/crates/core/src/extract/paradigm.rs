use serde::{Deserialize, Serialize};

use crate::apk::ApkArtifact;
use crate::genscan::GeneratorMatch;

pub const DEFAULT_WEB_ASSET_THRESHOLD: f64 = 0.3;

/// Native libraries and asset roots of embedded-browser frameworks.
const BROWSER_LIBS: [&str; 6] = [
    "libxwalkcore.so",
    "libxwalkdummy.so",
    "libmttwebview.so",
    "libtbs_crash_handler.so",
    "libgeckoview.so",
    "libchromium_android_linker.so",
];
const BROWSER_ASSET_ROOTS: [&str; 3] = ["assets/www/", "assets/xwalk", "assets/public/"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Paradigm {
    Native,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmLabel {
    pub value: Paradigm,
    pub evidence: Vec<String>,
}

fn is_web_asset(path: &str) -> bool {
    let lower = path.to_ascii_lowercase();
    [".html", ".htm", ".js"].iter().any(|e| lower.ends_with(e))
}

/// Fraction of asset bytes held by HTML and JavaScript files; 0 when the
/// APK carries no assets.
pub fn web_asset_ratio(apk: &ApkArtifact) -> f64 {
    let (web, total) = apk
        .entries
        .iter()
        .filter(|e| e.path.starts_with("assets/"))
        .fold((0u64, 0u64), |(w, t), e| {
            (
                if is_web_asset(&e.path) { w + e.size } else { w },
                t + e.size,
            )
        });
    if total == 0 {
        0.0
    } else {
        web as f64 / total as f64
    }
}

pub fn classify_paradigm(
    apk: &ApkArtifact,
    matched: Option<&GeneratorMatch>,
    threshold: f64,
) -> ParadigmLabel {
    let mut evidence = Vec::new();
    if let Some(m) = matched {
        evidence.push(format!("generator:{}", m.generator_id));
    }
    let ratio = web_asset_ratio(apk);
    if ratio > 0.0 && ratio >= threshold {
        evidence.push(format!("web_asset_ratio:{ratio:.2}"));
    }
    for e in &apk.entries {
        let name = e.path.rsplit('/').next().unwrap_or("");
        if e.path.starts_with("lib/") && BROWSER_LIBS.contains(&name) {
            evidence.push(format!("embedded_browser:{name}"));
        }
    }
    for root in BROWSER_ASSET_ROOTS {
        if apk.entries.iter().any(|e| e.path.starts_with(root)) {
            evidence.push(format!("embedded_browser:{root}"));
        }
    }
    evidence.dedup();
    ParadigmLabel {
        value: if evidence.is_empty() {
            Paradigm::Native
        } else {
            Paradigm::Hybrid
        },
        evidence,
    }
}

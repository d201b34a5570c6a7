use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AssocConfig, OverlapMeasure, SampleFeatures, UrlGranularity};
use crate::apk::{DnField, SignatureClass};
use crate::extract::similarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    Signature,
    Url,
    SharedIp,
    Snapshot,
}

/// Same certificate, or at least `min_signature_field_matches` equal
/// non-blank DN fields. Debug and generator-default signatures never
/// associate.
pub fn assoc_signature(a: &SampleFeatures, b: &SampleFeatures, cfg: &AssocConfig) -> bool {
    let (Some(sa), Some(sb)) = (&a.signature, &b.signature) else {
        return false;
    };
    if sa.signature_class != SignatureClass::DeveloperSpecific
        || sb.signature_class != SignatureClass::DeveloperSpecific
    {
        return false;
    }
    if !sa.fingerprint.is_empty() && sa.fingerprint == sb.fingerprint {
        return true;
    }
    let matches = DnField::ALL
        .iter()
        .filter(|&&f| match (sa.field(f), sb.field(f)) {
            (Some(x), Some(y)) => !x.trim().is_empty() && x.trim() == y.trim(),
            _ => false,
        })
        .count();
    matches >= cfg.min_signature_field_matches
}

/// Overlap of two sets under the configured measure; 0 when either side
/// (overlap coefficient) or both sides (Jaccard) are empty.
pub fn set_overlap(a: &BTreeSet<String>, b: &BTreeSet<String>, measure: OverlapMeasure) -> f64 {
    let inter = a.intersection(b).count();
    let denom = match measure {
        OverlapMeasure::Overlap => a.len().min(b.len()),
        OverlapMeasure::Jaccard => a.len() + b.len() - inter,
    };
    if denom == 0 {
        0.0
    } else {
        inter as f64 / denom as f64
    }
}

fn url_keys(s: &SampleFeatures, g: UrlGranularity) -> &BTreeSet<String> {
    match g {
        UrlGranularity::Domains => &s.url_set.domains,
        UrlGranularity::Urls => &s.url_set.urls,
    }
}

/// Endpoint lists overlap by at least the threshold.
pub fn url_overlap(a: &SampleFeatures, b: &SampleFeatures, cfg: &AssocConfig) -> bool {
    let (ka, kb) = (
        url_keys(a, cfg.url_granularity),
        url_keys(b, cfg.url_granularity),
    );
    if ka.is_empty() || kb.is_empty() {
        return false;
    }
    set_overlap(ka, kb, cfg.overlap_measure) >= cfg.url_overlap_threshold
}

fn ip_pool<'a>(s: &'a SampleFeatures, cfg: &AssocConfig) -> impl Iterator<Item = &'a String> {
    let literals = cfg
        .shared_ip_includes_literals
        .then_some(&s.url_set.ip_literals);
    s.resolved_ips.iter().chain(literals.into_iter().flatten())
}

/// Some endpoint IP is common to both samples.
pub fn shared_ip(a: &SampleFeatures, b: &SampleFeatures, cfg: &AssocConfig) -> bool {
    let pool: BTreeSet<&String> = ip_pool(a, cfg).collect();
    ip_pool(b, cfg).any(|ip| pool.contains(ip))
}

pub fn assoc_url(a: &SampleFeatures, b: &SampleFeatures, cfg: &AssocConfig) -> bool {
    url_overlap(a, b, cfg) || shared_ip(a, b, cfg)
}

/// Best pairwise snapshot similarity reaches the threshold.
pub fn assoc_snapshot(a: &SampleFeatures, b: &SampleFeatures, cfg: &AssocConfig) -> bool {
    a.fingerprints.iter().any(|x| {
        b.fingerprints
            .iter()
            .any(|y| similarity(x, y) >= cfg.snapshot_threshold)
    })
}

/// Every rule that fires for the pair.
pub fn fired_rules(a: &SampleFeatures, b: &SampleFeatures, cfg: &AssocConfig) -> BTreeSet<Rule> {
    let mut out = BTreeSet::new();
    if assoc_signature(a, b, cfg) {
        out.insert(Rule::Signature);
    }
    if url_overlap(a, b, cfg) {
        out.insert(Rule::Url);
    }
    if shared_ip(a, b, cfg) {
        out.insert(Rule::SharedIp);
    }
    if assoc_snapshot(a, b, cfg) {
        out.insert(Rule::Snapshot);
    }
    out
}

//! Developer association: pairwise signature, endpoint and snapshot rules,
//! bounded graph expansion and group statistics.

pub mod graph;
pub mod rules;
pub mod stats;

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apk::SignerIdentity;
use crate::extract::{UrlSet, VisualFingerprint};
use crate::taxonomy::TaxonomyLabel;

pub use graph::{build_graph, build_graph_with, AssociationGraph, Edge};
pub use rules::{
    assoc_signature, assoc_snapshot, assoc_url, fired_rules, set_overlap, shared_ip, url_overlap,
    Rule,
};
pub use stats::{group_stats, CategoryCell, GroupRow};

#[derive(Debug, Error)]
pub enum AssocError {
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("corpus size {corpus_size} is smaller than the {nodes} graph nodes")]
    CorpusTooSmall { corpus_size: usize, nodes: usize },
    #[error("line {line}: {source}")]
    BadRecord {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFeatures {
    pub sample_id: String,
    #[serde(default)]
    pub signature: Option<SignerIdentity>,
    #[serde(default)]
    pub url_set: UrlSet,
    #[serde(default)]
    pub resolved_ips: BTreeSet<String>,
    #[serde(default)]
    pub fingerprints: Vec<VisualFingerprint>,
    #[serde(default)]
    pub label: Option<TaxonomyLabel>,
}

impl SampleFeatures {
    pub fn new(sample_id: impl Into<String>) -> Self {
        Self {
            sample_id: sample_id.into(),
            signature: None,
            url_set: UrlSet::default(),
            resolved_ips: BTreeSet::new(),
            fingerprints: Vec::new(),
            label: None,
        }
    }
}

/// Read one feature record per non-blank line.
pub fn read_features_jsonl(reader: impl BufRead) -> Result<Vec<SampleFeatures>, AssocError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| AssocError::BadRecord {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMeasure {
    /// |A ∩ B| / min(|A|, |B|)
    #[default]
    Overlap,
    /// |A ∩ B| / |A ∪ B|
    Jaccard,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlGranularity {
    #[default]
    Domains,
    Urls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssocConfig {
    pub i_max: usize,
    pub url_overlap_threshold: f64,
    pub snapshot_threshold: f64,
    pub min_signature_field_matches: usize,
    pub overlap_measure: OverlapMeasure,
    pub url_granularity: UrlGranularity,
    /// Count IP literals found in the sample alongside resolved IPs.
    pub shared_ip_includes_literals: bool,
}

impl Default for AssocConfig {
    fn default() -> Self {
        Self {
            i_max: 2,
            url_overlap_threshold: 0.7,
            snapshot_threshold: 0.9,
            min_signature_field_matches: 3,
            overlap_measure: OverlapMeasure::Overlap,
            url_granularity: UrlGranularity::Domains,
            shared_ip_includes_literals: true,
        }
    }
}

impl AssocConfig {
    pub fn validate(&self) -> Result<(), AssocError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(AssocError::InvalidConfig(format!(
                    "{name} must be in (0, 1], got {v}"
                )))
            }
        };
        unit("url_overlap_threshold", self.url_overlap_threshold)?;
        unit("snapshot_threshold", self.snapshot_threshold)?;
        if self.min_signature_field_matches == 0 {
            return Err(AssocError::InvalidConfig(
                "min_signature_field_matches must be positive".into(),
            ));
        }
        Ok(())
    }
}

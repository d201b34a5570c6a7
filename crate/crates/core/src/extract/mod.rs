//! Per-sample association features: network endpoints, development
//! paradigm and snapshot fingerprints.

pub mod dhash;
pub mod paradigm;
pub mod psl;
pub mod urls;
pub mod whitelist;

pub use dhash::{
    fingerprint_image_bytes, similarity, snapshot_fingerprint, DHash, DhashError, HashBits,
    SnapshotHasher, VisualFingerprint,
};
pub use paradigm::{
    classify_paradigm, web_asset_ratio, Paradigm, ParadigmLabel, DEFAULT_WEB_ASSET_THRESHOLD,
};
pub use psl::SuffixList;
pub use urls::{extract_from_sources, extract_from_text, extract_urls, UrlSet};
pub use whitelist::{filter_whitelist, Whitelist, DEFAULT_TOP_N};

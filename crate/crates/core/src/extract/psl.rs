//! Public-suffix matching over the standard one-rule-per-line list format.

use std::collections::HashSet;

const EMBEDDED_LIST: &str = include_str!("../../data/public_suffix_list.dat");

#[derive(Debug, Clone, Default)]
pub struct SuffixList {
    rules: HashSet<String>,
    wildcards: HashSet<String>,
    exceptions: HashSet<String>,
}

impl SuffixList {
    pub fn parse(text: &str) -> Self {
        let mut list = Self::default();
        for line in text.lines() {
            let rule = line.split_whitespace().next().unwrap_or("");
            if rule.is_empty() || rule.starts_with("//") {
                continue;
            }
            let (bucket, body) = if let Some(r) = rule.strip_prefix('!') {
                (&mut list.exceptions, r)
            } else if let Some(r) = rule.strip_prefix("*.") {
                (&mut list.wildcards, r)
            } else {
                (&mut list.rules, rule)
            };
            let ascii = idna::domain_to_ascii(body).unwrap_or_else(|_| body.to_ascii_lowercase());
            bucket.insert(ascii);
        }
        list
    }

    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_LIST)
    }

    /// Number of labels in the public suffix of `host`.
    fn suffix_labels(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        let mut best = 1; // implicit "*" rule
        for take in 1..=n {
            let candidate = labels[n - take..].join(".");
            if self.exceptions.contains(&candidate) {
                return take - 1;
            }
            if self.rules.contains(&candidate) {
                best = best.max(take);
            }
            if take < n && self.wildcards.contains(&candidate) {
                best = best.max(take + 1);
            }
        }
        best
    }

    pub fn public_suffix(&self, host: &str) -> String {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let labels: Vec<&str> = host.split('.').collect();
        let k = self.suffix_labels(&labels).min(labels.len());
        labels[labels.len() - k..].join(".")
    }

    /// eTLD+1 of `host`; `None` when the host is itself a public suffix.
    pub fn registrable_domain(&self, host: &str) -> Option<String> {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        if host.is_empty() {
            return None;
        }
        let labels: Vec<&str> = host.split('.').collect();
        if labels.iter().any(|l| l.is_empty()) {
            return None;
        }
        let k = self.suffix_labels(&labels);
        (labels.len() > k).then(|| labels[labels.len() - k - 1..].join("."))
    }
}

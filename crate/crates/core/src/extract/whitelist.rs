use std::collections::HashSet;

use url::{Host, Url};

use super::urls::UrlSet;

const EMBEDDED_THIRD_PARTY: &str = include_str!("../../data/third_party_domains.txt");

pub const DEFAULT_TOP_N: usize = 10_000;

/// Domains excluded from association: a ranked popularity list truncated
/// at `top_n` plus third-party service domains.
#[derive(Debug, Clone, Default)]
pub struct Whitelist {
    domains: HashSet<String>,
}

fn clean(line: &str) -> Option<&str> {
    let line = line.split('#').next().unwrap_or("").trim();
    (!line.is_empty()).then_some(line)
}

impl Whitelist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Third-party service list only.
    pub fn embedded_third_party() -> Self {
        let mut wl = Self::new();
        wl.add_list(EMBEDDED_THIRD_PARTY);
        wl
    }

    /// Add a ranked list: either `rank,domain` rows or bare domains, where
    /// a bare domain's rank is its position among non-comment lines.
    pub fn add_ranked(&mut self, text: &str, top_n: usize) {
        for (pos, line) in text.lines().filter_map(clean).enumerate() {
            let (rank, domain) = match line.split_once(',') {
                Some((r, d)) => match r.trim().parse::<usize>() {
                    Ok(r) => (r, d.trim()),
                    Err(_) => continue,
                },
                None => (pos + 1, line),
            };
            if rank <= top_n {
                self.insert(domain);
            }
        }
    }

    /// Add every domain of an unranked list.
    pub fn add_list(&mut self, text: &str) {
        for line in text.lines().filter_map(clean) {
            self.insert(line);
        }
    }

    pub fn insert(&mut self, domain: &str) {
        let d = domain.trim().trim_end_matches('.').to_ascii_lowercase();
        if !d.is_empty() {
            self.domains.insert(d);
        }
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    /// True when `host` or any parent domain of it is listed.
    pub fn covers(&self, host: &str) -> bool {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let mut rest = host.as_str();
        loop {
            if self.domains.contains(rest) {
                return true;
            }
            match rest.split_once('.') {
                Some((_, parent)) => rest = parent,
                None => return false,
            }
        }
    }
}

fn domain_host(url: &str) -> Option<String> {
    match Url::parse(url).ok()?.host()? {
        Host::Domain(d) => Some(d.to_string()),
        _ => None,
    }
}

/// Drop URLs whose host is covered by the whitelist, and domains that are
/// whitelisted or no longer backed by a surviving URL. IP literals pass
/// through unchanged.
pub fn filter_whitelist(u: &UrlSet, whitelist: &Whitelist) -> UrlSet {
    let mut kept_hosts = Vec::new();
    let urls = u
        .urls
        .iter()
        .filter(|url| match domain_host(url) {
            Some(h) if whitelist.covers(&h) => false,
            Some(h) => {
                kept_hosts.push(h);
                true
            }
            None => true,
        })
        .cloned()
        .collect();
    let domains = u
        .domains
        .iter()
        .filter(|d| {
            !whitelist.covers(d)
                && kept_hosts.iter().any(|h| {
                    h == *d
                        || (h.len() > d.len()
                            && h.ends_with(d.as_str())
                            && h[..h.len() - d.len()].ends_with('.'))
                })
        })
        .cloned()
        .collect();
    UrlSet {
        urls,
        ip_literals: u.ip_literals.clone(),
        domains,
    }
}

use std::collections::BTreeSet;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::sync::LazyLock;

use regex::bytes::Regex;
use serde::{Deserialize, Serialize};
use url::{Host, Url};

use super::psl::SuffixList;
use crate::apk::ApkArtifact;
use crate::genscan::UserContent;

static URL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i-u)https?://[a-z0-9\-._~:/?#\[\]@!$&'()*+,;=%]+").expect("static regex")
});
static IPV4_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?-u)[0-9]{1,3}(?:\.[0-9]{1,3}){3}").expect("static regex"));
static IPV6_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?-u)[0-9A-Fa-f:]{2,39}").expect("static regex"));

/// Minimum length of a printable run kept by the binary string scan.
const MIN_PRINTABLE_RUN: usize = 6;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlSet {
    pub urls: BTreeSet<String>,
    pub ip_literals: BTreeSet<String>,
    /// Registrable domains of the URL hosts.
    pub domains: BTreeSet<String>,
}

impl UrlSet {
    pub fn is_empty(&self) -> bool {
        self.urls.is_empty() && self.ip_literals.is_empty()
    }

    /// Union of another set into this one.
    pub fn merge(&mut self, other: UrlSet) {
        self.urls.extend(other.urls);
        self.ip_literals.extend(other.ip_literals);
        self.domains.extend(other.domains);
    }
}

fn trim_trailing(raw: &[u8]) -> &[u8] {
    let mut end = raw.len();
    while end > 0 && b".,;:!?)]}'\"".contains(&raw[end - 1]) {
        end -= 1;
    }
    &raw[..end]
}

/// Parse and normalize one candidate URL; `None` when it has no usable host.
pub fn normalize_url(raw: &str) -> Option<Url> {
    let url = Url::parse(raw).ok()?;
    match url.host()? {
        Host::Domain(d) if d.is_empty() || !d.contains('.') => None,
        _ => Some(url),
    }
}

fn byte_is(buf: &[u8], i: Option<usize>, pred: impl Fn(u8) -> bool) -> bool {
    i.and_then(|i| buf.get(i)).is_some_and(|&b| pred(b))
}

fn scan_ips(text: &[u8], out: &mut BTreeSet<String>) {
    for m in IPV4_RE.find_iter(text) {
        let before = m.start().checked_sub(1);
        let isolated = !byte_is(text, before, |b| b.is_ascii_digit() || b == b'.')
            && !byte_is(text, Some(m.end()), |b| b.is_ascii_digit())
            && !(byte_is(text, Some(m.end()), |b| b == b'.')
                && byte_is(text, Some(m.end() + 1), |b| b.is_ascii_digit()));
        if !isolated {
            continue;
        }
        let s = std::str::from_utf8(m.as_bytes()).expect("ascii match");
        if let Ok(ip) = s.parse::<Ipv4Addr>() {
            out.insert(ip.to_string());
        }
    }
    for m in IPV6_RE.find_iter(text) {
        let bytes = m.as_bytes();
        if bytes.iter().filter(|&&b| b == b':').count() < 3 {
            continue;
        }
        let before = m.start().checked_sub(1);
        if byte_is(text, before, |b| b.is_ascii_alphanumeric() || b == b'.')
            || byte_is(text, Some(m.end()), |b| {
                b.is_ascii_alphanumeric() || b == b'.'
            })
        {
            continue;
        }
        let s = std::str::from_utf8(bytes).expect("ascii match");
        if let Ok(ip) = s.parse::<Ipv6Addr>() {
            if !ip.is_unspecified() {
                out.insert(ip.to_string());
            }
        }
    }
}

/// Extract URLs and IP literals from one text source.
pub fn extract_from_text(text: &[u8], psl: &SuffixList) -> UrlSet {
    let mut set = UrlSet::default();
    let mut rest = Vec::with_capacity(text.len());
    let mut last = 0;
    for m in URL_RE.find_iter(text) {
        rest.extend_from_slice(&text[last..m.start()]);
        rest.push(b' ');
        last = m.end();
        let raw = std::str::from_utf8(trim_trailing(m.as_bytes())).expect("ascii match");
        let Some(url) = normalize_url(raw) else {
            continue;
        };
        match url.host() {
            Some(Host::Domain(d)) => {
                if let Some(reg) = psl.registrable_domain(d) {
                    set.domains.insert(reg);
                }
            }
            Some(Host::Ipv4(ip)) => {
                set.ip_literals.insert(ip.to_string());
            }
            Some(Host::Ipv6(ip)) => {
                set.ip_literals.insert(ip.to_string());
            }
            None => continue,
        }
        set.urls.insert(url.to_string());
    }
    rest.extend_from_slice(&text[last..]);
    scan_ips(&rest, &mut set.ip_literals);
    set
}

/// Runs of printable ASCII at least `MIN_PRINTABLE_RUN` bytes long,
/// joined by newlines.
pub fn printable_strings(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for run in data.split(|b| !(b.is_ascii_graphic() || *b == b' ')) {
        if run.len() >= MIN_PRINTABLE_RUN {
            out.extend_from_slice(run);
            out.push(b'\n');
        }
    }
    out
}

/// Text-bearing asset extensions scanned as-is; every other entry goes
/// through the printable-string scan.
fn is_text_entry(path: &str) -> bool {
    const EXT: [&str; 9] = [
        ".html",
        ".htm",
        ".js",
        ".json",
        ".xml",
        ".txt",
        ".css",
        ".properties",
        ".cfg",
    ];
    let lower = path.to_ascii_lowercase();
    EXT.iter().any(|e| lower.ends_with(e))
}

/// All URLs and IP literals reachable from the manifest string pool, the
/// archive entries (decrypted user content taking precedence over the
/// stored bytes) and a printable-string scan of binary entries.
pub fn extract_urls(
    apk: &ApkArtifact,
    user_content: Option<&UserContent>,
    psl: &SuffixList,
) -> UrlSet {
    let mut set = UrlSet::default();
    for s in &apk.manifest_strings {
        set.merge(extract_from_text(s.as_bytes(), psl));
    }
    for entry in &apk.entries {
        if let Some(plain) = user_content.and_then(|u| u.decrypted.get(&entry.path)) {
            set.merge(extract_from_text(plain, psl));
            continue;
        }
        let Ok(data) = apk.read_entry(&entry.path) else {
            continue;
        };
        if is_text_entry(&entry.path) {
            set.merge(extract_from_text(&data, psl));
        } else {
            set.merge(extract_from_text(&printable_strings(&data), psl));
        }
    }
    set
}

/// Same extraction over caller-supplied string sources.
pub fn extract_from_sources<'a>(
    sources: impl IntoIterator<Item = &'a [u8]>,
    psl: &SuffixList,
) -> UrlSet {
    let mut set = UrlSet::default();
    for s in sources {
        set.merge(extract_from_text(s, psl));
    }
    set
}

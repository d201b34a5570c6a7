//! Real-network backends: system resolver, HTTP prober and port-43 WHOIS.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::net::{IpAddr, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::time::Duration;

use chrono::{DateTime, NaiveDate, Utc};

use crate::backend::{BackendUnavailable, ProbeReply, Prober, Resolver, WhoisSource};
use crate::store::file_stem;
use crate::timeline::{Resolved, WhoisRecord};

pub const BODY_PREFIX_LEN: u64 = 4096;

/// Resolver backed by the operating system's `getaddrinfo`.
pub struct SystemResolver;

impl Resolver for SystemResolver {
    fn resolve(
        &self,
        domain: &str,
        _nominal: DateTime<Utc>,
    ) -> Result<Resolved, BackendUnavailable> {
        match (domain, 0u16).to_socket_addrs() {
            Ok(addrs) => {
                let ips: BTreeSet<IpAddr> = addrs.map(|a| a.ip()).collect();
                Ok(if ips.is_empty() {
                    Resolved::NxDomain
                } else {
                    Resolved::Ips(ips)
                })
            }
            // getaddrinfo folds every failure into one io::Error; only
            // EAI_AGAIN is worth retrying on the next tick.
            Err(e) if e.to_string().contains("Temporary failure") => {
                Err(BackendUnavailable(e.to_string()))
            }
            Err(_) => Ok(Resolved::NxDomain),
        }
    }
}

/// Plain GET `/` over HTTP, retried over HTTPS when the connection fails.
pub struct HttpProber {
    agent: ureq::Agent,
}

impl HttpProber {
    pub fn new(timeout: Duration, max_redirects: u32) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .max_redirects(max_redirects)
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }

    fn get(&self, url: &str) -> ProbeReply {
        match self.agent.get(url).call() {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                let mut body_prefix = Vec::new();
                if let Err(e) = resp
                    .body_mut()
                    .as_reader()
                    .take(BODY_PREFIX_LEN)
                    .read_to_end(&mut body_prefix)
                {
                    return ProbeReply::Failed(format!("body: {e}"));
                }
                ProbeReply::Response {
                    status,
                    body_prefix,
                }
            }
            Err(ureq::Error::Timeout(_)) => ProbeReply::Timeout,
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::ConnectionRefused => {
                ProbeReply::Refused
            }
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::TimedOut => {
                ProbeReply::Timeout
            }
            Err(e) => ProbeReply::Failed(e.to_string()),
        }
    }
}

impl Default for HttpProber {
    fn default() -> Self {
        Self::new(Duration::from_secs(10), 5)
    }
}

impl Prober for HttpProber {
    fn probe(
        &self,
        domain: &str,
        _ips: &BTreeSet<IpAddr>,
        _nominal: DateTime<Utc>,
    ) -> Result<ProbeReply, BackendUnavailable> {
        let plain = self.get(&format!("http://{domain}/"));
        if matches!(plain, ProbeReply::Response { .. }) {
            return Ok(plain);
        }
        match self.get(&format!("https://{domain}/")) {
            r @ ProbeReply::Response { .. } => Ok(r),
            _ => Ok(plain),
        }
    }
}

/// Port-43 client starting at IANA and following up to two referrals.
pub struct WhoisClient {
    pub root: String,
    pub timeout: Duration,
}

impl Default for WhoisClient {
    fn default() -> Self {
        Self {
            root: "whois.iana.org".into(),
            timeout: Duration::from_secs(10),
        }
    }
}

impl WhoisClient {
    fn query(&self, server: &str, domain: &str) -> std::io::Result<String> {
        let addr = (server, 43u16)
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, server.to_string()))?;
        let mut s = TcpStream::connect_timeout(&addr, self.timeout)?;
        s.set_read_timeout(Some(self.timeout))?;
        s.write_all(format!("{domain}\r\n").as_bytes())?;
        let mut buf = Vec::new();
        s.take(1 << 20).read_to_end(&mut buf)?;
        Ok(String::from_utf8_lossy(&buf).into_owned())
    }
}

impl WhoisSource for WhoisClient {
    fn lookup(&self, domain: &str) -> Result<Option<WhoisRecord>, BackendUnavailable> {
        let mut server = self.root.clone();
        let mut best = None;
        for _ in 0..3 {
            let text = self
                .query(&server, domain)
                .map_err(|e| BackendUnavailable(format!("{server}: {e}")))?;
            if let Some(r) = parse_whois(&text) {
                best = Some(r);
            }
            match referral(&text) {
                Some(next) if !next.eq_ignore_ascii_case(&server) => server = next,
                _ => break,
            }
        }
        Ok(best)
    }
}

fn field<'a>(text: &'a str, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| {
        text.lines().find_map(|line| {
            let (name, value) = line.trim().split_once(':')?;
            let value = value.trim();
            (name.trim().eq_ignore_ascii_case(k) && !value.is_empty()).then_some(value)
        })
    })
}

fn referral(text: &str) -> Option<String> {
    field(text, &["refer", "registrar whois server", "whois"])
        .map(|s| s.trim_start_matches("whois://").to_string())
}

/// Extract registrar, registrant country and creation date from a raw
/// WHOIS response. `None` when neither registrar nor country is present.
pub fn parse_whois(text: &str) -> Option<WhoisRecord> {
    let registrant = field(
        text,
        &[
            "registrar",
            "sponsoring registrar",
            "registrant organization",
        ],
    );
    let country = field(text, &["registrant country", "country"]);
    if registrant.is_none() && country.is_none() {
        return None;
    }
    let created = field(
        text,
        &[
            "creation date",
            "registration time",
            "created",
            "registered on",
        ],
    )
    .and_then(|v| v.get(..10))
    .and_then(|v| NaiveDate::parse_from_str(v, "%Y-%m-%d").ok());
    Some(WhoisRecord {
        registrant: registrant.unwrap_or("unknown").to_string(),
        country: country.unwrap_or("unknown").to_string(),
        created,
    })
}

/// Caches answers of another source as one JSON file per domain.
pub struct WhoisCache<S> {
    dir: PathBuf,
    inner: S,
}

impl<S: WhoisSource> WhoisCache<S> {
    pub fn new(dir: impl Into<PathBuf>, inner: S) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, inner })
    }
}

impl<S: WhoisSource> WhoisSource for WhoisCache<S> {
    fn lookup(&self, domain: &str) -> Result<Option<WhoisRecord>, BackendUnavailable> {
        let path = self.dir.join(format!("{}.json", file_stem(domain)));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(cached) = serde_json::from_str(&text) {
                return Ok(cached);
            }
        }
        let answer = self.inner.lookup(domain)?;
        let json = serde_json::to_string(&answer).expect("whois record serializes");
        fs::write(&path, json)
            .map_err(|e| BackendUnavailable(format!("cache {}: {e}", path.display())))?;
        Ok(answer)
    }
}

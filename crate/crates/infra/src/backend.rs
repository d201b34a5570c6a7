//! Backend interfaces plus deterministic scripted implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeline::{DeadReason, ProbeOutcome, Resolved, WhoisRecord};

/// The backend could not answer at all. Recorded as a gap, not a death.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("backend unavailable: {0}")]
pub struct BackendUnavailable(pub String);

pub trait Resolver: Sync {
    fn resolve(&self, domain: &str, nominal: DateTime<Utc>)
        -> Result<Resolved, BackendUnavailable>;
}

/// Raw prober answer before the liveness rule is applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeReply {
    Response { status: u16, body_prefix: Vec<u8> },
    Timeout,
    Refused,
    Failed(String),
}

pub trait Prober: Sync {
    fn probe(
        &self,
        domain: &str,
        ips: &BTreeSet<IpAddr>,
        nominal: DateTime<Utc>,
    ) -> Result<ProbeReply, BackendUnavailable>;
}

pub trait WhoisSource: Sync {
    fn lookup(&self, domain: &str) -> Result<Option<WhoisRecord>, BackendUnavailable>;
}

/// Country of an address, or `None` when the database has no range for it.
pub trait GeoLookup {
    fn country(&self, ip: IpAddr) -> Option<&str>;
}

/// Supplies the actual completion time of work done for a nominal tick.
pub trait Clock: Sync {
    fn now(&self, nominal: DateTime<Utc>) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self, _nominal: DateTime<Utc>) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Actual time is the nominal tick plus a fixed latency.
pub struct FixedLatency(pub Duration);

impl Clock for FixedLatency {
    fn now(&self, nominal: DateTime<Utc>) -> DateTime<Utc> {
        nominal + self.0
    }
}

/// Alive iff the status is below `alive_below` and, when `require_body`,
/// the body is non-empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LivenessRule {
    pub alive_below: u16,
    pub require_body: bool,
}

impl Default for LivenessRule {
    fn default() -> Self {
        Self {
            alive_below: 500,
            require_body: true,
        }
    }
}

impl LivenessRule {
    pub fn classify(&self, reply: &ProbeReply) -> ProbeOutcome {
        let reason = match reply {
            ProbeReply::Response {
                status,
                body_prefix,
            } => {
                if *status >= self.alive_below {
                    DeadReason::ServerError(*status)
                } else if self.require_body && body_prefix.is_empty() {
                    DeadReason::EmptyBody(*status)
                } else {
                    return ProbeOutcome::Alive {
                        status_class: (status / 100) as u8,
                    };
                }
            }
            ProbeReply::Timeout => DeadReason::Timeout,
            ProbeReply::Refused => DeadReason::Refused,
            ProbeReply::Failed(e) => DeadReason::Failed(e.clone()),
        };
        ProbeOutcome::Dead { reason }
    }
}

/// Step function per domain: each answer holds from its start time until
/// the next one. Before the first step a domain is NXDOMAIN.
#[derive(Debug, Clone, Default)]
pub struct ScriptedResolver {
    steps: BTreeMap<String, BTreeMap<DateTime<Utc>, Resolved>>,
    outages: BTreeSet<(String, DateTime<Utc>)>,
}

impl ScriptedResolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn answer(&mut self, domain: &str, from: DateTime<Utc>, ips: &[&str]) -> &mut Self {
        let set = ips
            .iter()
            .map(|s| s.parse().expect("scripted IP literal"))
            .collect();
        self.steps
            .entry(domain.into())
            .or_default()
            .insert(from, Resolved::Ips(set));
        self
    }

    pub fn nxdomain(&mut self, domain: &str, from: DateTime<Utc>) -> &mut Self {
        self.steps
            .entry(domain.into())
            .or_default()
            .insert(from, Resolved::NxDomain);
        self
    }

    /// Make the lookup for `domain` at exactly this tick fail.
    pub fn outage(&mut self, domain: &str, nominal: DateTime<Utc>) -> &mut Self {
        self.outages.insert((domain.into(), nominal));
        self
    }
}

impl Resolver for ScriptedResolver {
    fn resolve(
        &self,
        domain: &str,
        nominal: DateTime<Utc>,
    ) -> Result<Resolved, BackendUnavailable> {
        if self.outages.contains(&(domain.to_string(), nominal)) {
            return Err(BackendUnavailable(format!("scripted outage for {domain}")));
        }
        Ok(self
            .steps
            .get(domain)
            .and_then(|s| s.range(..=nominal).next_back())
            .map(|(_, r)| r.clone())
            .unwrap_or(Resolved::NxDomain))
    }
}

/// Answers 200 with a short body unless a step says otherwise.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProber {
    steps: BTreeMap<String, BTreeMap<DateTime<Utc>, ProbeReply>>,
}

impl ScriptedProber {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reply(&mut self, domain: &str, from: DateTime<Utc>, reply: ProbeReply) -> &mut Self {
        self.steps
            .entry(domain.into())
            .or_default()
            .insert(from, reply);
        self
    }
}

impl Prober for ScriptedProber {
    fn probe(
        &self,
        domain: &str,
        _ips: &BTreeSet<IpAddr>,
        nominal: DateTime<Utc>,
    ) -> Result<ProbeReply, BackendUnavailable> {
        Ok(self
            .steps
            .get(domain)
            .and_then(|s| s.range(..=nominal).next_back())
            .map(|(_, r)| r.clone())
            .unwrap_or(ProbeReply::Response {
                status: 200,
                body_prefix: b"<html></html>".to_vec(),
            }))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScriptedWhois {
    pub records: BTreeMap<String, WhoisRecord>,
}

impl WhoisSource for ScriptedWhois {
    fn lookup(&self, domain: &str) -> Result<Option<WhoisRecord>, BackendUnavailable> {
        Ok(self.records.get(domain).cloned())
    }
}

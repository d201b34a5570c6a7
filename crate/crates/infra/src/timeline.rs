//! Per-domain observation history.

use std::collections::BTreeSet;
use std::net::IpAddr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimelineError {
    #[error("{domain}: {kind} at {ts} is not after the previous {kind}")]
    OutOfOrder {
        domain: String,
        kind: &'static str,
        ts: DateTime<Utc>,
    },
    #[error("{domain}: alive probe at {ts} without a prior resolved address")]
    AliveWithoutResolution { domain: String, ts: DateTime<Utc> },
}

/// Answer of one DNS lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolved {
    Ips(BTreeSet<IpAddr>),
    NxDomain,
}

impl Resolved {
    pub fn ips(&self) -> Option<&BTreeSet<IpAddr>> {
        match self {
            Resolved::Ips(s) if !s.is_empty() => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    /// Actual time the lookup completed.
    pub ts: DateTime<Utc>,
    /// Scheduled tick this lookup belongs to.
    pub nominal: DateTime<Utc>,
    pub result: Resolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadReason {
    NxDomain,
    Timeout,
    Refused,
    ServerError(u16),
    EmptyBody(u16),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    /// HTTP status class, e.g. 2 for 2xx.
    Alive {
        status_class: u8,
    },
    Dead {
        reason: DeadReason,
    },
}

impl ProbeOutcome {
    pub fn is_alive(&self) -> bool {
        matches!(self, ProbeOutcome::Alive { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub ts: DateTime<Utc>,
    pub nominal: DateTime<Utc>,
    pub outcome: ProbeOutcome,
    /// Leading bytes of the response body, lossily decoded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhoisRecord {
    pub registrant: String,
    pub country: String,
    pub created: Option<NaiveDate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Resolve,
    Probe,
    Whois,
}

/// A tick whose backend call failed. Kept so nothing is silently dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub ts: DateTime<Utc>,
    pub nominal: DateTime<Utc>,
    pub stage: Stage,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DomainTimeline {
    pub domain: String,
    pub resolutions: Vec<Resolution>,
    pub probes: Vec<Probe>,
    pub whois: Option<WhoisRecord>,
    pub gaps: Vec<Gap>,
}

impl DomainTimeline {
    pub fn new(domain: impl Into<String>) -> Self {
        Self {
            domain: domain.into(),
            ..Default::default()
        }
    }

    pub fn push_resolution(&mut self, r: Resolution) -> Result<(), TimelineError> {
        if self.resolutions.last().is_some_and(|p| p.ts >= r.ts) {
            return Err(self.out_of_order("resolution", r.ts));
        }
        self.resolutions.push(r);
        Ok(())
    }

    pub fn push_probe(&mut self, p: Probe) -> Result<(), TimelineError> {
        if self.probes.last().is_some_and(|q| q.ts >= p.ts) {
            return Err(self.out_of_order("probe", p.ts));
        }
        if p.outcome.is_alive()
            && self
                .resolution_at(p.ts)
                .and_then(|r| r.result.ips())
                .is_none()
        {
            return Err(TimelineError::AliveWithoutResolution {
                domain: self.domain.clone(),
                ts: p.ts,
            });
        }
        self.probes.push(p);
        Ok(())
    }

    pub fn push_gap(&mut self, g: Gap) {
        self.gaps.push(g);
    }

    /// Latest resolution at or before `ts`.
    pub fn resolution_at(&self, ts: DateTime<Utc>) -> Option<&Resolution> {
        let i = self.resolutions.partition_point(|r| r.ts <= ts);
        i.checked_sub(1).map(|i| &self.resolutions[i])
    }

    /// Most recent tick with any recorded event.
    pub fn last_nominal(&self) -> Option<DateTime<Utc>> {
        let r = self.resolutions.last().map(|r| r.nominal);
        let p = self.probes.last().map(|p| p.nominal);
        let g = self.gaps.iter().map(|g| g.nominal).max();
        r.max(p).max(g)
    }

    pub fn is_empty(&self) -> bool {
        self.resolutions.is_empty() && self.probes.is_empty()
    }

    /// Every address the domain ever resolved to.
    pub fn distinct_ips(&self) -> BTreeSet<IpAddr> {
        self.resolutions
            .iter()
            .filter_map(|r| r.result.ips())
            .flatten()
            .copied()
            .collect()
    }

    fn out_of_order(&self, kind: &'static str, ts: DateTime<Utc>) -> TimelineError {
        TimelineError::OutOfOrder {
            domain: self.domain.clone(),
            kind,
            ts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(d: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 3, d, 0, 0, 0).unwrap()
    }

    #[test]
    fn rejects_out_of_order_and_unbacked_alive() {
        let mut tl = DomainTimeline::new("a.top");
        let alive = |d| Probe {
            ts: t(d),
            nominal: t(d),
            outcome: ProbeOutcome::Alive { status_class: 2 },
            body_prefix: None,
        };
        assert!(matches!(
            tl.push_probe(alive(1)),
            Err(TimelineError::AliveWithoutResolution { .. })
        ));
        let res = |d, r| Resolution {
            ts: t(d),
            nominal: t(d),
            result: r,
        };
        tl.push_resolution(res(2, Resolved::NxDomain)).unwrap();
        assert!(tl.push_probe(alive(2)).is_err());
        tl.push_resolution(res(3, Resolved::Ips(["1.2.3.4".parse().unwrap()].into())))
            .unwrap();
        tl.push_probe(alive(3)).unwrap();
        assert!(matches!(
            tl.push_probe(alive(3)),
            Err(TimelineError::OutOfOrder { kind: "probe", .. })
        ));
        assert!(tl.push_resolution(res(1, Resolved::NxDomain)).is_err());
        assert_eq!(tl.last_nominal(), Some(t(3)));
    }

    #[test]
    fn empty_ip_set_counts_as_unresolved() {
        assert!(Resolved::Ips(BTreeSet::new()).ips().is_none());
    }
}

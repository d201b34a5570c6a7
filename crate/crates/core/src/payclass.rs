//! Payment-session classification: licensed third-party service versus
//! fourth-party aggregator, and the underlying money channel.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rounding::Dec2;

/// Observations needed before committing to a service kind.
pub const MIN_OBSERVATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    ThirdPartyRail,
    BankTransfer,
    DigitalCurrency,
    Unknown,
}

impl Channel {
    /// Tie-break order for the majority vote.
    pub const PRIORITY: [Channel; 4] = [
        Channel::ThirdPartyRail,
        Channel::BankTransfer,
        Channel::DigitalCurrency,
        Channel::Unknown,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentObservation {
    pub session_id: String,
    pub request_index: u32,
    pub amount: f64,
    pub payment_domain: String,
    pub recipient_id: String,
    #[serde(default = "unknown_channel")]
    pub channel_hint: Channel,
}

fn unknown_channel() -> Channel {
    Channel::Unknown
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ServiceKind {
    ThirdParty,
    FourthParty,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentClassification {
    pub session_id: String,
    pub service_kind: ServiceKind,
    pub channel: Channel,
    pub evidence: Vec<String>,
}

#[derive(Debug, Error)]
pub enum PayError {
    #[error("session has no observations")]
    EmptySession,
    #[error("observations belong to more than one session")]
    MixedSessions,
    #[error("session `{0}`: request_index values are not distinct")]
    DuplicateIndex(String),
    #[error("session `{0}`: amount must be a positive number")]
    BadAmount(String),
    #[error("invalid pattern `{0}`: {1}")]
    BadPattern(String, regex::Error),
    #[error("line {line}: {source}")]
    BadRecord {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Domains operated by licensed third-party payment services.
#[derive(Debug, Clone, Default)]
pub struct LicensedDb {
    domains: HashSet<String>,
}

impl LicensedDb {
    /// One domain per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let domains = text
            .lines()
            .map(|l| {
                l.split('#')
                    .next()
                    .unwrap_or("")
                    .trim()
                    .trim_end_matches('.')
                    .to_ascii_lowercase()
            })
            .filter(|l| !l.is_empty())
            .collect();
        Self { domains }
    }

    pub fn from_domains<I: IntoIterator<Item = S>, S: AsRef<str>>(domains: I) -> Self {
        Self {
            domains: domains
                .into_iter()
                .map(|d| d.as_ref().to_ascii_lowercase())
                .collect(),
        }
    }

    /// `domain` or one of its parent domains is listed.
    pub fn contains(&self, domain: &str) -> bool {
        let d = domain.trim().trim_end_matches('.').to_ascii_lowercase();
        let mut rest = d.as_str();
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

/// Recipient-identifier shapes that indicate a digital-currency address.
#[derive(Debug, Clone)]
pub struct ChannelPatterns {
    patterns: Vec<Regex>,
}

pub const DEFAULT_CURRENCY_PATTERNS: [&str; 4] = [
    // legacy and P2SH base58check
    r"^[13][a-km-zA-HJ-NP-Z1-9]{25,34}$",
    // bech32 segwit
    r"^(?i:bc1|tb1)[02-9ac-hj-np-z]{11,71}$",
    // account-style hex address
    r"^0x[0-9a-fA-F]{40}$",
    // base58 account prefixed with T
    r"^T[1-9A-HJ-NP-Za-km-z]{33}$",
];

impl Default for ChannelPatterns {
    fn default() -> Self {
        Self::new(DEFAULT_CURRENCY_PATTERNS).expect("default patterns compile")
    }
}

impl ChannelPatterns {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(patterns: I) -> Result<Self, PayError> {
        let patterns = patterns
            .into_iter()
            .map(|p| {
                Regex::new(p.as_ref()).map_err(|e| PayError::BadPattern(p.as_ref().to_string(), e))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { patterns })
    }

    pub fn is_currency_address(&self, recipient: &str) -> bool {
        let r = recipient.trim();
        self.patterns.iter().any(|p| p.is_match(r))
    }
}

fn majority_channel(obs: &[PaymentObservation], patterns: &ChannelPatterns) -> Channel {
    let mut counts: BTreeMap<Channel, usize> = BTreeMap::new();
    for o in obs {
        let hint = match o.channel_hint {
            Channel::Unknown if patterns.is_currency_address(&o.recipient_id) => {
                Channel::DigitalCurrency
            }
            h => h,
        };
        *counts.entry(hint).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    Channel::PRIORITY
        .into_iter()
        .find(|c| counts.get(c).copied() == Some(best))
        .unwrap_or(Channel::Unknown)
}

/// Classify one session's observations.
pub fn classify_session(
    obs: &[PaymentObservation],
    licensed: &LicensedDb,
    patterns: &ChannelPatterns,
) -> Result<PaymentClassification, PayError> {
    let first = obs.first().ok_or(PayError::EmptySession)?;
    let session_id = first.session_id.clone();
    if obs.iter().any(|o| o.session_id != session_id) {
        return Err(PayError::MixedSessions);
    }
    let indices: BTreeSet<u32> = obs.iter().map(|o| o.request_index).collect();
    if indices.len() != obs.len() {
        return Err(PayError::DuplicateIndex(session_id));
    }
    if obs
        .iter()
        .any(|o| !(o.amount.is_finite() && o.amount > 0.0))
    {
        return Err(PayError::BadAmount(session_id));
    }
    let mut sorted = obs.to_vec();
    sorted.sort_by_key(|o| o.request_index);

    let recipients: BTreeSet<&str> = sorted.iter().map(|o| o.recipient_id.trim()).collect();
    let domains: BTreeSet<String> = sorted
        .iter()
        .map(|o| o.payment_domain.trim().to_ascii_lowercase())
        .collect();
    let all_licensed = domains.iter().all(|d| licensed.contains(d));
    let channel = majority_channel(&sorted, patterns);

    let mut evidence = vec![
        format!("observations={}", sorted.len()),
        format!("distinct_recipients={}", recipients.len()),
        format!("licensed_domain={all_licensed}"),
    ];
    let service_kind = if sorted.len() < MIN_OBSERVATIONS {
        evidence.push(format!("fewer than {MIN_OBSERVATIONS} observations"));
        ServiceKind::Indeterminate
    } else if recipients.len() >= 2 {
        evidence.push("recipient changed between requests".into());
        ServiceKind::FourthParty
    } else if all_licensed {
        evidence.push("licensed domain with a single merchant".into());
        ServiceKind::ThirdParty
    } else {
        evidence.push("unlicensed domain with a single recipient".into());
        ServiceKind::Indeterminate
    };
    Ok(PaymentClassification {
        session_id,
        service_kind,
        channel,
        evidence,
    })
}

/// Classify every session in a mixed observation list, ordered by session id.
pub fn classify_all(
    obs: &[PaymentObservation],
    licensed: &LicensedDb,
    patterns: &ChannelPatterns,
) -> Result<Vec<PaymentClassification>, PayError> {
    let mut sessions: BTreeMap<&str, Vec<PaymentObservation>> = BTreeMap::new();
    for o in obs {
        sessions
            .entry(o.session_id.as_str())
            .or_default()
            .push(o.clone());
    }
    sessions
        .values()
        .map(|s| classify_session(s, licensed, patterns))
        .collect()
}

pub fn read_observations_jsonl(reader: impl BufRead) -> Result<Vec<PaymentObservation>, PayError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| PayError::BadRecord {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelShare {
    pub count: usize,
    pub percent: Dec2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelBreakdown {
    pub fourth_party_sessions: usize,
    /// ThirdPartyRail, BankTransfer and DigitalCurrency.
    pub channels: BTreeMap<Channel, ChannelShare>,
    pub unknown: ChannelShare,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

/// Channel distribution over fourth-party sessions. Percentages use all
/// fourth-party sessions, including those with an unknown channel, as the
/// denominator.
pub fn channel_breakdown(classifications: &[PaymentClassification]) -> ChannelBreakdown {
    let fourth: Vec<&PaymentClassification> = classifications
        .iter()
        .filter(|c| c.service_kind == ServiceKind::FourthParty)
        .collect();
    let n = fourth.len();
    let share = |ch: Channel| {
        let count = fourth.iter().filter(|c| c.channel == ch).count();
        ChannelShare {
            count,
            percent: Dec2::percent(count as i64, n as i64),
        }
    };
    if n == 0 {
        return ChannelBreakdown {
            fourth_party_sessions: 0,
            channels: BTreeMap::new(),
            unknown: ChannelShare {
                count: 0,
                percent: Dec2::default(),
            },
            notice: Some("no fourth-party sessions to break down".into()),
        };
    }
    ChannelBreakdown {
        fourth_party_sessions: n,
        channels: [
            Channel::ThirdPartyRail,
            Channel::BankTransfer,
            Channel::DigitalCurrency,
        ]
        .into_iter()
        .map(|c| (c, share(c)))
        .collect(),
        unknown: share(Channel::Unknown),
        notice: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(
        session: &str,
        i: u32,
        domain: &str,
        recipient: &str,
        hint: Channel,
    ) -> PaymentObservation {
        PaymentObservation {
            session_id: session.into(),
            request_index: i,
            amount: 10.0 + f64::from(i),
            payment_domain: domain.into(),
            recipient_id: recipient.into(),
            channel_hint: hint,
        }
    }

    fn licensed() -> LicensedDb {
        LicensedDb::parse("# licensed\nalipay.com\n")
    }

    #[test]
    fn stable_licensed_is_third_party() {
        let s: Vec<_> = (0..3)
            .map(|i| obs("s", i, "pay.alipay.com", "shop-1", Channel::ThirdPartyRail))
            .collect();
        let c = classify_session(&s, &licensed(), &ChannelPatterns::default()).unwrap();
        assert_eq!(c.service_kind, ServiceKind::ThirdParty);
        assert_eq!(c.channel, Channel::ThirdPartyRail);
    }

    #[test]
    fn rotating_recipients_are_fourth_party() {
        let s: Vec<_> = (0..3)
            .map(|i| {
                obs(
                    "s",
                    i,
                    "pay.alipay.com",
                    &format!("acct-{i}"),
                    Channel::BankTransfer,
                )
            })
            .collect();
        let c = classify_session(&s, &licensed(), &ChannelPatterns::default()).unwrap();
        assert_eq!(c.service_kind, ServiceKind::FourthParty);
        assert_eq!(c.channel, Channel::BankTransfer);
    }

    #[test]
    fn single_observation_indeterminate() {
        let s = [obs("s", 0, "x.top", "a", Channel::Unknown)];
        let c = classify_session(&s, &licensed(), &ChannelPatterns::default()).unwrap();
        assert_eq!(c.service_kind, ServiceKind::Indeterminate);
    }

    #[test]
    fn empty_and_malformed_sessions() {
        let p = ChannelPatterns::default();
        assert!(matches!(
            classify_session(&[], &licensed(), &p),
            Err(PayError::EmptySession)
        ));
        let dup = [
            obs("s", 1, "a", "r", Channel::Unknown),
            obs("s", 1, "a", "r", Channel::Unknown),
        ];
        assert!(matches!(
            classify_session(&dup, &licensed(), &p),
            Err(PayError::DuplicateIndex(_))
        ));
        let mut neg = obs("s", 0, "a", "r", Channel::Unknown);
        neg.amount = -1.0;
        assert!(matches!(
            classify_session(&[neg], &licensed(), &p),
            Err(PayError::BadAmount(_))
        ));
    }

    #[test]
    fn currency_address_overrides_unknown() {
        let addrs = [
            "1BoatSLRHtKNngkdXEeobR76b53LETtpyT",
            "bc1qar0srrr7xfkvy5l643lydnw9re59gtzzwf5mdq",
            "0x52908400098527886E0F7030069857D2E4169EE7",
        ];
        let s: Vec<_> = addrs
            .iter()
            .enumerate()
            .map(|(i, a)| obs("s", i as u32, "c.top", a, Channel::Unknown))
            .collect();
        let c = classify_session(&s, &licensed(), &ChannelPatterns::default()).unwrap();
        assert_eq!(c.channel, Channel::DigitalCurrency);
        assert_eq!(c.service_kind, ServiceKind::FourthParty);
    }

    #[test]
    fn tie_prefers_rail_then_bank() {
        let s = [
            obs("s", 0, "a", "r", Channel::BankTransfer),
            obs("s", 1, "a", "r", Channel::ThirdPartyRail),
        ];
        let c = classify_session(&s, &licensed(), &ChannelPatterns::default()).unwrap();
        assert_eq!(c.channel, Channel::ThirdPartyRail);
    }

    #[test]
    fn empty_breakdown_has_notice() {
        let b = channel_breakdown(&[]);
        assert!(b.channels.is_empty() && b.notice.is_some());
    }
}

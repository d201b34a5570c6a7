//! Domain-to-IP binding classification.

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use chrono::{DateTime, Utc};
use culprit_core::report::Table;
use culprit_core::rounding::Dec2;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::timeline::{DomainTimeline, Resolved};

const DAY_SECS: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BindingKind {
    Fixed,
    FlexibleTypeI,
    FlexibleTypeII,
}

/// Maximal run of identical resolved address sets. `to` is the time the
/// next different answer was seen, or the last observation of the run
/// when nothing followed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingSegment {
    pub ips: BTreeSet<IpAddr>,
    pub from: DateTime<Utc>,
    pub to: DateTime<Utc>,
}

impl BindingSegment {
    pub fn seconds(&self) -> i64 {
        (self.to - self.from).num_seconds()
    }

    fn overlaps(&self, other: &BindingSegment) -> bool {
        self.from <= other.to && other.from <= self.to
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingClassification {
    pub domain: String,
    pub kind: BindingKind,
    pub mean_binding_days: Ratio<i64>,
    pub binding_segments: Vec<BindingSegment>,
    /// Other domains that resolved to one of this domain's addresses.
    pub shared_with: BTreeSet<String>,
    pub shared_same_period: bool,
    pub shared_different_period: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingSummary {
    pub classified: usize,
    pub fixed: usize,
    pub flexible_type_i: usize,
    pub flexible_type_ii: usize,
    /// Domains that never resolved; they have no binding to classify.
    pub unresolved: Vec<String>,
    pub flexible_percent: Dec2,
    /// Pooled over every segment of every flexible domain.
    pub mean_binding_days: Option<Ratio<i64>>,
}

impl BindingSummary {
    pub fn mean_binding_days_dec(&self) -> Option<Dec2> {
        self.mean_binding_days
            .map(|r| Dec2::ratio(*r.numer(), *r.denom()))
    }
}

/// Run-length encode a timeline's resolved address sets.
pub fn segments(t: &DomainTimeline) -> Vec<BindingSegment> {
    let mut out = Vec::new();
    let mut cur: Option<(BTreeSet<IpAddr>, DateTime<Utc>, DateTime<Utc>)> = None;
    for r in &t.resolutions {
        match &r.result {
            Resolved::Ips(s) if !s.is_empty() => match &mut cur {
                Some((ips, _, last)) if ips == s => *last = r.ts,
                _ => {
                    if let Some((ips, from, _)) = cur.take() {
                        out.push(BindingSegment {
                            ips,
                            from,
                            to: r.ts,
                        });
                    }
                    cur = Some((s.clone(), r.ts, r.ts));
                }
            },
            _ => {
                if let Some((ips, from, _)) = cur.take() {
                    out.push(BindingSegment {
                        ips,
                        from,
                        to: r.ts,
                    });
                }
            }
        }
    }
    if let Some((ips, from, last)) = cur {
        out.push(BindingSegment {
            ips,
            from,
            to: last,
        });
    }
    out
}

fn mean_days(segs: &[BindingSegment]) -> Ratio<i64> {
    let secs: i64 = segs.iter().map(BindingSegment::seconds).sum();
    Ratio::new(secs, DAY_SECS * segs.len().max(1) as i64)
}

pub fn classify_bindings(
    timelines: &[DomainTimeline],
) -> (Vec<BindingClassification>, BindingSummary) {
    let mut unresolved = Vec::new();
    let mut segs: BTreeMap<&str, Vec<BindingSegment>> = BTreeMap::new();
    for t in timelines {
        let s = segments(t);
        if s.is_empty() {
            unresolved.push(t.domain.clone());
        } else {
            segs.insert(t.domain.as_str(), s);
        }
    }
    unresolved.sort();

    let mut by_ip: BTreeMap<IpAddr, Vec<(&str, &BindingSegment)>> = BTreeMap::new();
    for (d, ss) in &segs {
        for s in ss {
            for ip in &s.ips {
                by_ip.entry(*ip).or_default().push((d, s));
            }
        }
    }

    let mut out = Vec::new();
    for (d, ss) in &segs {
        let distinct: BTreeSet<&IpAddr> = ss.iter().flat_map(|s| &s.ips).collect();
        let mut shared_with = BTreeSet::new();
        let (mut same, mut different) = (false, false);
        for s in ss {
            for ip in &s.ips {
                for (other, os) in &by_ip[ip] {
                    if other == d {
                        continue;
                    }
                    shared_with.insert(other.to_string());
                    if s.overlaps(os) {
                        same = true;
                    } else {
                        different = true;
                    }
                }
            }
        }
        let kind = match (distinct.len(), shared_with.is_empty()) {
            (1, _) => BindingKind::Fixed,
            (_, false) => BindingKind::FlexibleTypeI,
            (_, true) => BindingKind::FlexibleTypeII,
        };
        out.push(BindingClassification {
            domain: d.to_string(),
            kind,
            mean_binding_days: mean_days(ss),
            binding_segments: ss.clone(),
            shared_with,
            shared_same_period: same,
            shared_different_period: different,
        });
    }

    let count = |k| out.iter().filter(|c| c.kind == k).count();
    let flexible_segs: Vec<BindingSegment> = out
        .iter()
        .filter(|c| c.kind != BindingKind::Fixed)
        .flat_map(|c| c.binding_segments.iter().cloned())
        .collect();
    let fixed = count(BindingKind::Fixed);
    let summary = BindingSummary {
        classified: out.len(),
        fixed,
        flexible_type_i: count(BindingKind::FlexibleTypeI),
        flexible_type_ii: count(BindingKind::FlexibleTypeII),
        unresolved,
        flexible_percent: Dec2::percent((out.len() - fixed) as i64, out.len() as i64),
        mean_binding_days: (!flexible_segs.is_empty()).then(|| mean_days(&flexible_segs)),
    };
    (out, summary)
}

pub fn binding_table(summary: &BindingSummary) -> Table {
    let mut t = Table::new(["Binding", "Domains", "Percent"]);
    let n = summary.classified as i64;
    for (name, c) in [
        ("Fixed", summary.fixed),
        ("Flexible type I", summary.flexible_type_i),
        ("Flexible type II", summary.flexible_type_ii),
    ] {
        t.push([
            name.to_string(),
            c.to_string(),
            Dec2::percent(c as i64, n).to_string(),
        ]);
    }
    t.push([
        "Mean binding days (flexible)".to_string(),
        summary
            .mean_binding_days_dec()
            .map(|d| d.to_string())
            .unwrap_or_default(),
        String::new(),
    ]);
    t
}

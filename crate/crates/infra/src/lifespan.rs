//! Server lifespans from manifest time to last observed liveness.

use chrono::{DateTime, Utc};
use culprit_core::report::Table;
use culprit_core::rounding::Dec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::Window;
use crate::timeline::DomainTimeline;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LifespanError {
    #[error("{0}: no probes inside the window")]
    EmptyTimeline(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EndKind {
    ObservedDeath,
    StillAliveAtWindowEnd,
    DeadBeforeFirstInspection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub domain: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub end_kind: EndKind,
    pub days: i64,
}

/// Lifespan of a domain's server. Only probes whose nominal tick lies in
/// `window` count. The end is clamped to the start when the manifest is
/// newer than the deciding probe.
pub fn lifespan(
    t: &DomainTimeline,
    manifest_mtime: DateTime<Utc>,
    window: &Window,
) -> Result<LifespanRecord, LifespanError> {
    let probes: Vec<_> = t
        .probes
        .iter()
        .filter(|p| window.contains(p.nominal))
        .collect();
    let (first, last) = match (probes.first(), probes.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(LifespanError::EmptyTimeline(t.domain.clone())),
    };
    let (end, end_kind) = if last.outcome.is_alive() {
        (last.ts, EndKind::StillAliveAtWindowEnd)
    } else if let Some(alive) = probes.iter().rev().find(|p| p.outcome.is_alive()) {
        (alive.ts, EndKind::ObservedDeath)
    } else {
        (first.ts, EndKind::DeadBeforeFirstInspection)
    };
    let end = end.max(manifest_mtime);
    Ok(LifespanRecord {
        domain: t.domain.clone(),
        start: manifest_mtime,
        end,
        end_kind,
        days: (end - manifest_mtime).num_seconds().div_euclid(86_400),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LifespanSummary {
    pub domains: usize,
    pub still_alive: usize,
    pub observed_death: usize,
    pub dead_before_first_inspection: usize,
    pub mean_days: Dec2,
    pub max_days: i64,
}

pub fn summarize(records: &[LifespanRecord]) -> LifespanSummary {
    let count = |k| records.iter().filter(|r| r.end_kind == k).count();
    let total: i64 = records.iter().map(|r| r.days).sum();
    LifespanSummary {
        domains: records.len(),
        still_alive: count(EndKind::StillAliveAtWindowEnd),
        observed_death: count(EndKind::ObservedDeath),
        dead_before_first_inspection: count(EndKind::DeadBeforeFirstInspection),
        mean_days: Dec2::ratio(total, records.len() as i64),
        max_days: records.iter().map(|r| r.days).max().unwrap_or(0),
    }
}

pub fn lifespan_table(records: &[LifespanRecord]) -> Table {
    let mut t = Table::new(["Domain", "Start", "End", "End kind", "Days"]);
    for r in records {
        t.push([
            r.domain.clone(),
            r.start.to_rfc3339(),
            r.end.to_rfc3339(),
            format!("{:?}", r.end_kind),
            r.days.to_string(),
        ]);
    }
    t
}

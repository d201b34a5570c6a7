//! Append-only JSON-lines persistence, one file per domain.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeline::{DomainTimeline, Gap, Probe, Resolution, TimelineError, WhoisRecord};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    BadRecord {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    Resolution(Resolution),
    Probe(Probe),
    Whois(WhoisRecord),
    Gap(Gap),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub ts: DateTime<Utc>,
    #[serde(flatten)]
    pub event: Event,
}

impl EventRecord {
    pub fn new(ts: DateTime<Utc>, event: Event) -> Self {
        Self { ts, event }
    }
}

/// Replay one event onto a timeline, enforcing its invariants.
pub fn apply(t: &mut DomainTimeline, e: Event) -> Result<(), TimelineError> {
    match e {
        Event::Resolution(r) => t.push_resolution(r),
        Event::Probe(p) => t.push_probe(p),
        Event::Whois(w) => {
            t.whois = Some(w);
            Ok(())
        }
        Event::Gap(g) => {
            t.push_gap(g);
            Ok(())
        }
    }
}

/// Filesystem-safe name for a domain.
pub fn file_stem(domain: &str) -> String {
    domain
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TimelineStore {
    dir: PathBuf,
}

impl TimelineStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, domain: &str) -> PathBuf {
        self.dir.join(format!("{}.jsonl", file_stem(domain)))
    }

    pub fn append(&self, domain: &str, events: &[EventRecord]) -> Result<(), StoreError> {
        if events.is_empty() {
            return Ok(());
        }
        let path = self.path_for(domain);
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let mut buf = Vec::new();
        for e in events {
            serde_json::to_writer(&mut buf, e).expect("event serializes");
            buf.push(b'\n');
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io)?;
        f.write_all(&buf).map_err(io)?;
        f.flush().map_err(io)
    }

    /// Rebuild a domain's timeline. A final line without a newline is a
    /// torn write from an interrupted run and is ignored.
    pub fn load(&self, domain: &str) -> Result<DomainTimeline, StoreError> {
        let path = self.path_for(domain);
        let mut t = DomainTimeline::new(domain);
        let text = match fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(t),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        let complete = match text.rfind('\n') {
            Some(i) => &text[..=i],
            None => "",
        };
        for (i, line) in complete.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: EventRecord =
                serde_json::from_str(line).map_err(|source| StoreError::BadRecord {
                    path: path.clone(),
                    line: i + 1,
                    source,
                })?;
            apply(&mut t, rec.event)?;
        }
        Ok(t)
    }

    pub fn load_all<'a>(
        &self,
        domains: impl IntoIterator<Item = &'a str>,
    ) -> Result<BTreeMap<String, DomainTimeline>, StoreError> {
        domains
            .into_iter()
            .map(|d| Ok((d.to_string(), self.load(d)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::Resolved;
    use chrono::TimeZone;

    #[test]
    fn record_layout() {
        let ts = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        let rec = EventRecord::new(
            ts,
            Event::Resolution(Resolution {
                ts,
                nominal: ts,
                result: Resolved::NxDomain,
            }),
        );
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"ts":"2021-01-01T00:00:00Z","kind":"resolution","payload":{"ts":"2021-01-01T00:00:00Z","nominal":"2021-01-01T00:00:00Z","result":"nx_domain"}}"#
        );
        assert_eq!(serde_json::from_str::<EventRecord>(&json).unwrap(), rec);
    }

    #[test]
    fn torn_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let store = TimelineStore::open(dir.path()).unwrap();
        let ts = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        let ev = EventRecord::new(
            ts,
            Event::Resolution(Resolution {
                ts,
                nominal: ts,
                result: Resolved::NxDomain,
            }),
        );
        store.append("a.top", &[ev]).unwrap();
        let mut f = OpenOptions::new()
            .append(true)
            .open(store.path_for("a.top"))
            .unwrap();
        f.write_all(br#"{"ts":"2021-01-02T00:00:00Z","kind":"reso"#)
            .unwrap();
        assert_eq!(store.load("a.top").unwrap().resolutions.len(), 1);
        assert!(store.load("missing.top").unwrap().is_empty());
        assert_eq!(file_stem("a/b c.top"), "a_b_c.top");
    }
}

//! Nominal-tick monitoring loop.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Clock, LivenessRule, ProbeReply, Prober, Resolver, WhoisSource};
use crate::store::{apply, Event, EventRecord, StoreError, TimelineStore};
use crate::timeline::{
    DeadReason, DomainTimeline, Gap, Probe, ProbeOutcome, Resolution, Stage, TimelineError,
};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("window start {start} is not before end {end}")]
    EmptyWindow {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    #[error("cadence of {0}s is shorter than one day")]
    CadenceTooShort(i64),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

/// Monitoring window, start inclusive and end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Window {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self, ScheduleError> {
        if start >= end {
            return Err(ScheduleError::EmptyWindow { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

/// Nominal tick times `start, start + cadence, ...` strictly before `end`.
pub fn ticks(window: &Window, cadence: Duration) -> Result<Vec<DateTime<Utc>>, ScheduleError> {
    if window.start >= window.end {
        return Err(ScheduleError::EmptyWindow {
            start: window.start,
            end: window.end,
        });
    }
    if cadence < Duration::days(1) {
        return Err(ScheduleError::CadenceTooShort(cadence.num_seconds()));
    }
    let mut out = Vec::new();
    let mut t = window.start;
    while t < window.end {
        out.push(t);
        t += cadence;
    }
    Ok(out)
}

#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub resolver: &'a dyn Resolver,
    pub prober: &'a dyn Prober,
    pub whois: Option<&'a dyn WhoisSource>,
    pub clock: &'a dyn Clock,
    pub liveness: LivenessRule,
}

/// Resumable monitor over a fixed domain set. Each tick fans out across
/// domains; results are then appended one domain at a time.
pub struct Monitor<'a> {
    window: Window,
    cadence: Duration,
    backends: Backends<'a>,
    store: Option<TimelineStore>,
    timelines: BTreeMap<String, DomainTimeline>,
    whois_done: BTreeSet<String>,
}

impl<'a> Monitor<'a> {
    /// Load any persisted history for `domains` and prepare to continue it.
    pub fn new<I, S>(
        domains: I,
        window: Window,
        cadence: Duration,
        backends: Backends<'a>,
        store: Option<TimelineStore>,
    ) -> Result<Self, ScheduleError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ticks(&window, cadence)?;
        let mut timelines = BTreeMap::new();
        for d in domains {
            let d: String = d.into();
            let t = match &store {
                Some(s) => s.load(&d)?,
                None => DomainTimeline::new(d.clone()),
            };
            timelines.insert(d, t);
        }
        let whois_done = timelines
            .values()
            .filter(|t| t.whois.is_some())
            .map(|t| t.domain.clone())
            .collect();
        Ok(Self {
            window,
            cadence,
            backends,
            store,
            timelines,
            whois_done,
        })
    }

    pub fn timelines(&self) -> &BTreeMap<String, DomainTimeline> {
        &self.timelines
    }

    pub fn into_timelines(self) -> BTreeMap<String, DomainTimeline> {
        self.timelines
    }

    /// Run every tick at or before `now` that a domain has not yet
    /// recorded. Returns the number of domain-ticks executed.
    pub fn run_due(&mut self, now: DateTime<Utc>) -> Result<usize, ScheduleError> {
        let mut ran = 0;
        for tick in ticks(&self.window, self.cadence)? {
            if tick > now {
                break;
            }
            let due: Vec<&DomainTimeline> = self
                .timelines
                .values()
                .filter(|t| t.last_nominal().is_none_or(|n| n < tick))
                .collect();
            let backends = self.backends;
            let whois_done = &self.whois_done;
            let results: Vec<(String, Vec<EventRecord>)> = due
                .par_iter()
                .map(|t| {
                    (
                        t.domain.clone(),
                        run_tick(t, tick, &backends, !whois_done.contains(&t.domain)),
                    )
                })
                .collect();
            for (domain, events) in results {
                if let Some(s) = &self.store {
                    s.append(&domain, &events)?;
                }
                // WHOIS is asked once per domain and retried only after a gap.
                let whois_failed = events
                    .iter()
                    .any(|e| matches!(&e.event, Event::Gap(g) if g.stage == Stage::Whois));
                if !whois_failed {
                    self.whois_done.insert(domain.clone());
                }
                let t = self
                    .timelines
                    .get_mut(&domain)
                    .expect("due domain is monitored");
                for e in events {
                    apply(t, e.event)?;
                }
                ran += 1;
            }
        }
        Ok(ran)
    }

    pub fn run_all(&mut self) -> Result<usize, ScheduleError> {
        self.run_due(self.window.end)
    }
}

/// Monitor `domains` across the whole window in one call.
pub fn schedule<I, S>(
    domains: I,
    window: Window,
    cadence: Duration,
    backends: Backends<'_>,
    store: Option<TimelineStore>,
) -> Result<BTreeMap<String, DomainTimeline>, ScheduleError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut m = Monitor::new(domains, window, cadence, backends, store)?;
    m.run_all()?;
    Ok(m.into_timelines())
}

fn run_tick(
    t: &DomainTimeline,
    nominal: DateTime<Utc>,
    b: &Backends<'_>,
    want_whois: bool,
) -> Vec<EventRecord> {
    let domain = t.domain.as_str();
    let mut out = Vec::new();
    let mut last_res = t.resolutions.last().map(|r| r.ts);
    let mut last_probe = t.probes.last().map(|p| p.ts);
    // A catch-up run can hit the same clock reading twice; nudge forward so
    // per-list timestamps stay strictly increasing.
    let stamp = |last: &mut Option<DateTime<Utc>>| {
        let mut ts = b.clock.now(nominal);
        if let Some(prev) = *last {
            if ts <= prev {
                ts = prev + Duration::microseconds(1);
            }
        }
        *last = Some(ts);
        ts
    };
    let gap = |stage, error: String| {
        let ts = b.clock.now(nominal);
        EventRecord::new(
            ts,
            Event::Gap(Gap {
                ts,
                nominal,
                stage,
                error,
            }),
        )
    };

    if want_whois {
        if let Some(w) = b.whois {
            match w.lookup(domain) {
                Ok(Some(rec)) => {
                    out.push(EventRecord::new(b.clock.now(nominal), Event::Whois(rec)))
                }
                Ok(None) => {}
                Err(e) => out.push(gap(Stage::Whois, e.0)),
            }
        }
    }

    let result = match b.resolver.resolve(domain, nominal) {
        Ok(r) => r,
        Err(e) => {
            out.push(gap(Stage::Resolve, e.0));
            return out;
        }
    };
    let ts = stamp(&mut last_res);
    out.push(EventRecord::new(
        ts,
        Event::Resolution(Resolution {
            ts,
            nominal,
            result: result.clone(),
        }),
    ));

    let (outcome, body_prefix) = match result.ips() {
        None => (
            ProbeOutcome::Dead {
                reason: DeadReason::NxDomain,
            },
            None,
        ),
        Some(ips) => match b.prober.probe(domain, ips, nominal) {
            Ok(reply) => {
                let body = match &reply {
                    ProbeReply::Response { body_prefix, .. } if !body_prefix.is_empty() => {
                        Some(String::from_utf8_lossy(body_prefix).into_owned())
                    }
                    _ => None,
                };
                (b.liveness.classify(&reply), body)
            }
            Err(e) => {
                out.push(gap(Stage::Probe, e.0));
                return out;
            }
        },
    };
    let ts = stamp(&mut last_probe).max(last_res.expect("resolution recorded above"));
    out.push(EventRecord::new(
        ts,
        Event::Probe(Probe {
            ts,
            nominal,
            outcome,
            body_prefix,
        }),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn tick_arithmetic() {
        let s = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        let w = Window::new(s, s + Duration::days(5)).unwrap();
        assert_eq!(ticks(&w, Duration::days(1)).unwrap().len(), 5);
        assert_eq!(ticks(&w, Duration::days(2)).unwrap().len(), 3);
        assert!(matches!(
            ticks(&w, Duration::hours(23)),
            Err(ScheduleError::CadenceTooShort(_))
        ));
        assert!(Window::new(s, s).is_err());
    }
}

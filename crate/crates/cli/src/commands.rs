use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{DateTime, Utc};
use culprit_core::assoc::{
    build_graph, group_stats, read_features_jsonl, AssocError, SampleFeatures,
};
use culprit_core::payclass::{
    channel_breakdown, classify_all, read_observations_jsonl, Channel, ServiceKind,
};
use culprit_core::pipeline::{scan_apk, SampleRecord};
use culprit_core::report::{build_corpus_report, emit_report, group_table, Table};
use culprit_core::rounding::Dec2;
use culprit_core::taxonomy::{has_unchecked_tactics, validate_label, TaxonomyLabel};
use culprit_infra::backend::SystemClock;
use culprit_infra::bindings::{binding_table, classify_bindings};
use culprit_infra::geo::{country_table, geolocate, CountryTable};
use culprit_infra::lifespan::{lifespan, lifespan_table, summarize, LifespanError};
use culprit_infra::net::{HttpProber, SystemResolver, WhoisCache, WhoisClient};
use culprit_infra::registrant::{registrant_stats, registrant_table};
use culprit_infra::schedule::{Backends, Monitor, Window};
use culprit_infra::store::TimelineStore;
use culprit_infra::timeline::DomainTimeline;
use culprit_infra::{monitoring_whitelist, watch_targets};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::config::Config;
use crate::{AssocArgs, InputError, PayclassArgs, ReportArgs, ScanArgs, WatchArgs};

fn input(msg: impl std::fmt::Display) -> anyhow::Error {
    InputError(msg.to_string()).into()
}

fn open(path: &Path) -> anyhow::Result<io::BufReader<fs::File>> {
    fs::File::open(path)
        .map(io::BufReader::new)
        .map_err(|e| input(format!("{}: {e}", path.display())))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| input(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

#[derive(Deserialize)]
struct LabelLine {
    sample_id: String,
    #[serde(flatten)]
    label: TaxonomyLabel,
}

/// Labels by sample id. Rule violations are reported, not fatal.
fn read_labels(path: &Path) -> anyhow::Result<BTreeMap<String, TaxonomyLabel>> {
    let mut out = BTreeMap::new();
    for l in read_jsonl::<LabelLine>(path)? {
        for v in validate_label(&l.label) {
            eprintln!("warning: label {}: {v}", l.sample_id);
        }
        if has_unchecked_tactics(&l.label) {
            eprintln!(
                "warning: label {}: tactics on a miscellany row are unchecked",
                l.sample_id
            );
        }
        if out.insert(l.sample_id.clone(), l.label).is_some() {
            return Err(input(format!(
                "{}: duplicate label for {}",
                path.display(),
                l.sample_id
            )));
        }
    }
    Ok(out)
}

fn emit(
    dir: &Path,
    stem: &str,
    table: &Table,
    value: &impl serde::Serialize,
) -> anyhow::Result<()> {
    for p in emit_report(dir, stem, table, value)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn collect_apks(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let p = entry?.path();
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("apk")) {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for i in inputs {
        if i.is_dir() {
            walk(i, &mut out).map_err(|e| input(format!("{}: {e}", i.display())))?;
        } else if i.is_file() {
            out.push(i.clone());
        } else {
            return Err(input(format!("{}: no such file or directory", i.display())));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn scan(mut cfg: Config, a: ScanArgs) -> anyhow::Result<bool> {
    if let Some(t) = a.web_asset_threshold {
        cfg.web_asset_threshold = t;
    }
    for k in &a.keys {
        let (id, hex) = k
            .split_once('=')
            .ok_or_else(|| input(format!("--key {k}: expected ID=HEX")))?;
        cfg.keys.insert(id.to_string(), hex.to_string());
    }
    let ctx = cfg.scan_context()?;
    let files = collect_apks(&a.inputs)?;
    // Results come back in path order whatever order the workers finish in.
    let results: Vec<Result<SampleRecord, String>> = files
        .par_iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| e.to_string())?;
            scan_apk(bytes, &p.display().to_string(), &ctx).map_err(|e| e.to_string())
        })
        .collect();
    let mut out = Vec::new();
    let mut ok = true;
    for (p, r) in files.iter().zip(results) {
        match r {
            Ok(rec) => {
                serde_json::to_writer(&mut out, &rec)?;
                out.push(b'\n');
            }
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                ok = false;
            }
        }
    }
    match &a.out {
        Some(p) => fs::write(p, &out).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(&out)?,
    }
    Ok(ok)
}

pub fn assoc(mut cfg: Config, a: AssocArgs) -> anyhow::Result<bool> {
    if let Some(v) = a.i_max {
        cfg.assoc.i_max = v;
    }
    if let Some(v) = a.url_threshold {
        cfg.assoc.url_overlap_threshold = v;
    }
    if let Some(v) = a.snapshot_threshold {
        cfg.assoc.snapshot_threshold = v;
    }
    let mut samples: Vec<SampleFeatures> = if a.features {
        read_features_jsonl(open(&a.records)?)
            .map_err(|e| input(format!("{}: {e}", a.records.display())))?
    } else {
        read_jsonl::<SampleRecord>(&a.records)?
            .iter()
            .map(SampleRecord::to_features)
            .collect()
    };
    let mut labels = match &a.labels {
        Some(p) => read_labels(p)?,
        None => BTreeMap::new(),
    };
    for s in &mut samples {
        match labels.get(&s.sample_id) {
            Some(l) => s.label = Some(l.clone()),
            None => {
                if let Some(l) = &s.label {
                    labels.insert(s.sample_id.clone(), l.clone());
                }
            }
        }
    }
    let graph = build_graph(&samples, &cfg.assoc).map_err(|e| match e {
        AssocError::Io(_) => anyhow::Error::new(e),
        other => input(other),
    })?;
    let corpus = a.corpus_size.unwrap_or(samples.len());
    let rows = group_stats(&graph, &labels, corpus).map_err(input)?;
    emit(
        &a.out,
        "groups",
        &group_table(&rows),
        &json!({ "graph": graph, "groups": rows }),
    )?;
    Ok(true)
}

/// Domains to monitor plus, for those found in scan records, the earliest
/// manifest time of any sample that contacts them.
fn load_targets(
    path: &Path,
    cfg: &Config,
) -> anyhow::Result<(BTreeSet<String>, BTreeMap<String, DateTime<Utc>>)> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let mut raw: Vec<String> = Vec::new();
    let mut mtimes: BTreeMap<String, DateTime<Utc>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('{') {
            let rec: SampleRecord = serde_json::from_str(line)
                .map_err(|e| input(format!("{}:{}: {e}", path.display(), i + 1)))?;
            for d in &rec.url_set.domains {
                raw.push(d.clone());
                let m = mtimes.entry(d.clone()).or_insert(rec.manifest_mtime);
                *m = (*m).min(rec.manifest_mtime);
            }
        } else {
            raw.push(line.to_string());
        }
    }
    let wl = monitoring_whitelist(cfg.whitelist()?);
    let domains = watch_targets(raw.iter().map(String::as_str), &wl);
    mtimes.retain(|d, _| domains.contains(d));
    Ok((domains, mtimes))
}

pub fn watch(mut cfg: Config, a: WatchArgs) -> anyhow::Result<bool> {
    if let Some(c) = a.cadence_days {
        cfg.cadence_days = c;
    }
    if let Some(g) = &a.geo_db {
        cfg.geo_db = Some(g.clone());
    }
    if cfg.cadence_days < 1 {
        return Err(input(format!(
            "cadence of {} days is below one day",
            cfg.cadence_days
        )));
    }
    let window = cfg.window()?;
    let (domains, mtimes) = load_targets(&a.targets, &cfg)?;
    let store = TimelineStore::open(&a.store)?;
    let timelines = if a.no_probe {
        store.load_all(domains.iter().map(String::as_str))?
    } else {
        let whois = WhoisCache::new(
            a.whois_cache
                .clone()
                .unwrap_or_else(|| a.store.join("whois")),
            WhoisClient::default(),
        )?;
        let prober = HttpProber::new(std::time::Duration::from_secs(cfg.probe_timeout_secs), 5);
        let backends = Backends {
            resolver: &SystemResolver,
            prober: &prober,
            whois: Some(&whois),
            clock: &SystemClock,
            liveness: cfg.liveness,
        };
        let mut m = Monitor::new(
            domains,
            window,
            chrono::Duration::days(cfg.cadence_days),
            backends,
            Some(store),
        )?;
        let ran = m.run_due(a.now.unwrap_or_else(Utc::now))?;
        eprintln!("ran {ran} domain-ticks");
        m.into_timelines()
    };
    if let Some(dir) = &a.report {
        emit_infra(dir, &timelines, &mtimes, &window, &cfg)?;
    }
    Ok(true)
}

fn emit_infra(
    dir: &Path,
    timelines: &BTreeMap<String, DomainTimeline>,
    mtimes: &BTreeMap<String, DateTime<Utc>>,
    window: &Window,
    cfg: &Config,
) -> anyhow::Result<()> {
    let mut records = Vec::new();
    for (d, t) in timelines {
        let Some(&m) = mtimes.get(d) else { continue };
        match lifespan(t, m, window) {
            Ok(r) => records.push(r),
            Err(LifespanError::EmptyTimeline(_)) => {}
        }
    }
    emit(
        dir,
        "lifespans",
        &lifespan_table(&records),
        &json!({ "summary": summarize(&records), "records": records }),
    )?;

    let all: Vec<DomainTimeline> = timelines.values().cloned().collect();
    let (classes, summary) = classify_bindings(&all);
    emit(
        dir,
        "bindings",
        &binding_table(&summary),
        &json!({ "summary": summary, "domains": classes }),
    )?;

    let geo = geolocate(&all, &cfg.geo()?, &CountryTable::embedded());
    emit(
        dir,
        "geo_domains",
        &country_table(&geo.domains),
        &geo.domains,
    )?;
    emit(dir, "geo_ips", &country_table(&geo.ips), &geo.ips)?;

    let reg = registrant_stats(all.iter().map(|t| t.whois.as_ref()));
    emit(dir, "registrants", &registrant_table(&reg), &reg)?;
    Ok(())
}

pub fn payclass(cfg: Config, a: PayclassArgs) -> anyhow::Result<bool> {
    let obs = read_observations_jsonl(open(&a.observations)?)
        .map_err(|e| input(format!("{}: {e}", a.observations.display())))?;
    let licensed = match &a.licensed_db {
        Some(p) => culprit_core::payclass::LicensedDb::parse(
            &fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?,
        ),
        None => cfg.licensed()?,
    };
    let classes = classify_all(&obs, &licensed, &cfg.channel_patterns()?).map_err(input)?;
    let b = channel_breakdown(&classes);
    if let Some(n) = &b.notice {
        eprintln!("notice: {n}");
    }
    let mut t = Table::new(["Channel", "Sessions", "Percent"]);
    for (ch, s) in &b.channels {
        t.push([
            format!("{ch:?}"),
            s.count.to_string(),
            s.percent.to_string(),
        ]);
    }
    t.push([
        format!("{:?}", Channel::Unknown),
        b.unknown.count.to_string(),
        b.unknown.percent.to_string(),
    ]);
    let kinds: BTreeMap<String, usize> = [
        ServiceKind::ThirdParty,
        ServiceKind::FourthParty,
        ServiceKind::Indeterminate,
    ]
    .iter()
    .map(|k| {
        (
            format!("{k:?}"),
            classes.iter().filter(|c| c.service_kind == *k).count(),
        )
    })
    .collect();
    emit(
        &a.out,
        "payments",
        &t,
        &json!({ "service_kinds": kinds, "breakdown": b, "sessions": classes }),
    )?;
    Ok(true)
}

pub fn report(_cfg: Config, a: ReportArgs) -> anyhow::Result<bool> {
    let records: Vec<SampleRecord> = read_jsonl(&a.records)?;
    let labels = match &a.labels {
        Some(p) => read_labels(p)?,
        None => BTreeMap::new(),
    };
    let r = build_corpus_report(&records, &labels);
    for n in &r.permission_averages.notices {
        eprintln!("notice: {n}");
    }
    emit(&a.out, "corpus", &r.table(), &r)?;
    emit(
        &a.out,
        "categories",
        &r.category_distribution.table(),
        &r.category_distribution,
    )?;
    emit(
        &a.out,
        "permissions",
        &r.permission_averages.table(),
        &r.permission_averages,
    )?;
    let invalid = records.iter().filter(|x| !x.manifest_valid).count();
    if invalid > 0 {
        eprintln!(
            "notice: {invalid} of {} records have an undecodable manifest ({}%)",
            records.len(),
            Dec2::percent(invalid as i64, records.len() as i64)
        );
    }
    Ok(true)
}

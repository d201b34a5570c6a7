//! Offline IP geolocation and domain registration countries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::net::IpAddr;
use std::path::Path;

use culprit_core::report::Table;
use culprit_core::rounding::Dec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::GeoLookup;
use crate::timeline::DomainTimeline;

pub const UNKNOWN: &str = "unknown";

const EMBEDDED_CCTLD: &str = include_str!("../data/cctld.tsv");

#[derive(Debug, Error)]
pub enum GeoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: bad address {value:?}")]
    BadAddress { row: usize, value: String },
    #[error("row {row}: range mixes IPv4 and IPv6 or ends before it starts")]
    BadRange { row: usize },
    #[error("ranges starting at {a} and {b} overlap")]
    Overlap { a: String, b: String },
}

#[derive(Deserialize)]
struct Row {
    ip_range_start: String,
    ip_range_end: String,
    country: String,
}

/// Sorted, non-overlapping address ranges with binary-search lookup.
#[derive(Debug, Clone, Default)]
pub struct GeoDb {
    v4: Vec<(u32, u32, String)>,
    v6: Vec<(u128, u128, String)>,
}

fn check_disjoint<T: Ord + Copy + std::fmt::Display>(
    v: &mut [(T, T, String)],
) -> Result<(), GeoError> {
    v.sort_by_key(|r| r.0);
    for w in v.windows(2) {
        if w[1].0 <= w[0].1 {
            return Err(GeoError::Overlap {
                a: w[0].0.to_string(),
                b: w[1].0.to_string(),
            });
        }
    }
    Ok(())
}

fn find<T: Ord + Copy>(v: &[(T, T, String)], x: T) -> Option<&str> {
    let i = v.partition_point(|r| r.0 <= x).checked_sub(1)?;
    let (_, end, c) = &v[i];
    (x <= *end).then_some(c.as_str())
}

impl GeoDb {
    /// Parse a CSV with `ip_range_start,ip_range_end,country` columns.
    pub fn from_reader(r: impl Read) -> Result<Self, GeoError> {
        let mut db = Self::default();
        for (i, row) in csv::Reader::from_reader(r).deserialize::<Row>().enumerate() {
            let row = row?;
            let n = i + 1;
            let parse = |s: &str| {
                s.trim()
                    .parse::<IpAddr>()
                    .map_err(|_| GeoError::BadAddress {
                        row: n,
                        value: s.to_string(),
                    })
            };
            let country = row.country.trim().to_string();
            match (parse(&row.ip_range_start)?, parse(&row.ip_range_end)?) {
                (IpAddr::V4(a), IpAddr::V4(b)) if a <= b => {
                    db.v4.push((a.into(), b.into(), country))
                }
                (IpAddr::V6(a), IpAddr::V6(b)) if a <= b => {
                    db.v6.push((a.into(), b.into(), country))
                }
                _ => return Err(GeoError::BadRange { row: n }),
            }
        }
        check_disjoint(&mut db.v4)?;
        check_disjoint(&mut db.v6)?;
        Ok(db)
    }

    pub fn from_path(path: &Path) -> Result<Self, GeoError> {
        Self::from_reader(std::fs::File::open(path).map_err(csv::Error::from)?)
    }

    pub fn len(&self) -> usize {
        self.v4.len() + self.v6.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl GeoLookup for GeoDb {
    fn country(&self, ip: IpAddr) -> Option<&str> {
        match ip {
            IpAddr::V4(a) => find(&self.v4, u32::from(a)),
            IpAddr::V6(a) => find(&self.v6, u128::from(a)),
        }
    }
}

/// Country-code top-level domains with their ISO codes and names.
#[derive(Debug, Clone)]
pub struct CountryTable {
    by_tld: HashMap<String, String>,
    names: BTreeMap<String, String>,
}

impl CountryTable {
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_CCTLD)
    }

    /// Tab-separated `tld, code, name` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let mut by_tld = HashMap::new();
        let mut names = BTreeMap::new();
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            let mut cols = line.split('\t');
            if let (Some(tld), Some(code), Some(name)) = (cols.next(), cols.next(), cols.next()) {
                by_tld.insert(
                    tld.trim().to_ascii_lowercase(),
                    code.trim().to_ascii_uppercase(),
                );
                names
                    .entry(code.trim().to_ascii_uppercase())
                    .or_insert_with(|| name.trim().to_string());
            }
        }
        Self { by_tld, names }
    }

    /// Country code implied by the domain's last label.
    pub fn for_domain(&self, domain: &str) -> Option<&str> {
        let tld = domain.trim_end_matches('.').rsplit('.').next()?;
        self.by_tld
            .get(&tld.to_ascii_lowercase())
            .map(String::as_str)
    }

    /// Map a code or country name to its ISO code.
    pub fn normalize(&self, s: &str) -> Option<String> {
        let s = s.trim();
        let up = s.to_ascii_uppercase();
        if self.names.contains_key(&up) {
            return Some(up);
        }
        self.names
            .iter()
            .find(|(_, n)| n.eq_ignore_ascii_case(s))
            .map(|(c, _)| c.clone())
    }

    pub fn name(&self, code: &str) -> Option<&str> {
        self.names.get(code).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountryShare {
    pub country: String,
    pub name: Option<String>,
    pub count: usize,
    pub percent: Dec2,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct GeoDistribution {
    /// Registration country per domain.
    pub domains: Vec<CountryShare>,
    /// Location of each distinct (domain, address) pair.
    pub ips: Vec<CountryShare>,
}

/// WHOIS country if recognizable, else the ccTLD's country, else unknown.
pub fn domain_country(t: &DomainTimeline, countries: &CountryTable) -> String {
    t.whois
        .as_ref()
        .and_then(|w| countries.normalize(&w.country))
        .or_else(|| countries.for_domain(&t.domain).map(str::to_string))
        .unwrap_or_else(|| UNKNOWN.to_string())
}

fn shares(counts: BTreeMap<String, usize>, countries: &CountryTable) -> Vec<CountryShare> {
    let total: usize = counts.values().sum();
    let mut v: Vec<CountryShare> = counts
        .into_iter()
        .map(|(country, count)| CountryShare {
            name: countries.name(&country).map(str::to_string),
            percent: Dec2::percent(count as i64, total as i64),
            country,
            count,
        })
        .collect();
    v.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.country.cmp(&b.country))
    });
    v
}

pub fn geolocate(
    timelines: &[DomainTimeline],
    geo: &dyn GeoLookup,
    countries: &CountryTable,
) -> GeoDistribution {
    let mut domains: BTreeMap<String, usize> = BTreeMap::new();
    let mut ips: BTreeMap<String, usize> = BTreeMap::new();
    for t in timelines {
        *domains.entry(domain_country(t, countries)).or_default() += 1;
        let distinct: BTreeSet<IpAddr> = t.distinct_ips();
        for ip in distinct {
            let c = geo
                .country(ip)
                .map(|c| countries.normalize(c).unwrap_or_else(|| c.to_string()))
                .unwrap_or_else(|| UNKNOWN.to_string());
            *ips.entry(c).or_default() += 1;
        }
    }
    GeoDistribution {
        domains: shares(domains, countries),
        ips: shares(ips, countries),
    }
}

pub fn country_table(rows: &[CountryShare]) -> Table {
    let mut t = Table::new(["Country", "Name", "Count", "Percent"]);
    for r in rows {
        t.push([
            r.country.clone(),
            r.name.clone().unwrap_or_default(),
            r.count.to_string(),
            r.percent.to_string(),
        ]);
    }
    t
}

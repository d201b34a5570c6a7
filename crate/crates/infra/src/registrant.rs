//! Registrant ranking over monitored domains.

use std::collections::BTreeMap;

use culprit_core::report::Table;
use culprit_core::rounding::Dec2;
use serde::Serialize;

use crate::geo::UNKNOWN;
use crate::timeline::WhoisRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegistrantRow {
    pub rank: usize,
    pub registrant: String,
    pub count: usize,
    pub percent: Dec2,
}

/// One item per monitored domain; domains without a record count as
/// unknown so the denominator is always the full domain set.
pub fn registrant_stats<'a>(
    records: impl IntoIterator<Item = Option<&'a WhoisRecord>>,
) -> Vec<RegistrantRow> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0;
    for r in records {
        total += 1;
        let name = r
            .map(|w| w.registrant.trim())
            .filter(|s| !s.is_empty())
            .unwrap_or(UNKNOWN);
        *counts.entry(name).or_default() += 1;
    }
    let mut rows: Vec<(&str, usize)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    rows.into_iter()
        .enumerate()
        .map(|(i, (name, count))| RegistrantRow {
            rank: i + 1,
            registrant: name.to_string(),
            count,
            percent: Dec2::percent(count as i64, total as i64),
        })
        .collect()
}

pub fn registrant_table(rows: &[RegistrantRow]) -> Table {
    let mut t = Table::new(["Rank", "Registrant", "Domains", "Percent"]);
    for r in rows {
        t.push([
            r.rank.to_string(),
            r.registrant.clone(),
            r.count.to_string(),
            format!("{}%", r.percent),
        ]);
    }
    t
}

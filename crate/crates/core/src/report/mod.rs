//! Corpus aggregation and deterministic CSV/JSON emission.

pub mod table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::apk::PermissionProfile;
use crate::assoc::GroupRow;
use crate::extract::Paradigm;
use crate::pipeline::SampleRecord;
use crate::rounding::{Dec1, Dec2};
use crate::taxonomy::{TaxonomyLabel, TopCategory};

pub use table::{emit_report, ReportError, Table};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryDistribution {
    pub n: usize,
    pub counts: BTreeMap<TopCategory, usize>,
    pub percent: BTreeMap<TopCategory, Dec2>,
}

/// Per-top-category counts and shares, every category present.
pub fn category_distribution<'a>(
    labels: impl IntoIterator<Item = &'a TaxonomyLabel>,
) -> CategoryDistribution {
    let mut counts: BTreeMap<TopCategory, usize> =
        TopCategory::ALL.iter().map(|&t| (t, 0)).collect();
    let mut n = 0;
    for l in labels {
        *counts.entry(l.top).or_default() += 1;
        n += 1;
    }
    let percent = counts
        .iter()
        .map(|(&t, &c)| (t, Dec2::percent(c as i64, n as i64)))
        .collect();
    CategoryDistribution { n, counts, percent }
}

impl CategoryDistribution {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Category", "Apps", "Percent"]);
        if self.n > 0 {
            for (top, c) in &self.counts {
                t.push([
                    top.to_string(),
                    c.to_string(),
                    self.percent[top].to_string(),
                ]);
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionRow {
    /// `None` for the corpus total.
    pub category: Option<TopCategory>,
    pub samples: usize,
    pub dangerous: Dec2,
    pub normal: Dec2,
    pub all: Dec2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionTable {
    pub rows: Vec<PermissionRow>,
    pub notices: Vec<String>,
}

fn mean_row(category: Option<TopCategory>, profiles: &[&PermissionProfile]) -> PermissionRow {
    let n = profiles.len() as i64;
    let sum =
        |f: fn(&PermissionProfile) -> usize| profiles.iter().map(|p| f(p) as i64).sum::<i64>();
    PermissionRow {
        category,
        samples: profiles.len(),
        dangerous: Dec2::ratio(sum(|p| p.dangerous_count), n),
        normal: Dec2::ratio(sum(|p| p.normal_count), n),
        all: Dec2::ratio(sum(|p| p.all_count), n),
    }
}

/// Mean permission counts per top category plus the corpus total.
/// Unlabelled samples contribute to the total only; empty categories are
/// omitted with a notice.
pub fn permission_aggregate_iter<'a>(
    profiles: impl IntoIterator<Item = (&'a PermissionProfile, Option<TopCategory>)>,
) -> PermissionTable {
    let mut by_cat: BTreeMap<TopCategory, Vec<&PermissionProfile>> = BTreeMap::new();
    let mut all = Vec::new();
    for (p, cat) in profiles {
        if let Some(c) = cat {
            by_cat.entry(c).or_default().push(p);
        }
        all.push(p);
    }
    let mut rows = Vec::new();
    let mut notices = Vec::new();
    for top in TopCategory::ALL {
        match by_cat.get(&top) {
            Some(ps) => rows.push(mean_row(Some(top), ps)),
            None => notices.push(format!("no samples labelled {top}; row omitted")),
        }
    }
    if !all.is_empty() {
        rows.push(mean_row(None, &all));
    }
    PermissionTable { rows, notices }
}

pub fn permission_aggregate(
    profiles: &BTreeMap<String, (PermissionProfile, TaxonomyLabel)>,
) -> PermissionTable {
    permission_aggregate_iter(profiles.values().map(|(p, l)| (p, Some(l.top))))
}

impl PermissionTable {
    pub fn total(&self) -> Option<&PermissionRow> {
        self.rows.iter().find(|r| r.category.is_none())
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(["Category", "Samples", "Dangerous", "Normal", "All"]);
        for r in &self.rows {
            t.push([
                r.category
                    .map_or_else(|| "Total".to_string(), |c| c.to_string()),
                r.samples.to_string(),
                r.dangerous.to_string(),
                r.normal.to_string(),
                r.all.to_string(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorUsage {
    pub samples_with_generator: usize,
    pub fraction: Dec2,
    pub per_generator: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub n: usize,
    pub category_distribution: CategoryDistribution,
    /// Share of samples classified hybrid, in [0, 1].
    pub hybrid_fraction: Dec2,
    pub generator_usage: GeneratorUsage,
    pub permission_averages: PermissionTable,
    /// Records with no label in the label set.
    pub unlabeled: usize,
}

/// Aggregate scan records and labels. Records whose manifest failed to
/// decode count toward `n` but not toward permission means.
pub fn build_corpus_report(
    records: &[SampleRecord],
    labels: &BTreeMap<String, TaxonomyLabel>,
) -> CorpusReport {
    let n = records.len();
    let labelled: Vec<&TaxonomyLabel> = records
        .iter()
        .filter_map(|r| labels.get(&r.sample_id))
        .collect();
    let hybrid = records
        .iter()
        .filter(|r| r.paradigm.value == Paradigm::Hybrid)
        .count();
    let mut per_generator: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        if let Some(g) = &r.generator {
            *per_generator.entry(g.generator_id.clone()).or_default() += 1;
        }
    }
    let with_gen: usize = per_generator.values().sum();
    let permission_averages = permission_aggregate_iter(records.iter().filter_map(|r| {
        r.permissions
            .as_ref()
            .map(|p| (p, labels.get(&r.sample_id).map(|l| l.top)))
    }));
    CorpusReport {
        n,
        category_distribution: category_distribution(labelled.iter().copied()),
        hybrid_fraction: Dec2::ratio(hybrid as i64, n as i64),
        generator_usage: GeneratorUsage {
            samples_with_generator: with_gen,
            fraction: Dec2::ratio(with_gen as i64, n as i64),
            per_generator,
        },
        permission_averages,
        unlabeled: n - labelled.len(),
    }
}

impl CorpusReport {
    /// Summary metrics, one per row.
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Metric", "Value"]);
        if self.n == 0 {
            return t;
        }
        t.push(["samples".to_string(), self.n.to_string()]);
        t.push(["unlabeled".to_string(), self.unlabeled.to_string()]);
        t.push([
            "hybrid_fraction".to_string(),
            self.hybrid_fraction.to_string(),
        ]);
        t.push([
            "generator_fraction".to_string(),
            self.generator_usage.fraction.to_string(),
        ]);
        for (g, c) in &self.generator_usage.per_generator {
            t.push([format!("generator:{g}"), c.to_string()]);
        }
        t
    }
}

fn count_cell(count: usize, pct: impl std::fmt::Display) -> String {
    if count == 0 {
        "0".to_string()
    } else {
        format!("{count} ({pct}%)")
    }
}

/// Ranked association groups in the column order Rank, Apps, then one
/// column per top category and an unlabeled column.
pub fn group_table(rows: &[GroupRow]) -> Table {
    let mut header = vec!["Rank".to_string(), "Apps (%Percent)".to_string()];
    header.extend(TopCategory::ALL.iter().map(|t| t.to_string()));
    header.push("Unlabeled".to_string());
    let mut t = Table::new(header);
    for r in rows {
        let mut row = vec![r.rank.to_string(), format!("{} ({}%)", r.size, r.percent)];
        for top in TopCategory::ALL {
            let c = r.categories.get(&top).copied();
            row.push(c.map_or_else(|| "0".to_string(), |c| count_cell(c.count, c.percent)));
        }
        row.push(count_cell(r.unlabeled.count, r.unlabeled.percent));
        t.push(row);
    }
    t
}

/// Composition percentages of one group row, for checks and display.
pub fn composition(row: &GroupRow) -> Vec<(TopCategory, Dec1)> {
    row.categories
        .iter()
        .map(|(t, c)| (*t, c.percent))
        .collect()
}

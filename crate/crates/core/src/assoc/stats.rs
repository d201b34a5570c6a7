use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AssocError, AssociationGraph};
use crate::rounding::{Dec1, Dec2};
use crate::taxonomy::{TaxonomyLabel, TopCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCell {
    pub count: usize,
    /// Share of the group, one decimal.
    pub percent: Dec1,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRow {
    pub rank: usize,
    pub size: usize,
    /// Share of the corpus, two decimals.
    pub percent: Dec2,
    pub categories: BTreeMap<TopCategory, CategoryCell>,
    pub unlabeled: CategoryCell,
    pub members: Vec<String>,
}

fn cell(count: usize, size: usize) -> CategoryCell {
    CategoryCell {
        count,
        percent: Dec1::percent(count as i64, size as i64),
    }
}

/// Ranked group table: size, corpus share and per-category composition.
pub fn group_stats(
    g: &AssociationGraph,
    labels: &BTreeMap<String, TaxonomyLabel>,
    corpus_size: usize,
) -> Result<Vec<GroupRow>, AssocError> {
    if corpus_size < g.nodes.len() {
        return Err(AssocError::CorpusTooSmall {
            corpus_size,
            nodes: g.nodes.len(),
        });
    }
    let mut groups: Vec<&Vec<String>> = g.groups.iter().collect();
    groups.sort_by(|x, y| {
        y.len()
            .cmp(&x.len())
            .then_with(|| x.first().cmp(&y.first()))
    });
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(i, members)| {
            let size = members.len();
            let mut counts: BTreeMap<TopCategory, usize> =
                TopCategory::ALL.iter().map(|&t| (t, 0)).collect();
            let mut unlabeled = 0;
            for m in members {
                match labels.get(m) {
                    Some(l) => *counts.entry(l.top).or_default() += 1,
                    None => unlabeled += 1,
                }
            }
            GroupRow {
                rank: i + 1,
                size,
                percent: Dec2::percent(size as i64, corpus_size as i64),
                categories: counts
                    .into_iter()
                    .map(|(t, c)| (t, cell(c, size)))
                    .collect(),
                unlabeled: cell(unlabeled, size),
                members: members.clone(),
            }
        })
        .collect())
}

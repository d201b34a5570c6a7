use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rules::{fired_rules, Rule};
use super::{AssocConfig, AssocError, SampleFeatures};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub rules: BTreeSet<Rule>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationGraph {
    pub nodes: BTreeSet<String>,
    /// Sorted by `(a, b)`, with `a < b`.
    pub edges: Vec<Edge>,
    /// Connected components: members sorted, groups by size descending
    /// then by first member.
    pub groups: Vec<Vec<String>>,
}

impl AssociationGraph {
    /// Samples joined to `seed` by an emitted edge.
    pub fn neighborhood(&self, seed: &str) -> BTreeSet<&str> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.a == seed {
                    Some(e.b.as_str())
                } else if e.b == seed {
                    Some(e.a.as_str())
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn group_of(&self, id: &str) -> Option<&[String]> {
        self.groups
            .iter()
            .find(|g| g.binary_search_by(|m| m.as_str().cmp(id)).is_ok())
            .map(Vec::as_slice)
    }
}

type Mask = u8;

fn mask_of(rules: &BTreeSet<Rule>) -> Mask {
    rules.iter().fold(0, |m, r| m | (1 << *r as u8))
}

fn rules_of(mask: Mask) -> BTreeSet<Rule> {
    [Rule::Signature, Rule::Url, Rule::SharedIp, Rule::Snapshot]
        .into_iter()
        .filter(|r| mask & (1 << *r as u8) != 0)
        .collect()
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Per seed: every node within `i_max` hops, with the rules on all
/// shortest paths from the seed to it.
fn seed_reach(adj: &[Vec<(usize, Mask)>], seed: usize, i_max: usize) -> Vec<(usize, Mask)> {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut acc: Vec<Mask> = vec![0; n];
    dist[seed] = 0;
    let mut frontier = vec![seed];
    let mut reached = Vec::new();
    for d in 1..=i_max {
        let mut next = Vec::new();
        for &u in &frontier {
            let carried = acc[u];
            for &(v, m) in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = d;
                    next.push(v);
                }
                if dist[v] == d {
                    acc[v] |= carried | m;
                }
            }
        }
        if next.is_empty() {
            break;
        }
        reached.extend(next.iter().copied());
        frontier = next;
    }
    reached.into_iter().map(|v| (v, acc[v])).collect()
}

/// Bounded association over arbitrary pairwise outcomes. `oracle(a, b)` is
/// asked once per unordered pair with `a < b` and returns the rules that
/// fire between them.
pub fn build_graph_with<F>(
    ids: Vec<String>,
    i_max: usize,
    oracle: F,
) -> Result<AssociationGraph, AssocError>
where
    F: Fn(&str, &str) -> BTreeSet<Rule> + Sync,
{
    let mut ids = ids;
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(AssocError::DuplicateSampleId(w[0].clone()));
    }
    let n = ids.len();

    let pairs: Vec<(usize, usize, Mask)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let ids = &ids;
            let oracle = &oracle;
            (i + 1..n).filter_map(move |j| {
                let m = mask_of(&oracle(&ids[i], &ids[j]));
                (m != 0).then_some((i, j, m))
            })
        })
        .collect();

    let mut adj: Vec<Vec<(usize, Mask)>> = vec![Vec::new(); n];
    for &(i, j, m) in &pairs {
        adj[i].push((j, m));
        adj[j].push((i, m));
    }

    let reach: Vec<Vec<(usize, Mask)>> = (0..n)
        .into_par_iter()
        .map(|s| seed_reach(&adj, s, i_max))
        .collect();

    let mut edges: BTreeMap<(usize, usize), Mask> = BTreeMap::new();
    for (s, reached) in reach.into_iter().enumerate() {
        for (v, m) in reached {
            *edges.entry((s.min(v), s.max(v))).or_default() |= m;
        }
    }

    let mut dsu = Dsu((0..n).collect());
    for &(a, b) in edges.keys() {
        dsu.union(a, b);
    }
    let mut comps: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let root = dsu.find(i);
        comps.entry(root).or_default().push(id.clone());
    }
    let mut groups: Vec<Vec<String>> = comps.into_values().collect();
    groups.sort_by(|x, y| y.len().cmp(&x.len()).then_with(|| x[0].cmp(&y[0])));

    Ok(AssociationGraph {
        edges: edges
            .into_iter()
            .map(|((a, b), m)| Edge {
                a: ids[a].clone(),
                b: ids[b].clone(),
                rules: rules_of(m),
            })
            .collect(),
        nodes: ids.into_iter().collect(),
        groups,
    })
}

/// Bounded multi-attribute association over sample features.
pub fn build_graph(
    samples: &[SampleFeatures],
    cfg: &AssocConfig,
) -> Result<AssociationGraph, AssocError> {
    cfg.validate()?;
    let by_id: BTreeMap<&str, &SampleFeatures> =
        samples.iter().map(|s| (s.sample_id.as_str(), s)).collect();
    let ids: Vec<String> = samples.iter().map(|s| s.sample_id.clone()).collect();
    build_graph_with(ids, cfg.i_max, |a, b| fired_rules(by_id[a], by_id[b], cfg))
}

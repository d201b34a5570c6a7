//! Long-running observation of the servers fraud apps talk to.
//!
//! [`schedule`] drives resolver, prober and WHOIS backends once per nominal
//! tick and appends the answers to per-domain [`timeline`]s, persisted by
//! [`store`]. The analyses read those timelines: [`lifespan`],
//! [`bindings`], [`geo`] and [`registrant`]. [`backend`] holds the
//! interfaces and scripted implementations; [`net`] the real ones.

pub mod backend;
pub mod bindings;
pub mod geo;
pub mod lifespan;
pub mod net;
pub mod registrant;
pub mod schedule;
pub mod store;
pub mod timeline;

use std::collections::BTreeSet;

use culprit_core::extract::Whitelist;

const TRAFFIC_EXCLUSIONS: &str = include_str!("../data/traffic_exclusions.txt");

/// `base` plus the SDK traffic endpoints that are never worth monitoring.
pub fn monitoring_whitelist(mut base: Whitelist) -> Whitelist {
    base.add_list(TRAFFIC_EXCLUSIONS);
    base
}

/// Distinct, lowercased domains not covered by `whitelist`.
pub fn watch_targets<'a>(
    domains: impl IntoIterator<Item = &'a str>,
    whitelist: &Whitelist,
) -> BTreeSet<String> {
    domains
        .into_iter()
        .map(|d| d.trim().trim_end_matches('.').to_ascii_lowercase())
        .filter(|d| !d.is_empty() && !whitelist.covers(d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusions_merge_with_whitelist() {
        let wl = monitoring_whitelist(Whitelist::embedded_third_party());
        let t = watch_targets(
            [
                "api.umeng.com",
                "Bugly.QQ.com",
                "yg19.top.",
                "sdk.talkingdata.com",
            ],
            &wl,
        );
        assert_eq!(t, BTreeSet::from(["yg19.top".to_string()]));
    }
}

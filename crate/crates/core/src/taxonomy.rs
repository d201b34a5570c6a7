//! Fraud-app categorization schema: top and sub categories, profit tactics
//! and behavior flags, with label validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TopCategory {
    Sex,
    Gambling,
    Financial,
    Service,
    #[serde(alias = "Auxiliary Tool", alias = "Auxiliary")]
    AuxiliaryTool,
}

impl TopCategory {
    pub const ALL: [TopCategory; 5] = [
        TopCategory::Sex,
        TopCategory::Gambling,
        TopCategory::Financial,
        TopCategory::Service,
        TopCategory::AuxiliaryTool,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TopCategory::Sex => "Sex",
            TopCategory::Gambling => "Gambling",
            TopCategory::Financial => "Financial",
            TopCategory::Service => "Service",
            TopCategory::AuxiliaryTool => "Auxiliary Tool",
        }
    }
}

impl fmt::Display for TopCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubCategory {
    #[serde(alias = "Live Porn")]
    LivePorn,
    #[serde(alias = "Pornography Trading")]
    PornographyTrading,
    #[serde(alias = "Sex Trafficking")]
    SexTrafficking,
    #[serde(alias = "Sex Miscellany")]
    SexMiscellany,
    #[serde(alias = "Gambling Games")]
    GamblingGames,
    #[serde(alias = "Sports & E-sports Betting")]
    SportsBetting,
    Lotteries,
    #[serde(alias = "Gambling Miscellany")]
    GamblingMiscellany,
    #[serde(alias = "Cryptocurrency Trading")]
    CryptocurrencyTrading,
    #[serde(alias = "Loan & Credit Platform")]
    LoanCredit,
    #[serde(alias = "Insurance Products")]
    InsuranceProducts,
    #[serde(alias = "Financial Investment")]
    FinancialInvestment,
    #[serde(alias = "Financial Miscellany")]
    FinancialMiscellany,
    #[serde(alias = "Social Media")]
    SocialMedia,
    #[serde(alias = "Ecommerce Platform")]
    EcommercePlatform,
    #[serde(alias = "Sharing Platform")]
    SharingPlatform,
    #[serde(alias = "Service Miscellany")]
    ServiceMiscellany,
    #[serde(alias = "Advertising service", alias = "Advertising Service")]
    AdvertisingService,
}

/// Profit tactic P1..P11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tactic(u8);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("`{0}` is not a profit tactic (expected P1..P11)")]
pub struct BadTactic(pub String);

impl Tactic {
    pub fn new(n: u8) -> Option<Self> {
        (1..=11).contains(&n).then_some(Self(n))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Tactic> {
        (1..=11).map(Tactic)
    }
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

impl FromStr for Tactic {
    type Err = BadTactic;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .strip_prefix(['P', 'p'])
            .and_then(|n| n.parse::<u8>().ok())
            .and_then(Tactic::new)
            .ok_or_else(|| BadTactic(s.to_string()))
    }
}

impl Serialize for Tactic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tactic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BehaviorFlag {
    /// Fake information.
    U1,
    /// Disguised as a regular app.
    U2,
    /// Free trial.
    U3,
    /// Activation fee.
    D1,
    D2,
    D3,
    F1,
    F2,
    F3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum BehaviorLevel {
    Major,
    Minor,
    #[default]
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyLabel {
    pub top: TopCategory,
    pub sub: SubCategory,
    #[serde(default)]
    pub tactics: BTreeSet<Tactic>,
    #[serde(default)]
    pub behavior: BTreeMap<BehaviorFlag, BehaviorLevel>,
}

/// One row of the categorization table.
#[derive(Debug, Clone, Copy)]
pub struct SubCategoryRow {
    pub sub: SubCategory,
    pub top: TopCategory,
    pub name: &'static str,
    /// Allowed tactic numbers; empty for miscellany rows, which admit any.
    pub tactics: &'static [u8],
    pub behavior: &'static [(BehaviorFlag, BehaviorLevel)],
}

use BehaviorFlag::*;
use BehaviorLevel::{Major as M, Minor as m};

pub const ROWS: [SubCategoryRow; 18] = [
    row(
        SubCategory::LivePorn,
        TopCategory::Sex,
        "Live Porn",
        &[2, 10, 11],
        &[(U3, M), (D1, M), (F3, M)],
    ),
    row(
        SubCategory::PornographyTrading,
        TopCategory::Sex,
        "Pornography Trading",
        &[4],
        &[(U1, M), (U3, m), (D2, M), (F1, M)],
    ),
    row(
        SubCategory::SexTrafficking,
        TopCategory::Sex,
        "Sex Trafficking",
        &[2],
        &[(U1, M), (D2, m), (F1, M), (F3, M)],
    ),
    row(
        SubCategory::SexMiscellany,
        TopCategory::Sex,
        "Sex Miscellany",
        &[],
        &[],
    ),
    row(
        SubCategory::GamblingGames,
        TopCategory::Gambling,
        "Gambling Games",
        &[3, 11],
        &[(U3, M), (D3, M), (F2, M)],
    ),
    row(
        SubCategory::SportsBetting,
        TopCategory::Gambling,
        "Sports & E-sports Betting",
        &[3, 11],
        &[(U1, M), (D3, M), (F2, M)],
    ),
    row(
        SubCategory::Lotteries,
        TopCategory::Gambling,
        "Lotteries",
        &[1, 3],
        &[(U1, M), (D2, M), (F1, M), (F2, m)],
    ),
    row(
        SubCategory::GamblingMiscellany,
        TopCategory::Gambling,
        "Gambling Miscellany",
        &[],
        &[],
    ),
    row(
        SubCategory::CryptocurrencyTrading,
        TopCategory::Financial,
        "Cryptocurrency Trading",
        &[6],
        &[(U1, M), (D1, m), (D2, M), (F2, M)],
    ),
    row(
        SubCategory::LoanCredit,
        TopCategory::Financial,
        "Loan & Credit Platform",
        &[1, 5, 11],
        &[(U1, M), (U2, M), (D2, M), (F1, M)],
    ),
    row(
        SubCategory::InsuranceProducts,
        TopCategory::Financial,
        "Insurance Products",
        &[1, 4, 7, 11],
        &[(U1, M), (U2, M), (D2, M), (F1, M)],
    ),
    row(
        SubCategory::FinancialInvestment,
        TopCategory::Financial,
        "Financial Investment",
        &[1, 6, 9],
        &[(U1, M), (U2, M), (D2, M), (F2, M)],
    ),
    row(
        SubCategory::FinancialMiscellany,
        TopCategory::Financial,
        "Financial Miscellany",
        &[],
        &[],
    ),
    row(
        SubCategory::SocialMedia,
        TopCategory::Service,
        "Social Media",
        &[1, 2, 8, 11],
        &[(U2, M), (F3, M)],
    ),
    row(
        SubCategory::EcommercePlatform,
        TopCategory::Service,
        "Ecommerce Platform",
        &[1, 4],
        &[(U1, M), (U2, m), (D2, M), (F1, M)],
    ),
    row(
        SubCategory::SharingPlatform,
        TopCategory::Service,
        "Sharing Platform",
        &[8],
        &[(U1, M), (U2, m), (D1, m)],
    ),
    row(
        SubCategory::ServiceMiscellany,
        TopCategory::Service,
        "Service Miscellany",
        &[],
        &[],
    ),
    row(
        SubCategory::AdvertisingService,
        TopCategory::AuxiliaryTool,
        "Advertising service",
        &[1, 9],
        &[(U2, M)],
    ),
];

const fn row(
    sub: SubCategory,
    top: TopCategory,
    name: &'static str,
    tactics: &'static [u8],
    behavior: &'static [(BehaviorFlag, BehaviorLevel)],
) -> SubCategoryRow {
    SubCategoryRow {
        sub,
        top,
        name,
        tactics,
        behavior,
    }
}

impl SubCategory {
    pub fn row(self) -> &'static SubCategoryRow {
        ROWS.iter()
            .find(|r| r.sub == self)
            .expect("every sub-category has a row")
    }

    pub fn top(self) -> TopCategory {
        self.row().top
    }

    pub fn name(self) -> &'static str {
        self.row().name
    }

    pub fn is_miscellany(self) -> bool {
        self.row().tactics.is_empty()
    }

    pub fn allowed_tactics(self) -> Option<BTreeSet<Tactic>> {
        let r = self.row();
        (!r.tactics.is_empty()).then(|| r.tactics.iter().map(|&n| Tactic(n)).collect())
    }

    /// Reference behavior profile for the sub-category; flags not listed are
    /// absent.
    pub fn reference_behavior(self) -> BTreeMap<BehaviorFlag, BehaviorLevel> {
        self.row().behavior.iter().copied().collect()
    }
}

impl fmt::Display for SubCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum LabelViolation {
    #[error("sub-category `{sub}` is not under `{top}`")]
    SubNotUnderTop { top: TopCategory, sub: SubCategory },
    #[error("tactic {tactic} is not listed for `{sub}`")]
    TacticNotListed { sub: SubCategory, tactic: Tactic },
}

/// Empty when the label is consistent with the categorization table.
pub fn validate_label(l: &TaxonomyLabel) -> Vec<LabelViolation> {
    let mut out = Vec::new();
    if l.sub.top() != l.top {
        out.push(LabelViolation::SubNotUnderTop {
            top: l.top,
            sub: l.sub,
        });
    }
    if let Some(allowed) = l.sub.allowed_tactics() {
        for &t in &l.tactics {
            if !allowed.contains(&t) {
                out.push(LabelViolation::TacticNotListed {
                    sub: l.sub,
                    tactic: t,
                });
            }
        }
    }
    out
}

/// Miscellany labels carrying tactics are accepted unchecked; callers may
/// surface this as a notice.
pub fn has_unchecked_tactics(l: &TaxonomyLabel) -> bool {
    l.sub.is_miscellany() && !l.tactics.is_empty()
}

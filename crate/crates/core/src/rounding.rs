//! Exact half-up decimal rounding for percentages and means.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Decimal with `P` fractional digits, stored as an integer count of
/// 10^-P units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Dec<const P: u32>(pub i64);

/// Two-decimal value, e.g. `10.08`.
pub type Dec2 = Dec<2>;
/// One-decimal value, e.g. `61.2`.
pub type Dec1 = Dec<1>;

impl<const P: u32> Dec<P> {
    pub const fn scale() -> i64 {
        10i64.pow(P)
    }

    /// `num / den` rounded half-up to P decimals; zero when `den` is zero.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self(div_half_up(
            i128::from(num) * i128::from(Self::scale()),
            i128::from(den),
        ))
    }

    /// `100 * num / den` rounded half-up to P decimals.
    pub fn percent(num: i64, den: i64) -> Self {
        Self(div_half_up(
            i128::from(num) * 100 * i128::from(Self::scale()),
            i128::from(den),
        ))
    }

    pub const fn from_units(units: i64) -> Self {
        Self(units)
    }

    pub fn units(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::scale() as f64
    }
}

/// Round `num / den` to the nearest integer, ties away from zero.
fn div_half_up(num: i128, den: i128) -> i64 {
    if den == 0 {
        return 0;
    }
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let q = if num >= 0 {
        (2 * num + den) / (2 * den)
    } else {
        -((-2 * num + den) / (2 * den))
    };
    i64::try_from(q).expect("rounded value fits in i64")
}

impl<const P: u32> fmt::Display for Dec<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let scale = Self::scale().unsigned_abs();
        if P == 0 {
            write!(f, "{sign}{abs}")
        } else {
            write!(
                f,
                "{sign}{}.{:0width$}",
                abs / scale,
                abs % scale,
                width = P as usize
            )
        }
    }
}

impl<const P: u32> Serialize for Dec<P> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de, const P: u32> Deserialize<'de> for Dec<P> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(Self((v * Self::scale() as f64).round() as i64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_style_percentages() {
        assert_eq!(Dec2::percent(85, 843).to_string(), "10.08");
        assert_eq!(Dec1::percent(52, 85).to_string(), "61.2");
        assert_eq!(Dec1::percent(2, 85).to_string(), "2.4");
        assert_eq!(Dec2::percent(279, 1264).to_string(), "22.07");
        assert_eq!(Dec2::percent(4, 47).to_string(), "8.51");
        assert_eq!(Dec2::percent(11, 47).to_string(), "23.40");
    }

    #[test]
    fn half_up_ties() {
        assert_eq!(Dec2::ratio(1, 8).to_string(), "0.13");
        assert_eq!(Dec1::ratio(1, 4).to_string(), "0.3");
        assert_eq!(Dec2::ratio(-1, 8).to_string(), "-0.13");
        assert_eq!(Dec2::ratio(5, 0), Dec2::default());
    }

    #[test]
    fn formatting() {
        assert_eq!(Dec2::from_units(5).to_string(), "0.05");
        assert_eq!(Dec2::from_units(10000).to_string(), "100.00");
        assert_eq!(Dec1::from_units(-7).to_string(), "-0.7");
        assert_eq!(
            serde_json::to_string(&Dec2::from_units(4223)).unwrap(),
            "42.23"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn within_half_unit(num in 0i64..1_000_000, den in 1i64..1_000_000) {
            let r = Dec2::ratio(num, den);
            let exact = num as f64 / den as f64 * 100.0;
            prop_assert!((r.0 as f64 - exact).abs() <= 0.5 + 1e-9);
        }
    }
}

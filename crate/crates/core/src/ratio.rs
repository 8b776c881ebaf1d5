//! Non-negative exact rationals for vote weights and metric ratios.

use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use alloc::string::ToString;

use crate::CoreError;

/// `numerator / denominator` with a non-zero denominator, not necessarily reduced.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ratio {
    numerator: u64,
    denominator: u64,
}

impl Ratio {
    pub const ZERO: Ratio = Ratio {
        numerator: 0,
        denominator: 1,
    };
    pub const ONE: Ratio = Ratio {
        numerator: 1,
        denominator: 1,
    };

    pub fn new(numerator: u64, denominator: u64) -> Option<Ratio> {
        (denominator != 0).then_some(Ratio {
            numerator,
            denominator,
        })
    }

    pub const fn numerator(self) -> u64 {
        self.numerator
    }

    pub const fn denominator(self) -> u64 {
        self.denominator
    }

    pub fn is_zero(self) -> bool {
        self.numerator == 0
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Lowest terms.
    pub fn reduced(self) -> Ratio {
        let g = gcd(self.numerator, self.denominator);
        Ratio {
            numerator: self.numerator / g,
            denominator: self.denominator / g,
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    if a == 0 {
        1
    } else {
        a
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = u128::from(self.numerator) * u128::from(other.denominator);
        let rhs = u128::from(other.numerator) * u128::from(self.denominator);
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Parses a plain decimal such as `0.7`, `1` or `12.125` exactly.
/// At most nine fractional digits; no sign, no exponent.
impl FromStr for Ratio {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || CoreError::InvalidWeight(s.to_string());
        let s = s.trim();
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) || frac_part.len() > 9 {
            return Err(err());
        }
        let denominator = 10u64.pow(frac_part.len() as u32);
        let int_value: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| err())?
        };
        let frac_value: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| err())?
        };
        let numerator = int_value
            .checked_mul(denominator)
            .and_then(|v| v.checked_add(frac_value))
            .ok_or_else(err)?;
        Ok(Ratio {
            numerator,
            denominator,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        let w: Ratio = "0.7".parse().unwrap();
        assert_eq!((w.numerator(), w.denominator()), (7, 10));
        assert_eq!("2".parse::<Ratio>().unwrap(), Ratio::new(2, 1).unwrap());
        assert_eq!(".5".parse::<Ratio>().unwrap(), Ratio::new(1, 2).unwrap());
        for bad in ["", ".", "-1", "1e3", "0.1234567890", "a"] {
            assert!(bad.parse::<Ratio>().is_err(), "{bad}");
        }
    }

    #[test]
    fn ordering_is_exact() {
        let a = Ratio::new(7, 10).unwrap();
        let b = Ratio::new(70, 100).unwrap();
        assert_eq!(a, b);
        assert!(Ratio::new(1, 3).unwrap() < Ratio::new(334, 1000).unwrap());
        assert_eq!(Ratio::new(24, 30).unwrap().reduced().denominator(), 5);
        assert!(Ratio::new(1, 0).is_none());
    }
}

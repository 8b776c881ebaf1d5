use core::fmt;
use core::str::FromStr;

use alloc::string::ToString;

use crate::CoreError;

/// Diagnostic class. The discriminant is the column/row index used in
/// probability vectors and confusion matrices: (Normal, CAP, COVID-19).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Class {
    #[cfg_attr(feature = "serde", serde(rename = "Normal"))]
    Normal = 0,
    #[cfg_attr(feature = "serde", serde(rename = "CAP"))]
    Cap = 1,
    #[cfg_attr(feature = "serde", serde(rename = "COVID19"))]
    Covid19 = 2,
}

impl Class {
    pub const COUNT: usize = 3;

    /// Report order.
    pub const ALL: [Class; 3] = [Class::Normal, Class::Cap, Class::Covid19];

    /// Tie-break order for every argmax in the pipeline: infection first.
    pub const PRIORITY: [Class; 3] = [Class::Covid19, Class::Cap, Class::Normal];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Class> {
        Class::ALL.get(index).copied()
    }

    pub const fn name(self) -> &'static str {
        match self {
            Class::Normal => "Normal",
            Class::Cap => "CAP",
            Class::Covid19 => "COVID19",
        }
    }

    pub const fn is_infection(self) -> bool {
        !matches!(self, Class::Normal)
    }

    /// Picks the class with the largest value, ties resolved by [`Class::PRIORITY`].
    pub fn argmax_by<T, F>(mut value: F) -> Class
    where
        T: PartialOrd,
        F: FnMut(Class) -> T,
    {
        let mut best = Class::PRIORITY[0];
        let mut best_value = value(best);
        for class in &Class::PRIORITY[1..] {
            let v = value(*class);
            if v > best_value {
                best = *class;
                best_value = v;
            }
        }
        best
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Class {
    type Err = CoreError;

    /// Case-insensitive; accepts `COVID19`, `COVID-19` and `COVID_19`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let token = s.trim();
        let eq = |name: &str| token.eq_ignore_ascii_case(name);
        if eq("normal") {
            Ok(Class::Normal)
        } else if eq("cap") {
            Ok(Class::Cap)
        } else if eq("covid19") || eq("covid-19") || eq("covid_19") {
            Ok(Class::Covid19)
        } else {
            Err(CoreError::UnknownClass(token.to_string()))
        }
    }
}

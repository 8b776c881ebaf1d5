//! Weighted patient-level vote over slice predictions.
//!
//! Central slices count fully; slices outside the central window count with
//! a per-class weight. With central counts `x, y, z` and peripheral counts
//! `x', y', z'` for (COVID-19, CAP, Normal) the scores are
//! `x + w_covid·x'`, `y + w_cap·y'` and `z + w_normal·z'`, and the patient
//! label is the best score, ties resolved COVID-19 > CAP > Normal.
//! Weights are exact decimals, so ties are detected exactly.

use crate::{Class, CoreError, Ratio};

/// Slice counts per predicted class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassTally {
    pub normal: u32,
    pub cap: u32,
    pub covid19: u32,
}

impl ClassTally {
    pub fn get(&self, class: Class) -> u32 {
        match class {
            Class::Normal => self.normal,
            Class::Cap => self.cap,
            Class::Covid19 => self.covid19,
        }
    }

    pub fn get_mut(&mut self, class: Class) -> &mut u32 {
        match class {
            Class::Normal => &mut self.normal,
            Class::Cap => &mut self.cap,
            Class::Covid19 => &mut self.covid19,
        }
    }

    pub fn total(&self) -> u64 {
        u64::from(self.normal) + u64::from(self.cap) + u64::from(self.covid19)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VoteCounts {
    pub central: ClassTally,
    pub peripheral: ClassTally,
}

impl VoteCounts {
    /// Counts from `(predicted class, is_central)` pairs.
    pub fn tally<I>(verdicts: I) -> VoteCounts
    where
        I: IntoIterator<Item = (Class, bool)>,
    {
        let mut counts = VoteCounts::default();
        for (class, central) in verdicts {
            let tally = if central {
                &mut counts.central
            } else {
                &mut counts.peripheral
            };
            *tally.get_mut(class) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteWeights {
    pub covid19: Ratio,
    pub cap: Ratio,
    pub normal: Ratio,
}

impl VoteWeights {
    pub fn new(covid19: Ratio, cap: Ratio, normal: Ratio) -> Result<Self, CoreError> {
        for w in [covid19, cap, normal] {
            if w.is_zero() {
                return Err(CoreError::InvalidWeight(alloc::format!("{w} (must be positive)")));
            }
        }
        Ok(VoteWeights {
            covid19,
            cap,
            normal,
        })
    }

    /// Parses `w_covid,w_cap,w_normal` as exact decimals.
    pub fn parse_triple(s: &str) -> Result<Self, CoreError> {
        let mut parts = s.split(',');
        let mut next = || -> Result<Ratio, CoreError> {
            parts
                .next()
                .ok_or_else(|| CoreError::InvalidWeight(s.into()))?
                .parse()
        };
        let (covid19, cap, normal) = (next()?, next()?, next()?);
        if parts.next().is_some() {
            return Err(CoreError::InvalidWeight(s.into()));
        }
        Self::new(covid19, cap, normal)
    }

    pub fn get(&self, class: Class) -> Ratio {
        match class {
            Class::Normal => self.normal,
            Class::Cap => self.cap,
            Class::Covid19 => self.covid19,
        }
    }
}

impl Default for VoteWeights {
    /// 0.7 for COVID-19 and CAP, 0.5 for Normal.
    fn default() -> Self {
        VoteWeights {
            covid19: Ratio::new(7, 10).unwrap(),
            cap: Ratio::new(7, 10).unwrap(),
            normal: Ratio::new(5, 10).unwrap(),
        }
    }
}

/// Per-class vote scores as exact rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteScores {
    pub normal: Ratio,
    pub cap: Ratio,
    pub covid19: Ratio,
}

impl VoteScores {
    pub fn get(&self, class: Class) -> Ratio {
        match class {
            Class::Normal => self.normal,
            Class::Cap => self.cap,
            Class::Covid19 => self.covid19,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteOutcome {
    pub scores: VoteScores,
    pub label: Class,
    /// Every count was zero; the label is the tie-break default.
    pub degenerate: bool,
}

fn score(central: u32, peripheral: u32, weight: Ratio) -> Ratio {
    // central + (num/den)·peripheral = (central·den + num·peripheral) / den
    let den = weight.denominator();
    let num = u64::from(central) * den + weight.numerator() * u64::from(peripheral);
    Ratio::new(num, den).expect("weight denominators are non-zero")
}

pub fn vote(counts: &VoteCounts, weights: &VoteWeights) -> VoteOutcome {
    let s = |class| {
        score(
            counts.central.get(class),
            counts.peripheral.get(class),
            weights.get(class),
        )
    };
    let scores = VoteScores {
        normal: s(Class::Normal),
        cap: s(Class::Cap),
        covid19: s(Class::Covid19),
    };
    VoteOutcome {
        scores,
        label: Class::argmax_by(|c| scores.get(c)),
        degenerate: counts.central.total() + counts.peripheral.total() == 0,
    }
}

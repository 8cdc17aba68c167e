//! Period keys for a three-level summary hierarchy.

use core::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PeriodLevel {
    L1,
    L2,
    L3,
}

impl PeriodLevel {
    pub const ALL: [PeriodLevel; 3] = [PeriodLevel::L1, PeriodLevel::L2, PeriodLevel::L3];

    pub fn index(self) -> usize {
        match self {
            PeriodLevel::L1 => 0,
            PeriodLevel::L2 => 1,
            PeriodLevel::L3 => 2,
        }
    }

    pub fn parent(self) -> Option<PeriodLevel> {
        match self {
            PeriodLevel::L1 => Some(PeriodLevel::L2),
            PeriodLevel::L2 => Some(PeriodLevel::L3),
            PeriodLevel::L3 => None,
        }
    }

    pub fn child(self) -> Option<PeriodLevel> {
        match self {
            PeriodLevel::L1 => None,
            PeriodLevel::L2 => Some(PeriodLevel::L1),
            PeriodLevel::L3 => Some(PeriodLevel::L2),
        }
    }
}

/// Calendar bucket used at one level of the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Granularity {
    Day,
    Month,
    Year,
    /// Consecutive windows of `years` calendar years starting at `anchor`.
    YearWindow { years: u32, anchor: i32 },
    /// One span covering every date.
    Career,
}

impl Granularity {
    pub fn describe(&self) -> alloc::string::String {
        match self {
            Granularity::Day => "daily".into(),
            Granularity::Month => "monthly".into(),
            Granularity::Year => "yearly".into(),
            Granularity::YearWindow { years, .. } => alloc::format!("{years}-year"),
            Granularity::Career => "career".into(),
        }
    }

    /// The span `[start, end]` containing `date`.
    pub fn span(&self, date: NaiveDate) -> (NaiveDate, NaiveDate) {
        let ymd = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date");
        match *self {
            Granularity::Day => (date, date),
            Granularity::Month => {
                let start = ymd(date.year(), date.month(), 1);
                let next = if date.month() == 12 { ymd(date.year() + 1, 1, 1) } else { ymd(date.year(), date.month() + 1, 1) };
                (start, next.pred_opt().expect("not the first representable day"))
            }
            Granularity::Year => (ymd(date.year(), 1, 1), ymd(date.year(), 12, 31)),
            Granularity::YearWindow { years, anchor } => {
                let w = years.max(1) as i32;
                let first = anchor + (date.year() - anchor).div_euclid(w) * w;
                (ymd(first, 1, 1), ymd(first + w - 1, 12, 31))
            }
            Granularity::Career => (career_start(), career_end()),
        }
    }

    /// True when every span of `self` lies inside a single span of `coarser`.
    pub fn nests_within(&self, coarser: &Granularity) -> bool {
        use Granularity::*;
        match (self, coarser) {
            (_, Career) => true,
            (Career, _) => false,
            (Day, _) => true,
            (Month, Day) => false,
            (Month, _) => true,
            (Year, Year) | (Year, YearWindow { .. }) => true,
            (Year, _) => false,
            (YearWindow { years: a, anchor: x }, YearWindow { years: b, anchor: y }) => {
                *a > 0 && *b > 0 && b % a == 0 && (x - y).rem_euclid(*a as i32) == 0
            }
            (YearWindow { .. }, _) => false,
        }
    }
}

pub fn career_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(1, 1, 1).expect("valid")
}

pub fn career_end() -> NaiveDate {
    NaiveDate::from_ymd_opt(9999, 12, 31).expect("valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PeriodKey {
    pub level: PeriodLevel,
    pub span_start: NaiveDate,
    pub span_end: NaiveDate,
}

impl PeriodKey {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.span_start <= date && date <= self.span_end
    }

    pub fn contains_span(&self, other: &PeriodKey) -> bool {
        self.span_start <= other.span_start && other.span_end <= self.span_end
    }
}

impl fmt::Display for PeriodKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}..{}]", self.level, self.span_start, self.span_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyError {
    pub finer: PeriodLevel,
}

impl fmt::Display for HierarchyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "spans of level {:?} do not nest inside the next level", self.finer)
    }
}

/// Granularities for L1, L2 and L3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodHierarchy {
    pub l1: Granularity,
    pub l2: Granularity,
    pub l3: Granularity,
}

impl Default for PeriodHierarchy {
    /// Publication corpora: year, three-year window anchored at 2000, career.
    fn default() -> Self {
        PeriodHierarchy {
            l1: Granularity::Year,
            l2: Granularity::YearWindow { years: 3, anchor: 2000 },
            l3: Granularity::Career,
        }
    }
}

impl PeriodHierarchy {
    /// Day / month / year, suited to diaries and notes.
    pub fn daily() -> Self {
        PeriodHierarchy { l1: Granularity::Day, l2: Granularity::Month, l3: Granularity::Year }
    }

    pub fn granularity(&self, level: PeriodLevel) -> &Granularity {
        match level {
            PeriodLevel::L1 => &self.l1,
            PeriodLevel::L2 => &self.l2,
            PeriodLevel::L3 => &self.l3,
        }
    }

    pub fn validate(&self) -> Result<(), HierarchyError> {
        if !self.l1.nests_within(&self.l2) {
            return Err(HierarchyError { finer: PeriodLevel::L1 });
        }
        if !self.l2.nests_within(&self.l3) {
            return Err(HierarchyError { finer: PeriodLevel::L2 });
        }
        Ok(())
    }

    pub fn assign(&self, date: NaiveDate, level: PeriodLevel) -> PeriodKey {
        let (span_start, span_end) = self.granularity(level).span(date);
        PeriodKey { level, span_start, span_end }
    }

    pub fn parent_of(&self, key: &PeriodKey) -> Option<PeriodKey> {
        key.level.parent().map(|p| self.assign(key.span_start, p))
    }

    /// `key` followed by all of its ancestors.
    pub fn ancestor_chain(&self, key: PeriodKey) -> alloc::vec::Vec<PeriodKey> {
        let mut chain = alloc::vec![key];
        while let Some(p) = self.parent_of(chain.last().expect("non-empty")) {
            chain.push(p);
        }
        chain
    }
}

//! Query abstract syntax.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::vocab::LabelVocab;

/// Half-open count interval `[lo, hi)`; `hi == None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: u32,
    pub hi: Option<u32>,
}

impl Interval {
    pub fn new(lo: u32, hi: Option<u32>) -> Result<Self> {
        match hi {
            Some(h) if h <= lo => Err(Error::InvalidInterval { lo, hi: h }),
            _ => Ok(Self { lo, hi }),
        }
    }

    pub fn exactly(c: u32) -> Self {
        Self {
            lo: c,
            hi: Some(c + 1),
        }
    }

    pub fn at_least(c: u32) -> Self {
        Self { lo: c, hi: None }
    }

    pub fn contains(&self, c: u32) -> bool {
        c >= self.lo && self.hi.is_none_or(|h| c < h)
    }

    /// The single admissible count, when there is exactly one.
    pub fn exact_value(&self) -> Option<u32> {
        match self.hi {
            Some(h) if h == self.lo + 1 => Some(self.lo),
            _ => None,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
        Interval::new(lo, hi).ok()
    }

    /// The `(count, indicator)` pair that `range_count_objects` uses for this
    /// interval, if one exists.
    pub fn as_indicator(&self) -> Option<(u32, i8)> {
        if let Some(c) = self.exact_value() {
            return Some((c, 0));
        }
        match self.hi {
            None if self.lo >= 1 => Some((self.lo - 1, 1)),
            Some(h) if self.lo == 0 => Some((h, -1)),
            _ => None,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(h) => write!(f, "[{},{})", self.lo, h),
            None => write!(f, "[{},inf)", self.lo),
        }
    }
}

/// Maps a `range_count_objects` `(count, indicator)` pair to an interval:
/// 0 is "exactly count", 1 is "more than count", -1 is "fewer than count".
pub fn indicator_to_interval(count: i64, indicator: i64) -> Result<Interval> {
    let bad = || Error::InvalidIndicator { count, indicator };
    let c = u32::try_from(count).map_err(|_| bad())?;
    match indicator {
        0 => Ok(Interval::exactly(c)),
        1 => Ok(Interval::at_least(c.checked_add(1).ok_or_else(bad)?)),
        -1 if c > 0 => Ok(Interval { lo: 0, hi: Some(c) }),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Unlisted classes are unconstrained.
    #[default]
    Open,
    /// Every non-ignored object must take one of the listed classes.
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CountConstraint {
    pub class: usize,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Counts {
        constraints: Vec<CountConstraint>,
        mode: Mode,
    },
    /// The class values of all objects add up to `target`.
    Sum {
        target: u32,
    },
    /// Each listed class occurs at least once.
    Presence {
        classes: Vec<usize>,
    },
    And(Vec<Query>),
}

impl Query {
    pub fn counts(pairs: &[(usize, Interval)], mode: Mode) -> Self {
        Query::Counts {
            constraints: pairs
                .iter()
                .map(|&(class, interval)| CountConstraint { class, interval })
                .collect(),
            mode,
        }
    }

    /// Exact counts, as `count_objects` produces them.
    pub fn exact_counts(pairs: &[(usize, u32)], mode: Mode) -> Self {
        Query::Counts {
            constraints: pairs
                .iter()
                .map(|&(class, c)| CountConstraint {
                    class,
                    interval: Interval::exactly(c),
                })
                .collect(),
            mode,
        }
    }

    /// Checks class indices and list distinctness. Ignored classes may never
    /// be constrained.
    pub fn validate(&self, vocab: &LabelVocab) -> Result<()> {
        let check_classes = |classes: &mut dyn Iterator<Item = usize>| -> Result<()> {
            let mut seen = Vec::new();
            for c in classes {
                if c >= vocab.len() {
                    return Err(Error::UnknownClass(c.to_string()));
                }
                if vocab.is_ignored(c) {
                    return Err(Error::IgnoredClass(vocab.name(c).into()));
                }
                if seen.contains(&c) {
                    return Err(Error::DuplicateClass(vocab.name(c).into()));
                }
                seen.push(c);
            }
            Ok(())
        };
        match self {
            Query::Counts { constraints, .. } => {
                for cc in constraints {
                    Interval::new(cc.interval.lo, cc.interval.hi)?;
                }
                check_classes(&mut constraints.iter().map(|c| c.class))
            }
            Query::Sum { .. } => Ok(()),
            Query::Presence { classes } => check_classes(&mut classes.iter().copied()),
            Query::And(parts) => {
                if parts.is_empty() {
                    return Err(Error::EmptyConjunction);
                }
                parts.iter().try_for_each(|q| q.validate(vocab))
            }
        }
    }

    /// Replaces the mode of every count constraint list.
    pub fn with_mode(self, new_mode: Mode) -> Self {
        match self {
            Query::Counts { constraints, .. } => Query::Counts {
                constraints,
                mode: new_mode,
            },
            Query::And(parts) => {
                Query::And(parts.into_iter().map(|q| q.with_mode(new_mode)).collect())
            }
            q => q,
        }
    }

    /// True if the query contains a sum term.
    pub fn has_sum(&self) -> bool {
        match self {
            Query::Sum { .. } => true,
            Query::And(parts) => parts.iter().any(Query::has_sum),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicators_follow_range_script_semantics() {
        assert_eq!(indicator_to_interval(4, 0).unwrap(), Interval::exactly(4));
        assert_eq!(indicator_to_interval(4, 1).unwrap(), Interval::at_least(5));
        assert_eq!(
            indicator_to_interval(4, -1).unwrap(),
            Interval { lo: 0, hi: Some(4) }
        );
        assert!(matches!(
            indicator_to_interval(0, -1),
            Err(Error::InvalidIndicator { .. })
        ));
        assert!(indicator_to_interval(3, 2).is_err());
        assert!(indicator_to_interval(-1, 0).is_err());
    }

    #[test]
    fn indicator_round_trip() {
        for c in 0..6i64 {
            for ind in -1..=1i64 {
                if let Ok(iv) = indicator_to_interval(c, ind) {
                    assert!(iv.hi.is_none_or(|h| iv.lo < h));
                    let (c2, ind2) = iv.as_indicator().unwrap();
                    assert_eq!(indicator_to_interval(c2 as i64, ind2 as i64).unwrap(), iv);
                }
            }
        }
    }

    #[test]
    fn intersect_and_contains() {
        let a = Interval::at_least(2);
        let b = Interval { lo: 0, hi: Some(4) };
        let i = a.intersect(&b).unwrap();
        assert_eq!(i, Interval { lo: 2, hi: Some(4) });
        assert!(i.contains(3) && !i.contains(4) && !i.contains(1));
        assert!(Interval::exactly(1)
            .intersect(&Interval::exactly(2))
            .is_none());
    }

    #[test]
    fn validate_rejects_duplicates_and_ignored() {
        let v = LabelVocab::new(&["a", "b", "none"], &["none"], None).unwrap();
        let dup = Query::exact_counts(&[(0, 1), (0, 2)], Mode::Open);
        assert_eq!(dup.validate(&v), Err(Error::DuplicateClass("a".into())));
        let ig = Query::Presence {
            classes: alloc::vec![2],
        };
        assert_eq!(ig.validate(&v), Err(Error::IgnoredClass("none".into())));
        assert_eq!(
            Query::And(Vec::new()).validate(&v),
            Err(Error::EmptyConjunction)
        );
    }
}

//! Three-valued directions shared by return classes, sentiment labels and
//! trading signals.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// A value in {−1, 0, +1}.
///
/// The same type encodes a realized return class, a sentiment label and a
/// trading signal, so that accuracy can be measured by plain equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Down,
    Flat,
    Up,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Down, Direction::Flat, Direction::Up];

    pub fn value(self) -> i8 {
        match self {
            Direction::Down => -1,
            Direction::Flat => 0,
            Direction::Up => 1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            -1 => Some(Direction::Down),
            0 => Some(Direction::Flat),
            1 => Some(Direction::Up),
            _ => None,
        }
    }

    /// Sign of an integer sum.
    pub fn signum(v: i64) -> Self {
        match v.signum() {
            -1 => Direction::Down,
            0 => Direction::Flat,
            _ => Direction::Up,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Direction::Down => Direction::Up,
            Direction::Flat => Direction::Flat,
            Direction::Up => Direction::Down,
        }
    }

    pub fn index(self) -> usize {
        (self.value() + 1) as usize
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Dated sequence of signals from one source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalSeries {
    pub source: String,
    pub entries: Vec<(NaiveDate, Direction)>,
}

impl SignalSeries {
    pub fn new(source: impl Into<String>, entries: Vec<(NaiveDate, Direction)>) -> Self {
        Self {
            source: source.into(),
            entries,
        }
    }

    pub fn from_parts(source: impl Into<String>, dates: &[NaiveDate], signals: &[Direction]) -> Self {
        debug_assert_eq!(dates.len(), signals.len());
        Self::new(
            source,
            dates.iter().copied().zip(signals.iter().copied()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, date: NaiveDate) -> Option<Direction> {
        self.entries
            .binary_search_by_key(&date, |(d, _)| *d)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn signals(&self) -> impl Iterator<Item = Direction> + '_ {
        self.entries.iter().map(|(_, s)| *s)
    }
}

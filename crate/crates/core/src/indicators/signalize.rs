use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{IndicatorError, Line, MacdOutput, SarOutput, VwMacdOutput};
use crate::signal::{Direction, SignalSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalRule {
    /// Sign of `macd_line - signal_line` on every defined day.
    MacdState,
    /// ±1 only on days the histogram changes sign.
    MacdCross,
    /// +1 when close is above SAR, else −1.
    SarSide,
    /// `MacdState` applied to the volume-weighted lines.
    VwState,
    /// +1 when close is above the slow volume-weighted EMA, else −1.
    VwPriceLevel,
    Passthrough,
}

impl SignalRule {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalRule::MacdState => "macd_state",
            SignalRule::MacdCross => "macd_cross",
            SignalRule::SarSide => "sar_side",
            SignalRule::VwState => "vw_state",
            SignalRule::VwPriceLevel => "vw_price_level",
            SignalRule::Passthrough => "passthrough",
        }
    }
}

impl fmt::Display for SignalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalRule {
    type Err = IndicatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "macd_state" => SignalRule::MacdState,
            "macd_cross" => SignalRule::MacdCross,
            "sar_side" => SignalRule::SarSide,
            "vw_state" => SignalRule::VwState,
            "vw_price_level" => SignalRule::VwPriceLevel,
            "passthrough" => SignalRule::Passthrough,
            other => return Err(IndicatorError::UnknownRule(other.to_string())),
        })
    }
}

pub enum IndicatorInput<'a> {
    Macd(&'a MacdOutput),
    VwMacd { output: &'a VwMacdOutput, close: &'a [f64] },
    Sar { output: &'a SarOutput, close: &'a [f64] },
    /// Already-discrete signals (sentiment labels, dual MACD).
    Discrete(&'a [Direction]),
}

impl IndicatorInput<'_> {
    fn kind(&self) -> &'static str {
        match self {
            IndicatorInput::Macd(_) => "macd",
            IndicatorInput::VwMacd { .. } => "vw_macd",
            IndicatorInput::Sar { .. } => "sar",
            IndicatorInput::Discrete(_) => "discrete",
        }
    }
}

fn sign(x: f64) -> Direction {
    if x > 0.0 {
        Direction::Up
    } else if x < 0.0 {
        Direction::Down
    } else {
        Direction::Flat
    }
}

fn state(hist: &Line, n: usize) -> Vec<Direction> {
    (0..n).map(|i| hist.get(i).map_or(Direction::Flat, sign)).collect()
}

fn cross(hist: &Line, n: usize) -> Vec<Direction> {
    let mut last = Direction::Flat;
    (0..n)
        .map(|i| {
            let s = hist.get(i).map_or(Direction::Flat, sign);
            if s == Direction::Flat {
                return Direction::Flat;
            }
            let crossed = last != Direction::Flat && s != last;
            last = s;
            if crossed {
                s
            } else {
                Direction::Flat
            }
        })
        .collect()
}

fn above(values: &Line, close: &[f64]) -> Vec<Direction> {
    close
        .iter()
        .enumerate()
        .map(|(i, c)| match values.get(i) {
            Some(level) if *c > level => Direction::Up,
            Some(_) => Direction::Down,
            None => Direction::Flat,
        })
        .collect()
}

/// Maps indicator output to one signal per date. Undefined (warmup) days
/// are 0.
pub fn signalize(
    input: IndicatorInput<'_>,
    rule: SignalRule,
    dates: &[NaiveDate],
    source: &str,
) -> Result<SignalSeries, IndicatorError> {
    let n = dates.len();
    let mismatch = || IndicatorError::RuleMismatch {
        rule: rule.as_str(),
        input: input.kind(),
    };
    let signals = match (&input, rule) {
        (IndicatorInput::Macd(m), SignalRule::MacdState) => state(&m.histogram, n),
        (IndicatorInput::Macd(m), SignalRule::MacdCross) => cross(&m.histogram, n),
        (IndicatorInput::VwMacd { output, .. }, SignalRule::VwState | SignalRule::MacdState) => {
            state(&output.macd.histogram, n)
        }
        (IndicatorInput::VwMacd { output, .. }, SignalRule::MacdCross) => {
            cross(&output.macd.histogram, n)
        }
        (IndicatorInput::VwMacd { output, close }, SignalRule::VwPriceLevel) => {
            above(&output.vwema_slow, close)
        }
        (IndicatorInput::Sar { output, close }, SignalRule::SarSide) => close
            .iter()
            .zip(&output.states)
            .enumerate()
            .map(|(i, (c, s))| match i {
                0 => Direction::Flat,
                _ if *c > s.sar => Direction::Up,
                _ => Direction::Down,
            })
            .collect(),
        (IndicatorInput::Discrete(d), SignalRule::Passthrough) => d.to_vec(),
        _ => return Err(mismatch()),
    };
    if signals.len() != n {
        return Err(IndicatorError::SeriesTooShort {
            len: signals.len(),
            required: n,
        });
    }
    Ok(SignalSeries::from_parts(source, dates, &signals))
}

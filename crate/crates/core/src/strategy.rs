//! Signal fusion and the all-in/all-out portfolio simulation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::PriceSeries;
use crate::signal::{Direction, SignalSeries};

pub const DEFAULT_CAPITAL: f64 = 10_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("component `{source_name}` has value {value}, expected -1, 0 or 1")]
    InvalidComponent { source_name: String, value: i64 },
    #[error("signals ({signals}) and prices ({prices}) are misaligned at index {index}")]
    SignalPriceMismatch {
        index: usize,
        signals: usize,
        prices: usize,
    },
    #[error("need at least 2 prices, got {0}")]
    TooShort(usize),
    #[error("initial capital must be positive, got {0}")]
    InvalidCapital(f64),
    #[error("unknown execution timing {0:?}")]
    UnknownExecution(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinedSignal {
    pub date: NaiveDate,
    pub components: BTreeMap<String, Direction>,
    pub signal: Direction,
}

/// Sign of the component sum; 0 when the sum is 0 (hold).
pub fn combine_signals(
    date: NaiveDate,
    components: &BTreeMap<String, i64>,
) -> Result<CombinedSignal, StrategyError> {
    let mut parsed = BTreeMap::new();
    let mut sum = 0i64;
    for (name, &value) in components {
        let d = Direction::from_value(value).ok_or_else(|| StrategyError::InvalidComponent {
            source_name: name.clone(),
            value,
        })?;
        sum += value;
        parsed.insert(name.clone(), d);
    }
    Ok(CombinedSignal {
        date,
        components: parsed,
        signal: Direction::signum(sum),
    })
}

/// Combines several series on `dates`. A series with no entry on a date
/// contributes 0.
pub fn combine_series(series: &[&SignalSeries], dates: &[NaiveDate]) -> Vec<CombinedSignal> {
    dates
        .iter()
        .map(|&date| {
            let components: BTreeMap<String, i64> = series
                .iter()
                .map(|s| (s.source.clone(), s.get(date).map_or(0, |d| d.value() as i64)))
                .collect();
            combine_signals(date, &components).expect("components come from Direction values")
        })
        .collect()
}

/// When a day's combined signal is acted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    SameDay,
    /// Trade at day t's close on the signal formed at day t−1.
    #[default]
    NextDay,
}

impl fmt::Display for Execution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Execution::SameDay => "same_day",
            Execution::NextDay => "next_day",
        })
    }
}

impl FromStr for Execution {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "same_day" => Ok(Execution::SameDay),
            "next_day" => Ok(Execution::NextDay),
            other => Err(StrategyError::UnknownExecution(other.to_string())),
        }
    }
}

/// Dated signals to execute under the given timing.
pub fn schedule(signals: &[CombinedSignal], execution: Execution) -> Vec<(NaiveDate, Direction)> {
    match execution {
        Execution::SameDay => signals.iter().map(|s| (s.date, s.signal)).collect(),
        Execution::NextDay => signals
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let prev = if i == 0 { Direction::Flat } else { signals[i - 1].signal };
                (s.date, prev)
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trade {
    Buy,
    Sell,
}

/// Post-trade portfolio at a day's close.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortfolioState {
    pub date: NaiveDate,
    pub cash: f64,
    pub shares: f64,
    pub price: f64,
    pub value: f64,
    /// Mark-to-market cumulative return `(value - C0) / C0`.
    pub ret: f64,
    pub trade: Option<Trade>,
    /// Value before the day's trade, at the same price.
    pub value_before: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquityCurve {
    pub initial_capital: f64,
    pub states: Vec<PortfolioState>,
}

impl EquityCurve {
    pub fn final_state(&self) -> Option<&PortfolioState> {
        self.states.last()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.states.iter().map(|s| s.date).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub capital: f64,
    /// Proportional cost per trade; 0 for zero-cost runs.
    pub cost_rate: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            capital: DEFAULT_CAPITAL,
            cost_rate: 0.0,
        }
    }
}

/// Runs the all-in/all-out state machine at each day's adjusted close.
/// `signals` must carry exactly the dates of `prices`.
pub fn simulate(
    prices: &PriceSeries,
    signals: &[(NaiveDate, Direction)],
    cfg: SimConfig,
) -> Result<EquityCurve, StrategyError> {
    if !(cfg.capital > 0.0) || !cfg.capital.is_finite() {
        return Err(StrategyError::InvalidCapital(cfg.capital));
    }
    let bars = prices.bars();
    if bars.len() != signals.len() {
        return Err(StrategyError::SignalPriceMismatch {
            index: bars.len().min(signals.len()),
            signals: signals.len(),
            prices: bars.len(),
        });
    }
    let mut cash = cfg.capital;
    let mut shares = 0.0;
    let mut states = Vec::with_capacity(bars.len());
    for (index, (bar, (date, signal))) in bars.iter().zip(signals).enumerate() {
        if bar.date != *date {
            return Err(StrategyError::SignalPriceMismatch {
                index,
                signals: signals.len(),
                prices: bars.len(),
            });
        }
        let price = bar.adj_close;
        let value_before = cash + shares * price;
        let trade = match signal {
            Direction::Up if cash > 0.0 => {
                shares = cash * (1.0 - cfg.cost_rate) / price;
                cash = 0.0;
                Some(Trade::Buy)
            }
            Direction::Down if shares > 0.0 => {
                cash = shares * price * (1.0 - cfg.cost_rate);
                shares = 0.0;
                Some(Trade::Sell)
            }
            _ => None,
        };
        let value = cash + shares * price;
        states.push(PortfolioState {
            date: *date,
            cash,
            shares,
            price,
            value,
            ret: (value - cfg.capital) / cfg.capital,
            trade,
            value_before,
        });
    }
    Ok(EquityCurve {
        initial_capital: cfg.capital,
        states,
    })
}

/// Buys at the first bar and never trades again.
pub fn buy_and_hold(prices: &PriceSeries, capital: f64) -> Result<EquityCurve, StrategyError> {
    if prices.len() < 2 {
        return Err(StrategyError::TooShort(prices.len()));
    }
    let signals: Vec<_> = prices.bars().iter().map(|b| (b.date, Direction::Up)).collect();
    simulate(
        prices,
        &signals,
        SimConfig {
            capital,
            cost_rate: 0.0,
        },
    )
}

/// Final mark-to-market return. An empty curve has return 0.
pub fn strategy_return(curve: &EquityCurve) -> f64 {
    curve
        .final_state()
        .map_or(0.0, |s| (s.value - curve.initial_capital) / curve.initial_capital)
}

/// Cash-only return `(C_T - C0) / C0`, which is −100% while holding shares.
pub fn cash_only_return(curve: &EquityCurve) -> f64 {
    curve
        .final_state()
        .map_or(0.0, |s| (s.cash - curve.initial_capital) / curve.initial_capital)
}

pub const EQUITY_COLUMNS: [&str; 6] = ["date", "cash", "shares", "price", "value", "return"];

pub fn write_equity_csv<W: Write>(curve: &EquityCurve, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EQUITY_COLUMNS)?;
    for s in &curve.states {
        w.write_record([
            s.date.to_string(),
            s.cash.to_string(),
            s.shares.to_string(),
            s.price.to_string(),
            s.value.to_string(),
            s.ret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

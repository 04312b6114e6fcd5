//! EMA-family indicators, parabolic SAR, and the rules that turn indicator
//! state into trading signals.

mod ema;
mod macd;
mod sar;
mod signalize;

use thiserror::Error;

pub use ema::{ema, Line};
pub use macd::{dual_macd, macd, vw_macd, MacdConfig, MacdOutput, VwMacdOutput, DUAL_LONG, DUAL_SHORT};
pub use sar::{parabolic_sar, SarConfig, SarOutput, SarState, Trend};
pub use signalize::{signalize, IndicatorInput, SignalRule};

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("period {period} is invalid for a series of length {len}")]
    PeriodTooLong { period: usize, len: usize },
    #[error("series of length {len} is shorter than the required {required}")]
    SeriesTooShort { len: usize, required: usize },
    #[error("close and volume lengths differ ({close} vs {volume})")]
    LengthMismatch { close: usize, volume: usize },
    #[error("negative volume at index {0}")]
    NegativeVolume(usize),
    #[error("volume EMA is zero at index {0}")]
    ZeroVolumeWindow(usize),
    #[error("unknown signal rule {0:?}")]
    UnknownRule(String),
    #[error("rule {rule} cannot be applied to {input} input")]
    RuleMismatch { rule: &'static str, input: &'static str },
}

use serde::{Deserialize, Serialize};

use super::IndicatorError;
use crate::market::PriceBar;
use crate::signal::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SarConfig {
    pub alpha0: f64,
    pub alpha_step: f64,
    pub alpha_max: f64,
}

impl Default for SarConfig {
    fn default() -> Self {
        Self {
            alpha0: 0.02,
            alpha_step: 0.02,
            alpha_max: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarState {
    pub sar: f64,
    pub ep: f64,
    pub alpha: f64,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarOutput {
    pub states: Vec<SarState>,
    /// +1 when close is above SAR, else −1. The initialization bar is 0.
    pub signals: Vec<Direction>,
}

impl SarOutput {
    pub fn sar(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.sar).collect()
    }

    pub fn flips(&self) -> usize {
        self.states.windows(2).filter(|w| w[0].trend != w[1].trend).count()
    }
}

/// Wilder's parabolic stop-and-reverse.
///
/// The first trend is up iff `close[1] >= close[0]`, starting from the first
/// bar's low (up) or high (down). SAR never enters the previous two bars'
/// range; a bar whose low (high) penetrates an up (down) SAR reverses the
/// trend, restarting at the prior extreme point.
pub fn parabolic_sar(bars: &[PriceBar], cfg: SarConfig) -> Result<SarOutput, IndicatorError> {
    if bars.len() < 2 {
        return Err(IndicatorError::SeriesTooShort {
            len: bars.len(),
            required: 2,
        });
    }
    let first = &bars[0];
    let trend = if bars[1].close >= first.close {
        Trend::Up
    } else {
        Trend::Down
    };
    let mut state = match trend {
        Trend::Up => SarState {
            sar: first.low,
            ep: first.high,
            alpha: cfg.alpha0,
            trend,
        },
        Trend::Down => SarState {
            sar: first.high,
            ep: first.low,
            alpha: cfg.alpha0,
            trend,
        },
    };
    let mut states = Vec::with_capacity(bars.len());
    states.push(state);
    for t in 1..bars.len() {
        let bar = &bars[t];
        let prev = &bars[t - 1];
        let prev2 = if t >= 2 { &bars[t - 2] } else { prev };
        let mut sar = state.sar + state.alpha * (state.ep - state.sar);
        state = match state.trend {
            Trend::Up => {
                sar = sar.min(prev.low).min(prev2.low);
                if bar.low < sar {
                    SarState {
                        sar: state.ep,
                        ep: bar.low,
                        alpha: cfg.alpha0,
                        trend: Trend::Down,
                    }
                } else if bar.high > state.ep {
                    SarState {
                        sar,
                        ep: bar.high,
                        alpha: (state.alpha + cfg.alpha_step).min(cfg.alpha_max),
                        trend: Trend::Up,
                    }
                } else {
                    SarState { sar, ..state }
                }
            }
            Trend::Down => {
                sar = sar.max(prev.high).max(prev2.high);
                if bar.high > sar {
                    SarState {
                        sar: state.ep,
                        ep: bar.high,
                        alpha: cfg.alpha0,
                        trend: Trend::Up,
                    }
                } else if bar.low < state.ep {
                    SarState {
                        sar,
                        ep: bar.low,
                        alpha: (state.alpha + cfg.alpha_step).min(cfg.alpha_max),
                        trend: Trend::Down,
                    }
                } else {
                    SarState { sar, ..state }
                }
            }
        };
        states.push(state);
    }
    let signals = states
        .iter()
        .zip(bars)
        .enumerate()
        .map(|(i, (s, b))| {
            if i == 0 {
                Direction::Flat
            } else if b.close > s.sar {
                Direction::Up
            } else {
                Direction::Down
            }
        })
        .collect();
    Ok(SarOutput { states, signals })
}

use serde::{Deserialize, Serialize};

use super::{ema, IndicatorError, Line};
use crate::signal::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacdConfig {
    pub fast: usize,
    pub slow: usize,
    pub signal: usize,
}

impl MacdConfig {
    pub const fn new(fast: usize, slow: usize, signal: usize) -> Self {
        Self { fast, slow, signal }
    }

    pub fn min_len(&self) -> usize {
        self.slow + self.signal
    }
}

impl Default for MacdConfig {
    fn default() -> Self {
        DUAL_SHORT
    }
}

pub const DUAL_SHORT: MacdConfig = MacdConfig::new(12, 26, 9);
pub const DUAL_LONG: MacdConfig = MacdConfig::new(19, 39, 9);

#[derive(Debug, Clone, PartialEq)]
pub struct MacdOutput {
    pub macd_line: Line,
    pub signal_line: Line,
    pub histogram: Line,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VwMacdOutput {
    pub macd: MacdOutput,
    /// Slow volume-weighted EMA, for the price-level rule.
    pub vwema_slow: Line,
}

fn check_len(len: usize, cfg: &MacdConfig) -> Result<(), IndicatorError> {
    if len < cfg.min_len() || cfg.fast == 0 || cfg.signal == 0 {
        return Err(IndicatorError::SeriesTooShort {
            len,
            required: cfg.min_len(),
        });
    }
    Ok(())
}

fn from_lines(fast: &Line, slow: &Line, signal: usize) -> Result<MacdOutput, IndicatorError> {
    let macd_line = fast.minus(slow);
    let sig = ema(&macd_line.values, signal)?;
    let signal_line = Line {
        offset: macd_line.offset + sig.offset,
        values: sig.values,
    };
    let histogram = macd_line.minus(&signal_line);
    Ok(MacdOutput {
        macd_line,
        signal_line,
        histogram,
    })
}

pub fn macd(close: &[f64], cfg: MacdConfig) -> Result<MacdOutput, IndicatorError> {
    check_len(close.len(), &cfg)?;
    let fast = ema(close, cfg.fast)?;
    let slow = ema(close, cfg.slow)?;
    from_lines(&fast, &slow, cfg.signal)
}

/// Volume-weighted EMA: `ema(close*volume, n) / ema(volume, n)`.
fn vwema(close: &[f64], volume: &[f64], period: usize) -> Result<Line, IndicatorError> {
    let weighted: Vec<f64> = close.iter().zip(volume).map(|(c, v)| c * v).collect();
    let num = ema(&weighted, period)?;
    let den = ema(volume, period)?;
    let values = num
        .values
        .iter()
        .zip(&den.values)
        .enumerate()
        .map(|(i, (n, d))| {
            if *d == 0.0 {
                Err(IndicatorError::ZeroVolumeWindow(den.offset + i))
            } else {
                Ok(n / d)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Line {
        offset: num.offset,
        values,
    })
}

pub fn vw_macd(close: &[f64], volume: &[f64], cfg: MacdConfig) -> Result<VwMacdOutput, IndicatorError> {
    if close.len() != volume.len() {
        return Err(IndicatorError::LengthMismatch {
            close: close.len(),
            volume: volume.len(),
        });
    }
    check_len(close.len(), &cfg)?;
    if let Some(i) = volume.iter().position(|v| *v < 0.0) {
        return Err(IndicatorError::NegativeVolume(i));
    }
    let fast = vwema(close, volume, cfg.fast)?;
    let slow = vwema(close, volume, cfg.slow)?;
    let macd = from_lines(&fast, &slow, cfg.signal)?;
    Ok(VwMacdOutput {
        macd,
        vwema_slow: slow,
    })
}

/// Agreement filter over two MACD configurations: +1 where both histograms
/// are positive, −1 where both are negative, 0 elsewhere (including warmup).
pub fn dual_macd(
    close: &[f64],
    short_cfg: MacdConfig,
    long_cfg: MacdConfig,
) -> Result<Vec<Direction>, IndicatorError> {
    let required = short_cfg.min_len().max(long_cfg.min_len());
    if close.len() < required {
        return Err(IndicatorError::SeriesTooShort {
            len: close.len(),
            required,
        });
    }
    let short = macd(close, short_cfg)?;
    let long = macd(close, long_cfg)?;
    Ok((0..close.len())
        .map(|i| match (short.histogram.get(i), long.histogram.get(i)) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Direction::Up,
            (Some(a), Some(b)) if a < 0.0 && b < 0.0 => Direction::Down,
            _ => Direction::Flat,
        })
        .collect())
}

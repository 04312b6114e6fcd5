use super::IndicatorError;

/// A derived sequence aligned to its source: `values[i]` belongs to source
/// index `offset + i`. Indices before `offset` are undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub offset: usize,
    pub values: Vec<f64>,
}

impl Line {
    pub fn get(&self, index: usize) -> Option<f64> {
        index
            .checked_sub(self.offset)
            .and_then(|i| self.values.get(i).copied())
    }

    /// One past the last defined source index.
    pub fn end(&self) -> usize {
        self.offset + self.values.len()
    }

    /// Elementwise `self - other` over the indices both define.
    pub fn minus(&self, other: &Line) -> Line {
        let offset = self.offset.max(other.offset);
        let end = self.end().min(other.end());
        Line {
            offset,
            values: (offset..end)
                .map(|i| self.values[i - self.offset] - other.values[i - other.offset])
                .collect(),
        }
    }
}

/// Exponential moving average seeded with the simple mean of the first
/// `period` values, then `e[t] = a*x[t] + (1-a)*e[t-1]` with `a = 2/(period+1)`.
pub fn ema(series: &[f64], period: usize) -> Result<Line, IndicatorError> {
    if period == 0 || series.len() < period {
        return Err(IndicatorError::PeriodTooLong {
            period,
            len: series.len(),
        });
    }
    let alpha = 2.0 / (period as f64 + 1.0);
    let seed = series[..period].iter().sum::<f64>() / period as f64;
    let mut values = Vec::with_capacity(series.len() - period + 1);
    values.push(seed);
    let mut prev = seed;
    for &x in &series[period..] {
        prev = alpha * x + (1.0 - alpha) * prev;
        values.push(prev);
    }
    Ok(Line {
        offset: period - 1,
        values,
    })
}

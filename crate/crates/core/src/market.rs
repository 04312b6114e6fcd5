//! Daily price bars, simple returns and three-class return labels.

use std::io::Read;

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::signal::Direction;

pub const PRICE_COLUMNS: [&str; 7] = ["date", "open", "high", "low", "close", "adj_close", "volume"];

#[derive(Debug, Error, PartialEq)]
pub enum MarketDataError {
    #[error("missing column `{0}` in price header")]
    MissingColumn(String),
    #[error("row {row}: duplicate date {date}")]
    DuplicateDate { row: usize, date: NaiveDate },
    #[error("row {row}: date {date} is not after the previous row")]
    NonMonotonicDate { row: usize, date: NaiveDate },
    #[error("row {row}: non-positive price in `{column}`")]
    NegativePrice { row: usize, column: &'static str },
    #[error("row {row}: bar violates low <= open,close <= high")]
    InconsistentBar { row: usize },
    #[error("row {row}: {message}")]
    InvalidField { row: usize, message: String },
    #[error("need at least 2 prices, got {0}")]
    TooShort(usize),
    #[error("invalid thresholds: need negative < 0 < positive, got ({negative}, {positive})")]
    InvalidThresholds { negative: f64, positive: f64 },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: u64,
}

/// Bars with strictly increasing dates. The dates double as the trading
/// calendar; there is no separate holiday table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceSeries {
    bars: Vec<PriceBar>,
}

impl PriceSeries {
    /// Builds a series after checking date order and bar sanity.
    pub fn new(bars: Vec<PriceBar>) -> Result<Self, MarketDataError> {
        for (i, bar) in bars.iter().enumerate() {
            validate_bar(i, bar)?;
            if i > 0 {
                let prev = bars[i - 1].date;
                if bar.date == prev {
                    return Err(MarketDataError::DuplicateDate { row: i, date: bar.date });
                }
                if bar.date < prev {
                    return Err(MarketDataError::NonMonotonicDate { row: i, date: bar.date });
                }
            }
        }
        Ok(Self { bars })
    }

    pub fn bars(&self) -> &[PriceBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    pub fn adj_closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.adj_close).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.volume as f64).collect()
    }

    /// Bars whose date lies in `[from, to]`.
    pub fn window(&self, from: NaiveDate, to: NaiveDate) -> PriceSeries {
        PriceSeries {
            bars: self
                .bars
                .iter()
                .filter(|b| b.date >= from && b.date <= to)
                .copied()
                .collect(),
        }
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.bars.binary_search_by_key(&date, |b| b.date).ok()
    }
}

fn validate_bar(row: usize, bar: &PriceBar) -> Result<(), MarketDataError> {
    let prices: [(&'static str, f64); 5] = [
        ("open", bar.open),
        ("high", bar.high),
        ("low", bar.low),
        ("close", bar.close),
        ("adj_close", bar.adj_close),
    ];
    for (column, value) in prices {
        if !value.is_finite() || value <= 0.0 {
            return Err(MarketDataError::NegativePrice { row, column });
        }
    }
    let ok = bar.low <= bar.high
        && bar.low <= bar.open
        && bar.open <= bar.high
        && bar.low <= bar.close
        && bar.close <= bar.high;
    if !ok {
        return Err(MarketDataError::InconsistentBar { row });
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawBar {
    date: String,
    open: String,
    high: String,
    low: String,
    close: String,
    adj_close: String,
    volume: String,
}

/// Parses a `date,open,high,low,close,adj_close,volume` document.
///
/// Row indices in errors are zero-based data rows (the header is not counted).
pub fn parse_price_csv<R: Read>(reader: R) -> Result<PriceSeries, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MarketDataError::Csv(e.to_string()))?
        .clone();
    for column in PRICE_COLUMNS {
        if !headers.iter().any(|h| h == column) {
            return Err(MarketDataError::MissingColumn(column.to_string()));
        }
    }
    let mut bars = Vec::new();
    for (row, record) in rdr.deserialize::<RawBar>().enumerate() {
        let raw = record.map_err(|e| MarketDataError::InvalidField {
            row,
            message: e.to_string(),
        })?;
        let bar = parse_bar(row, &raw)?;
        validate_bar(row, &bar)?;
        if let Some(prev) = bars.last().map(|b: &PriceBar| b.date) {
            if bar.date == prev {
                return Err(MarketDataError::DuplicateDate { row, date: bar.date });
            }
            if bar.date < prev {
                return Err(MarketDataError::NonMonotonicDate { row, date: bar.date });
            }
        }
        bars.push(bar);
    }
    Ok(PriceSeries { bars })
}

pub fn parse_price_str(text: &str) -> Result<PriceSeries, MarketDataError> {
    parse_price_csv(text.as_bytes())
}

fn parse_bar(row: usize, raw: &RawBar) -> Result<PriceBar, MarketDataError> {
    let field = |name: &str, v: &str| -> Result<f64, MarketDataError> {
        v.parse::<f64>().map_err(|_| MarketDataError::InvalidField {
            row,
            message: format!("cannot parse `{name}` value {v:?}"),
        })
    };
    let date = NaiveDate::parse_from_str(&raw.date, "%Y-%m-%d").map_err(|_| {
        MarketDataError::InvalidField {
            row,
            message: format!("cannot parse date {:?}", raw.date),
        }
    })?;
    let volume = raw.volume.parse::<u64>().map_err(|_| MarketDataError::InvalidField {
        row,
        message: format!("cannot parse `volume` value {:?}", raw.volume),
    })?;
    Ok(PriceBar {
        date,
        open: field("open", &raw.open)?,
        high: field("high", &raw.high)?,
        low: field("low", &raw.low)?,
        close: field("close", &raw.close)?,
        adj_close: field("adj_close", &raw.adj_close)?,
        volume,
    })
}

/// Writes the series back in the canonical price-file layout.
pub fn write_price_csv<W: std::io::Write>(prices: &PriceSeries, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PRICE_COLUMNS)?;
    for b in prices.bars() {
        w.write_record([
            b.date.to_string(),
            b.open.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.close.to_string(),
            b.adj_close.to_string(),
            b.volume.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Simple daily returns; entry `i` is dated at bar `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub entries: Vec<(NaiveDate, f64)>,
}

impl ReturnSeries {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, r)| *r).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.entries.iter().map(|(d, _)| *d).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn compute_returns(prices: &PriceSeries) -> Result<ReturnSeries, MarketDataError> {
    if prices.len() < 2 {
        return Err(MarketDataError::TooShort(prices.len()));
    }
    let entries = prices
        .bars()
        .windows(2)
        .map(|w| (w[1].date, w[1].adj_close / w[0].adj_close - 1.0))
        .collect();
    Ok(ReturnSeries { entries })
}

/// Class boundaries for returns and return forecasts. Values exactly on a
/// boundary are neutral.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, serde::Serialize)]
pub struct Thresholds {
    pub positive: f64,
    pub negative: f64,
}

pub const DEFAULT_THRESHOLDS: Thresholds = Thresholds {
    positive: 0.01,
    negative: -0.01,
};

impl Default for Thresholds {
    fn default() -> Self {
        DEFAULT_THRESHOLDS
    }
}

impl Thresholds {
    pub fn new(positive: f64, negative: f64) -> Result<Self, MarketDataError> {
        let t = Thresholds { positive, negative };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), MarketDataError> {
        if self.negative < 0.0 && 0.0 < self.positive {
            Ok(())
        } else {
            Err(MarketDataError::InvalidThresholds {
                negative: self.negative,
                positive: self.positive,
            })
        }
    }

    pub fn classify(&self, r: f64) -> Direction {
        if r > self.positive {
            Direction::Up
        } else if r < self.negative {
            Direction::Down
        } else {
            Direction::Flat
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSeries {
    pub entries: Vec<(NaiveDate, Direction)>,
}

impl ClassSeries {
    pub fn get(&self, date: NaiveDate) -> Option<Direction> {
        self.entries
            .binary_search_by_key(&date, |(d, _)| *d)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Counts indexed by `Direction::index` (down, flat, up).
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for (_, d) in &self.entries {
            c[d.index()] += 1;
        }
        c
    }
}

pub fn label_returns(
    returns: &ReturnSeries,
    thresholds: &Thresholds,
) -> Result<ClassSeries, MarketDataError> {
    thresholds.validate()?;
    Ok(ClassSeries {
        entries: returns
            .entries
            .iter()
            .map(|(d, r)| (*d, thresholds.classify(*r)))
            .collect(),
    })
}

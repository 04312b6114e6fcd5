//! News text cleaning, trading-day assignment, daily sentiment voting and the
//! lagged join against realized return classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::{Datelike, Days, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::market::ClassSeries;
use crate::signal::{Direction, SignalSeries};

#[derive(Debug, Error, PartialEq)]
pub enum NewsError {
    #[error("row {row}: cannot parse timestamp {value:?}")]
    InvalidTimestamp { row: usize, value: String },
    #[error("row {row}: unknown news source {value:?}")]
    UnknownSource { row: usize, value: String },
    #[error("row {row}: unknown sentiment model {value:?}")]
    UnknownModel { row: usize, value: String },
    #[error("row {row}: label {value:?} not in {{-1,0,1}}")]
    InvalidLabel { row: usize, value: String },
    #[error("row {row}: score {value:?} not in [0,1]")]
    InvalidScore { row: usize, value: String },
    #[error("timestamp {0} has no trading day in the calendar")]
    BeyondCalendar(NaiveDateTime),
    #[error("trading calendar is empty")]
    EmptyCalendar,
    #[error("cannot vote on an empty record group")]
    EmptyGroup,
    #[error("lag {0} outside 0..=2")]
    LagOutOfRange(usize),
    #[error("class date {0} is not a trading day")]
    ClassOffCalendar(NaiveDate),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for NewsError {
    fn from(e: csv::Error) -> Self {
        NewsError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NewsSource {
    DowJones,
    Benzinga,
    Barron,
    MarketWatch,
    Wsj,
}

impl NewsSource {
    pub const ALL: [NewsSource; 5] = [
        NewsSource::DowJones,
        NewsSource::Benzinga,
        NewsSource::Barron,
        NewsSource::MarketWatch,
        NewsSource::Wsj,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NewsSource::DowJones => "DowJones",
            NewsSource::Benzinga => "Benzinga",
            NewsSource::Barron => "Barron",
            NewsSource::MarketWatch => "MarketWatch",
            NewsSource::Wsj => "WSJ",
        }
    }
}

impl fmt::Display for NewsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NewsSource {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "dowjones" | "dj" => Ok(NewsSource::DowJones),
            "benzinga" => Ok(NewsSource::Benzinga),
            "barron" | "barrons" => Ok(NewsSource::Barron),
            "marketwatch" => Ok(NewsSource::MarketWatch),
            "wsj" | "wallstreetjournal" => Ok(NewsSource::Wsj),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SentimentModel {
    Gpt2,
    FinBert,
}

impl SentimentModel {
    pub fn as_str(self) -> &'static str {
        match self {
            SentimentModel::Gpt2 => "GPT2",
            SentimentModel::FinBert => "FinBERT",
        }
    }
}

impl fmt::Display for SentimentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentModel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "gpt2" => Ok(SentimentModel::Gpt2),
            "finbert" => Ok(SentimentModel::FinBert),
            _ => Err(()),
        }
    }
}

/// One (model, source) sentiment stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SentimentKey {
    pub model: SentimentModel,
    pub source: NewsSource,
}

impl fmt::Display for SentimentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sentiment:{}:{}", self.model, self.source)
    }
}

impl FromStr for SentimentKey {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let mut parts = s.split(':');
        if parts.next() != Some("sentiment") {
            return Err(());
        }
        let model = parts.next().ok_or(())?.parse()?;
        let source = parts.next().ok_or(())?.parse()?;
        if parts.next().is_some() {
            return Err(());
        }
        Ok(SentimentKey { model, source })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsArticle {
    pub timestamp: NaiveDateTime,
    pub source: NewsSource,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentRecord {
    pub timestamp: NaiveDateTime,
    pub source: NewsSource,
    pub model: SentimentModel,
    pub label: Direction,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailySentiment {
    pub trading_day: NaiveDate,
    pub source: NewsSource,
    pub model: SentimentModel,
    pub label: Direction,
    /// Indexed by `Direction::index`.
    pub vote_counts: [usize; 3],
    pub first_label: Direction,
}

impl DailySentiment {
    pub fn key(&self) -> SentimentKey {
        SentimentKey {
            model: self.model,
            source: self.source,
        }
    }
}

pub const DEFAULT_BOILERPLATE_MARKERS: [&str; 3] = ["Copyright", "Photo by", "Write to "];
pub const DEFAULT_DROP_KEYWORDS: [&str; 1] = ["Amundi S&P 500"];

/// Cuts everything from the earliest boilerplate marker on and collapses
/// whitespace runs to single spaces.
pub fn clean_article<S: AsRef<str>>(raw: &str, markers: &[S]) -> String {
    let cut = markers
        .iter()
        .filter_map(|m| {
            let m = m.as_ref();
            if m.is_empty() {
                None
            } else {
                raw.find(m)
            }
        })
        .min()
        .unwrap_or(raw.len());
    raw[..cut].split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True when the article mentions any drop keyword in its title or body.
pub fn is_non_news<S: AsRef<str>>(article: &NewsArticle, keywords: &[S]) -> bool {
    keywords.iter().any(|k| {
        let k = k.as_ref();
        !k.is_empty() && (article.title.contains(k) || article.text.contains(k))
    })
}

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

fn date_patterns() -> &'static [Regex; 3] {
    static PATTERNS: OnceLock<[Regex; 3]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(
                r"(?i)\b(Jan(?:uary)?|Feb(?:ruary)?|Mar(?:ch)?|Apr(?:il)?|May|June?|July?|Aug(?:ust)?|Sep(?:t(?:ember)?)?|Oct(?:ober)?|Nov(?:ember)?|Dec(?:ember)?)\.?\s+(\d{1,2}),?\s+(\d{4})\b",
            )
            .unwrap(),
            Regex::new(r"\b(\d{4})-(\d{2})-(\d{2})(?:[^0-9]|$)").unwrap(),
            Regex::new(r"\b(\d{1,2})/(\d{1,2})/(\d{4})\b").unwrap(),
        ]
    })
}

fn month_number(name: &str) -> Option<u32> {
    let lower = name.to_ascii_lowercase();
    MONTHS
        .iter()
        .position(|m| m.starts_with(&lower[..lower.len().min(3)]))
        .map(|i| i as u32 + 1)
}

/// Finds the leftmost valid calendar date written as `May 10, 2024`,
/// `2024-05-10` or `05/10/2024`.
pub fn extract_embedded_date(raw: &str) -> Option<NaiveDate> {
    let [named, iso, us] = date_patterns();
    let mut found: Vec<(usize, NaiveDate)> = Vec::new();
    for c in named.captures_iter(raw) {
        let month = month_number(&c[1]);
        let day = c[2].parse().ok();
        let year = c[3].parse().ok();
        if let (Some(m), Some(d), Some(y)) = (month, day, year) {
            if let Some(date) = NaiveDate::from_ymd_opt(y, m, d) {
                found.push((c.get(0).unwrap().start(), date));
                break;
            }
        }
    }
    for c in iso.captures_iter(raw) {
        if let (Ok(y), Ok(m), Ok(d)) = (c[1].parse(), c[2].parse(), c[3].parse()) {
            if let Some(date) = NaiveDate::from_ymd_opt(y, m, d) {
                found.push((c.get(0).unwrap().start(), date));
                break;
            }
        }
    }
    for c in us.captures_iter(raw) {
        if let (Ok(m), Ok(d), Ok(y)) = (c[1].parse(), c[2].parse(), c[3].parse()) {
            if let Some(date) = NaiveDate::from_ymd_opt(y, m, d) {
                found.push((c.get(0).unwrap().start(), date));
                break;
            }
        }
    }
    found.into_iter().min_by_key(|(pos, _)| *pos).map(|(_, d)| d)
}

/// Sorted set of trading dates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Result<Self, NewsError> {
        let dates: Vec<NaiveDate> = dates.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if dates.is_empty() {
            return Err(NewsError::EmptyCalendar);
        }
        Ok(Self { dates })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.binary_search(&date).is_ok()
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn on_or_after(&self, date: NaiveDate) -> Option<NaiveDate> {
        let i = self.dates.partition_point(|d| *d < date);
        self.dates.get(i).copied()
    }

    pub fn after(&self, date: NaiveDate) -> Option<NaiveDate> {
        let i = self.dates.partition_point(|d| *d <= date);
        self.dates.get(i).copied()
    }
}

pub fn market_close() -> NaiveTime {
    NaiveTime::from_hms_opt(16, 0, 0).unwrap()
}

/// Maps an Eastern-time timestamp to the trading day whose return it can
/// first affect.
pub fn assign_trading_day(
    ts: NaiveDateTime,
    calendar: &TradingCalendar,
) -> Result<NaiveDate, NewsError> {
    let first = calendar.dates[0];
    let last = *calendar.dates.last().unwrap();
    let date = ts.date();
    if date + Days::new(7) < first || date > last + Days::new(7) {
        return Err(NewsError::BeyondCalendar(ts));
    }
    let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
    let day = if ts.time() >= market_close() && !weekend {
        calendar.after(date)
    } else {
        calendar.on_or_after(date)
    };
    day.ok_or(NewsError::BeyondCalendar(ts))
}

/// Mode of the labels in one (day, source, model) group. Ties go to the
/// chronologically first record's label when it is among the tied classes,
/// otherwise to neutral.
pub fn vote_daily(
    trading_day: NaiveDate,
    records: &[SentimentRecord],
) -> Result<DailySentiment, NewsError> {
    let first = records
        .iter()
        .enumerate()
        .min_by_key(|(i, r)| (r.timestamp, *i))
        .map(|(_, r)| r)
        .ok_or(NewsError::EmptyGroup)?;
    let mut counts = [0usize; 3];
    for r in records {
        counts[r.label.index()] += 1;
    }
    let max = *counts.iter().max().unwrap();
    let tied: Vec<Direction> = Direction::ALL
        .into_iter()
        .filter(|d| counts[d.index()] == max)
        .collect();
    let label = match tied.as_slice() {
        [only] => *only,
        _ if tied.contains(&first.label) => first.label,
        _ => Direction::Flat,
    };
    Ok(DailySentiment {
        trading_day,
        source: first.source,
        model: first.model,
        label,
        vote_counts: counts,
        first_label: first.label,
    })
}

/// Result of grouping raw sentiment records into daily votes.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyAggregation {
    pub daily: Vec<DailySentiment>,
    /// Records whose timestamp had no trading day in the calendar.
    pub dropped: usize,
}

/// Assigns each record a trading day, groups by (day, source, model) and
/// votes each group. Output is sorted by (day, model, source).
pub fn aggregate_daily(
    records: &[SentimentRecord],
    calendar: &TradingCalendar,
) -> DailyAggregation {
    let mut groups: BTreeMap<(NaiveDate, SentimentModel, NewsSource), Vec<SentimentRecord>> =
        BTreeMap::new();
    let mut dropped = 0;
    for r in records {
        match assign_trading_day(r.timestamp, calendar) {
            Ok(day) => groups
                .entry((day, r.model, r.source))
                .or_default()
                .push(r.clone()),
            Err(_) => dropped += 1,
        }
    }
    let daily = groups
        .into_iter()
        .map(|((day, _, _), recs)| vote_daily(day, &recs).expect("groups are non-empty"))
        .collect();
    DailyAggregation { daily, dropped }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedLabel {
    pub label: Direction,
    /// No article for this stream on the sentiment day; `label` is neutral.
    pub missing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedRow {
    pub class_day: NaiveDate,
    pub sentiment_day: NaiveDate,
    pub return_class: Direction,
    pub labels: BTreeMap<SentimentKey, AlignedLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedDataset {
    pub lag: usize,
    pub keys: Vec<SentimentKey>,
    pub rows: Vec<AlignedRow>,
}

impl AlignedDataset {
    /// Sentiment predictions for one stream, dated at the class day they
    /// predict.
    pub fn signal_series(&self, key: SentimentKey) -> SignalSeries {
        SignalSeries::new(
            key.to_string(),
            self.rows
                .iter()
                .map(|r| {
                    let l = r.labels.get(&key).map(|l| l.label).unwrap_or(Direction::Flat);
                    (r.class_day, l)
                })
                .collect(),
        )
    }
}

pub const MAX_LAG: usize = 2;

/// Pairs sentiment of trading day `d` with the return class of the trading
/// day `k` calendar positions later. Class days without a sentiment day `k`
/// positions back are outside the evaluation window and skipped.
pub fn join_sentiment_returns(
    daily: &[DailySentiment],
    classes: &ClassSeries,
    calendar: &TradingCalendar,
    k: usize,
) -> Result<AlignedDataset, NewsError> {
    if k > MAX_LAG {
        return Err(NewsError::LagOutOfRange(k));
    }
    let keys: Vec<SentimentKey> = daily
        .iter()
        .map(DailySentiment::key)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<(NaiveDate, SentimentKey), Direction> = daily
        .iter()
        .map(|d| ((d.trading_day, d.key()), d.label))
        .collect();
    let mut rows = Vec::with_capacity(classes.len());
    for &(class_day, return_class) in &classes.entries {
        let pos = calendar
            .position(class_day)
            .ok_or(NewsError::ClassOffCalendar(class_day))?;
        if pos < k {
            continue;
        }
        let sentiment_day = calendar.dates[pos - k];
        let labels = keys
            .iter()
            .map(|key| {
                let aligned = match index.get(&(sentiment_day, *key)) {
                    Some(l) => AlignedLabel { label: *l, missing: false },
                    None => AlignedLabel { label: Direction::Flat, missing: true },
                };
                (*key, aligned)
            })
            .collect();
        rows.push(AlignedRow {
            class_day,
            sentiment_day,
            return_class,
            labels,
        });
    }
    Ok(AlignedDataset { lag: k, keys, rows })
}

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M",
];

/// Parses a zone-less Eastern-time timestamp. A bare date is taken as
/// midnight; a trailing ` ET` is accepted.
pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let s = raw.trim();
    let s = s.strip_suffix("ET").map(str::trim_end).unwrap_or(s);
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .map(|d| d.and_time(NaiveTime::MIN))
        })
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%d %H:%M:%S").to_string()
}

#[derive(Deserialize)]
struct RawArticle {
    timestamp_et: String,
    source: String,
    title: String,
    text: String,
}

/// Reads `news.csv`. An empty timestamp falls back to a date embedded in the
/// title or body, taken as midday.
pub fn parse_news_csv<R: Read>(reader: R) -> Result<Vec<NewsArticle>, NewsError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (row, rec) in rdr.deserialize::<RawArticle>().enumerate() {
        let raw = rec?;
        let timestamp = if raw.timestamp_et.trim().is_empty() {
            extract_embedded_date(&raw.title)
                .or_else(|| extract_embedded_date(&raw.text))
                .map(|d| d.and_time(NaiveTime::from_hms_opt(12, 0, 0).unwrap()))
        } else {
            parse_timestamp(&raw.timestamp_et)
        }
        .ok_or_else(|| NewsError::InvalidTimestamp {
            row,
            value: raw.timestamp_et.clone(),
        })?;
        let source = raw.source.parse().map_err(|_| NewsError::UnknownSource {
            row,
            value: raw.source.clone(),
        })?;
        out.push(NewsArticle {
            timestamp,
            source,
            title: raw.title,
            text: raw.text,
        });
    }
    Ok(out)
}

pub fn write_news_csv<W: Write>(articles: &[NewsArticle], out: W) -> Result<(), NewsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp_et", "source", "title", "text"])?;
    for a in articles {
        w.write_record([
            format_timestamp(a.timestamp),
            a.source.to_string(),
            a.title.clone(),
            a.text.clone(),
        ])?;
    }
    w.flush().map_err(|e| NewsError::Csv(e.to_string()))
}

#[derive(Deserialize)]
struct RawSentiment {
    timestamp_et: String,
    source: String,
    model: String,
    label: String,
    score: Option<String>,
}

/// Reads `sentiment.csv` as emitted by the scorer.
pub fn parse_sentiment_csv<R: Read>(reader: R) -> Result<Vec<SentimentRecord>, NewsError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (row, rec) in rdr.deserialize::<RawSentiment>().enumerate() {
        let raw = rec?;
        let timestamp =
            parse_timestamp(&raw.timestamp_et).ok_or_else(|| NewsError::InvalidTimestamp {
                row,
                value: raw.timestamp_et.clone(),
            })?;
        let source = raw.source.parse().map_err(|_| NewsError::UnknownSource {
            row,
            value: raw.source.clone(),
        })?;
        let model = raw.model.parse().map_err(|_| NewsError::UnknownModel {
            row,
            value: raw.model.clone(),
        })?;
        let label = raw
            .label
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(Direction::from_value)
            .ok_or_else(|| NewsError::InvalidLabel {
                row,
                value: raw.label.clone(),
            })?;
        let score = match raw.score.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|v| (0.0..=1.0).contains(v))
                    .ok_or_else(|| NewsError::InvalidScore {
                        row,
                        value: s.to_string(),
                    })?,
            ),
        };
        out.push(SentimentRecord {
            timestamp,
            source,
            model,
            label,
            score,
        });
    }
    Ok(out)
}

pub const DAILY_SENTIMENT_COLUMNS: [&str; 8] = [
    "trading_day",
    "source",
    "model",
    "label",
    "n_down",
    "n_flat",
    "n_up",
    "first_label",
];

pub fn write_daily_sentiment_csv<W: Write>(
    daily: &[DailySentiment],
    out: W,
) -> Result<(), NewsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DAILY_SENTIMENT_COLUMNS)?;
    for d in daily {
        w.write_record([
            d.trading_day.to_string(),
            d.source.to_string(),
            d.model.to_string(),
            d.label.to_string(),
            d.vote_counts[0].to_string(),
            d.vote_counts[1].to_string(),
            d.vote_counts[2].to_string(),
            d.first_label.to_string(),
        ])?;
    }
    w.flush().map_err(|e| NewsError::Csv(e.to_string()))
}

pub fn parse_daily_sentiment_csv<R: Read>(reader: R) -> Result<Vec<DailySentiment>, NewsError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("").trim();
        let bad_label = |v: &str| NewsError::InvalidLabel {
            row,
            value: v.to_string(),
        };
        let label_of = |v: &str| {
            v.parse::<i64>()
                .ok()
                .and_then(Direction::from_value)
                .ok_or_else(|| bad_label(v))
        };
        let count = |v: &str| v.parse::<usize>().map_err(|_| NewsError::Csv(format!("row {row}: bad count {v:?}")));
        out.push(DailySentiment {
            trading_day: NaiveDate::parse_from_str(get(0), "%Y-%m-%d").map_err(|_| {
                NewsError::InvalidTimestamp {
                    row,
                    value: get(0).to_string(),
                }
            })?,
            source: get(1).parse().map_err(|_| NewsError::UnknownSource {
                row,
                value: get(1).to_string(),
            })?,
            model: get(2).parse().map_err(|_| NewsError::UnknownModel {
                row,
                value: get(2).to_string(),
            })?,
            label: label_of(get(3))?,
            vote_counts: [count(get(4))?, count(get(5))?, count(get(6))?],
            first_label: label_of(get(7))?,
        });
    }
    Ok(out)
}

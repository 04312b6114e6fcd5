//! Files exchanged between stages inside the output directory.
//!
//! | file | columns |
//! |------|---------|
//! | `prices.csv` | date,open,high,low,close,adj_close,volume |
//! | `daily_sentiment.csv` | trading_day,source,model,label,n_down,n_flat,n_up,first_label |
//! | `clean_news.csv` | timestamp_et,source,title,text |
//! | `inputs.csv` | key,value (run id, seed, input digests) |
//! | `returns.csv` | date,return,class |
//! | `signals.csv` | date,source,signal |
//! | `forecasts.csv` | date,model,spec,forecast,actual |
//! | `aligned.csv` | class_day,sentiment_day,return_class,stream,label,missing |
//! | `diagnostics.csv` | stage,source,date,message |
//! | `runs.csv` | strategy,model,news_source,components,row,column,hash,final_return,cash_only_return |
//! | `equity_curves.csv` | strategy,date,cash,shares,price,value,return |

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use sentrade_core::market::{parse_price_csv, ReturnSeries};
use sentrade_core::news::parse_daily_sentiment_csv;
use sentrade_core::strategy::PortfolioState;
use sentrade_core::{ClassSeries, DailySentiment, Direction, EquityCurve, PriceSeries, SignalSeries};

use crate::error::{data_error, Classify, Failure};

pub const PRICES: &str = "prices.csv";
pub const DAILY_SENTIMENT: &str = "daily_sentiment.csv";
pub const CLEAN_NEWS: &str = "clean_news.csv";
pub const INPUTS: &str = "inputs.csv";
pub const RETURNS: &str = "returns.csv";
pub const SIGNALS: &str = "signals.csv";
pub const FORECASTS: &str = "forecasts.csv";
pub const ALIGNED: &str = "aligned.csv";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const RUNS: &str = "runs.csv";
pub const EQUITY_CURVES: &str = "equity_curves.csv";
pub const EQUITY_DIR: &str = "equity";

/// Opens a stage input, pointing at the stage that produces it.
pub fn open(out: &Path, name: &str, producer: &str) -> Result<BufReader<File>, Failure> {
    let path = out.join(name);
    File::open(&path)
        .map(BufReader::new)
        .data(|| format!("cannot read {} (run `{producer}` first)", path.display()))
}

pub fn open_input(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .data(|| format!("cannot read {}", path.display()))
}

/// Buffered writer that reports the path when creation fails.
pub struct Output {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl Output {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self, Failure> {
        let path = path.into();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).data(|| format!("cannot create {}", dir.display()))?;
        }
        let file = File::create(&path).data(|| format!("cannot write {}", path.display()))?;
        Ok(Self {
            path,
            inner: BufWriter::new(file),
        })
    }

    pub fn writer(&mut self) -> &mut BufWriter<File> {
        &mut self.inner
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        let path = self.path.clone();
        self.inner.flush().data(|| format!("cannot write {}", path.display()))
    }

    /// Writes with a fallible serializer and flushes.
    pub fn write_with<E: Into<anyhow::Error>>(
        path: impl Into<PathBuf>,
        f: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>,
    ) -> Result<(), Failure> {
        let mut out = Output::create(path)?;
        let p = out.path.clone();
        f(out.writer()).data(|| format!("cannot write {}", p.display()))?;
        out.finish()
    }

    pub fn write_rows(path: impl Into<PathBuf>, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        Output::write_with(path, |w| -> csv::Result<()> {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(header)?;
            for r in rows {
                c.write_record(r)?;
            }
            c.flush()?;
            Ok(())
        })
    }
}

fn parse_date(raw: &str, file: &str, row: usize) -> Result<NaiveDate, Failure> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").data(|| format!("{file} row {row}: bad date {raw:?}"))
}

fn rows<T: for<'de> Deserialize<'de>>(out: &Path, name: &str, producer: &str) -> Result<Vec<T>, Failure> {
    let mut rdr = csv::Reader::from_reader(open(out, name, producer)?);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.data(|| format!("{name} row {}", i + 1)))
        .collect()
}

pub fn read_prices(out: &Path) -> Result<PriceSeries, Failure> {
    parse_price_csv(open(out, PRICES, "ingest")?).data(|| PRICES.into())
}

pub fn read_daily_sentiment(out: &Path) -> Result<Vec<DailySentiment>, Failure> {
    parse_daily_sentiment_csv(open(out, DAILY_SENTIMENT, "ingest")?).data(|| DAILY_SENTIMENT.into())
}

pub fn read_inputs(out: &Path) -> Result<Vec<(String, String)>, Failure> {
    #[derive(Deserialize)]
    struct Row {
        key: String,
        value: String,
    }
    Ok(rows::<Row>(out, INPUTS, "ingest")?.into_iter().map(|r| (r.key, r.value)).collect())
}

fn direction(v: i64, file: &str, row: usize) -> Result<Direction, Failure> {
    Direction::from_value(v).ok_or_else(|| data_error(format!("{file} row {row}: signal {v} not in {{-1,0,1}}")))
}

pub fn write_returns(path: &Path, returns: &ReturnSeries, classes: &ClassSeries) -> Result<(), Failure> {
    let rows: Vec<Vec<String>> = returns
        .entries
        .iter()
        .zip(&classes.entries)
        .map(|((d, r), (_, c))| vec![d.to_string(), r.to_string(), c.to_string()])
        .collect();
    Output::write_rows(path, &["date", "return", "class"], &rows)
}

pub fn read_returns(out: &Path) -> Result<(ReturnSeries, ClassSeries), Failure> {
    #[derive(Deserialize)]
    struct Row {
        date: String,
        #[serde(rename = "return")]
        ret: f64,
        class: i64,
    }
    let mut returns = Vec::new();
    let mut classes = Vec::new();
    for (i, r) in rows::<Row>(out, RETURNS, "label")?.into_iter().enumerate() {
        let date = parse_date(&r.date, RETURNS, i + 1)?;
        returns.push((date, r.ret));
        classes.push((date, direction(r.class, RETURNS, i + 1)?));
    }
    Ok((ReturnSeries { entries: returns }, ClassSeries { entries: classes }))
}

pub fn write_signals(path: &Path, series: &[SignalSeries]) -> Result<(), Failure> {
    let rows: Vec<Vec<String>> = series
        .iter()
        .flat_map(|s| {
            s.entries
                .iter()
                .map(|(d, v)| vec![d.to_string(), s.source.clone(), v.to_string()])
        })
        .collect();
    Output::write_rows(path, &["date", "source", "signal"], &rows)
}

/// Signal series keyed by source, each in file order.
pub fn read_signals(out: &Path) -> Result<BTreeMap<String, SignalSeries>, Failure> {
    #[derive(Deserialize)]
    struct Row {
        date: String,
        source: String,
        signal: i64,
    }
    let mut by_source: BTreeMap<String, Vec<(NaiveDate, Direction)>> = BTreeMap::new();
    for (i, r) in rows::<Row>(out, SIGNALS, "signals")?.into_iter().enumerate() {
        let date = parse_date(&r.date, SIGNALS, i + 1)?;
        let d = direction(r.signal, SIGNALS, i + 1)?;
        by_source.entry(r.source).or_default().push((date, d));
    }
    Ok(by_source
        .into_iter()
        .map(|(source, entries)| (source.clone(), SignalSeries::new(source, entries)))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub model: String,
    pub spec: String,
    pub forecast: f64,
    pub actual: f64,
}

pub const FORECAST_COLUMNS: [&str; 5] = ["date", "model", "spec", "forecast", "actual"];

pub fn write_forecasts(path: &Path, rows: &[ForecastRow]) -> Result<(), Failure> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.date.to_string(),
                r.model.clone(),
                r.spec.clone(),
                r.forecast.to_string(),
                r.actual.to_string(),
            ]
        })
        .collect();
    Output::write_rows(path, &FORECAST_COLUMNS, &rows)
}

pub fn read_forecasts(out: &Path) -> Result<Vec<ForecastRow>, Failure> {
    #[derive(Deserialize)]
    struct Row {
        date: String,
        model: String,
        spec: String,
        forecast: f64,
        actual: f64,
    }
    rows::<Row>(out, FORECASTS, "signals")?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(ForecastRow {
                date: parse_date(&r.date, FORECASTS, i + 1)?,
                model: r.model,
                spec: r.spec,
                forecast: r.forecast,
                actual: r.actual,
            })
        })
        .collect()
}

/// A note from a stage about something it worked around.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub stage: String,
    pub source: String,
    pub date: Option<NaiveDate>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(stage: &str, source: impl Into<String>, date: Option<NaiveDate>, message: impl Into<String>) -> Self {
        Self {
            stage: stage.to_string(),
            source: source.into(),
            date,
            message: message.into(),
        }
    }
}

/// Replaces this stage's rows in `diagnostics.csv`, keeping other stages'.
pub fn record_diagnostics(out: &Path, stage: &str, new: Vec<Diagnostic>) -> Result<(), Failure> {
    #[derive(Deserialize)]
    struct Row {
        stage: String,
        source: String,
        date: String,
        message: String,
    }
    let path = out.join(DIAGNOSTICS);
    let mut all = Vec::new();
    if path.exists() {
        for (i, r) in rows::<Row>(out, DIAGNOSTICS, stage)?.into_iter().enumerate() {
            if r.stage == stage {
                continue;
            }
            let date = match r.date.as_str() {
                "" => None,
                d => Some(parse_date(d, DIAGNOSTICS, i + 1)?),
            };
            all.push(Diagnostic {
                stage: r.stage,
                source: r.source,
                date,
                message: r.message,
            });
        }
    }
    all.extend(new);
    let order = |s: &str| STAGE_ORDER.iter().position(|x| *x == s).unwrap_or(STAGE_ORDER.len());
    all.sort_by(|a, b| (order(&a.stage), a).cmp(&(order(&b.stage), b)));
    let rows: Vec<Vec<String>> = all
        .into_iter()
        .map(|d| vec![d.stage, d.source, d.date.map(|d| d.to_string()).unwrap_or_default(), d.message])
        .collect();
    Output::write_rows(path, &["stage", "source", "date", "message"], &rows)
}

pub const STAGE_ORDER: [&str; 6] = ["ingest", "label", "signals", "backtest", "evaluate", "report"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub strategy: String,
    pub model: String,
    pub news_source: String,
    pub components: String,
    pub row: String,
    pub column: String,
    pub hash: String,
    pub final_return: f64,
    pub cash_only_return: f64,
}

pub const RUN_COLUMNS: [&str; 9] = [
    "strategy",
    "model",
    "news_source",
    "components",
    "row",
    "column",
    "hash",
    "final_return",
    "cash_only_return",
];

pub fn write_runs(path: &Path, runs: &[RunRow]) -> Result<(), Failure> {
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            vec![
                r.strategy.clone(),
                r.model.clone(),
                r.news_source.clone(),
                r.components.clone(),
                r.row.clone(),
                r.column.clone(),
                r.hash.clone(),
                r.final_return.to_string(),
                r.cash_only_return.to_string(),
            ]
        })
        .collect();
    Output::write_rows(path, &RUN_COLUMNS, &rows)
}

pub fn read_runs(out: &Path) -> Result<Vec<RunRow>, Failure> {
    #[derive(Deserialize)]
    struct Row {
        strategy: String,
        model: String,
        news_source: String,
        components: String,
        row: String,
        column: String,
        hash: String,
        final_return: f64,
        cash_only_return: f64,
    }
    Ok(rows::<Row>(out, RUNS, "backtest")?
        .into_iter()
        .map(|r| RunRow {
            strategy: r.strategy,
            model: r.model,
            news_source: r.news_source,
            components: r.components,
            row: r.row,
            column: r.column,
            hash: r.hash,
            final_return: r.final_return,
            cash_only_return: r.cash_only_return,
        })
        .collect())
}

/// Curves by strategy name. Trades are not stored, so `trade` is `None`
/// and `value_before` repeats `value`.
pub fn read_equity_curves(out: &Path, capital: f64) -> Result<BTreeMap<String, EquityCurve>, Failure> {
    #[derive(Deserialize)]
    struct Row {
        strategy: String,
        date: String,
        cash: f64,
        shares: f64,
        price: f64,
        value: f64,
        #[serde(rename = "return")]
        ret: f64,
    }
    let mut curves: BTreeMap<String, EquityCurve> = BTreeMap::new();
    for (i, r) in rows::<Row>(out, EQUITY_CURVES, "backtest")?.into_iter().enumerate() {
        let date = parse_date(&r.date, EQUITY_CURVES, i + 1)?;
        curves
            .entry(r.strategy)
            .or_insert_with(|| EquityCurve {
                initial_capital: capital,
                states: Vec::new(),
            })
            .states
            .push(PortfolioState {
                date,
                cash: r.cash,
                shares: r.shares,
                price: r.price,
                value: r.value,
                ret: r.ret,
                trade: None,
                value_before: r.value,
            });
    }
    Ok(curves)
}

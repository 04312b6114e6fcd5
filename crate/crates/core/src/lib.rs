//! Daily-bar backtesting engine that fuses news sentiment labels with
//! technical indicators and time-series forecasts.
//!
//! The pipeline is: parse prices ([`market`]), aggregate and align news
//! sentiment ([`news`]), compute indicator signals ([`indicators`]) and
//! walk-forward forecast signals ([`forecast`]), combine them and simulate an
//! all-in/all-out portfolio ([`strategy`]), then score and tabulate the
//! results ([`report`]).

pub mod forecast;
pub mod indicators;
pub mod market;
pub mod news;
pub mod report;
pub mod signal;
pub mod strategy;

pub use market::{ClassSeries, PriceBar, PriceSeries, ReturnSeries, Thresholds, DEFAULT_THRESHOLDS};
pub use news::{AlignedDataset, DailySentiment, NewsSource, SentimentKey, SentimentModel, SentimentRecord};
pub use signal::{Direction, SignalSeries};
pub use strategy::{EquityCurve, PortfolioState};

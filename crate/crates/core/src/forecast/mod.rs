//! Return forecasters (ARIMA by conditional sum of squares, ETS, and a
//! piecewise-linear-trend plus Fourier-seasonality regression) and the
//! walk-forward loop that turns their one-step forecasts into signals.

mod arima;
mod ets;
pub mod optim;
mod prophet;
mod spec;
mod walk_forward;

use chrono::NaiveDate;
use thiserror::Error;

pub use arima::{arima_auto, arima_css, arima_fit, arima_forecast, ArimaModel, ArimaOrder};
pub use ets::{ets_fit, ets_forecast, Component, ErrorType, EtsModel, EtsSpec, EtsStates, Smoothing};
pub use prophet::{
    prophet_lite_fit, prophet_lite_forecast, FourierBlock, FourierFit, ProphetConfig, ProphetLiteModel,
};
pub use spec::ModelSpec;
pub use walk_forward::{
    walk_forward_signals, FitDiagnostic, WalkForwardConfig, WalkForwardOutput,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("series of length {len} is shorter than the required {required}")]
    TooShort { len: usize, required: usize },
    #[error("history of length {len} is shorter than the required {required}")]
    InsufficientHistory { len: usize, required: usize },
    #[error("optimizer did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("multiplicative component requires strictly positive data")]
    NonPositiveData,
    #[error("only {available} returns before the test window, need {required}")]
    InsufficientTraining { available: usize, required: usize },
    #[error("test window contains no returns")]
    EmptyWindow,
    #[error("invalid model spec {0:?}")]
    InvalidSpec(String),
    #[error("forecast is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub date: NaiveDate,
    pub point_forecast: f64,
    pub model: String,
}

/// A forecasting method that can be fitted to a history of values.
pub trait Forecaster {
    fn name(&self) -> String;
    fn fit(&self, history: &[f64]) -> Result<Box<dyn FittedForecaster>, ForecastError>;
}

/// A fitted model. `history` is the full series up to (excluding) the
/// forecast point; it starts with the data the model was fitted on and may
/// extend past it when a fit is reused.
pub trait FittedForecaster {
    fn forecast_next(&self, history: &[f64]) -> Result<f64, ForecastError>;
}

/// Applies the first difference `d` times.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>, ForecastError> {
    if series.len() <= d {
        return Err(ForecastError::TooShort {
            len: series.len(),
            required: d + 1,
        });
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// First value of each differencing level `0..d`, enough to invert
/// [`difference`].
pub fn difference_heads(series: &[f64], d: usize) -> Result<Vec<f64>, ForecastError> {
    let mut heads = Vec::with_capacity(d);
    let mut cur = series.to_vec();
    for _ in 0..d {
        if cur.is_empty() {
            return Err(ForecastError::TooShort {
                len: series.len(),
                required: d + 1,
            });
        }
        heads.push(cur[0]);
        cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(heads)
}

/// Inverse of [`difference`] given the heads from [`difference_heads`].
pub fn undifference(diffed: &[f64], heads: &[f64]) -> Vec<f64> {
    let mut out = diffed.to_vec();
    for &head in heads.iter().rev() {
        let mut level = Vec::with_capacity(out.len() + 1);
        level.push(head);
        for v in &out {
            let last = *level.last().unwrap();
            level.push(last + v);
        }
        out = level;
    }
    out
}

use chrono::NaiveDate;

use super::{FittedForecaster, ForecastError, ForecastResult, Forecaster};
use crate::market::{ReturnSeries, Thresholds};
use crate::signal::{Direction, SignalSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkForwardConfig {
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub refit_every: usize,
    pub min_train: usize,
    pub thresholds: Thresholds,
}

/// A test day whose fit or forecast failed; its signal is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostic {
    pub date: NaiveDate,
    pub error: ForecastError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkForwardOutput {
    pub signals: SignalSeries,
    pub forecasts: Vec<ForecastResult>,
    pub diagnostics: Vec<FitDiagnostic>,
}

/// Expanding-window one-step-ahead evaluation. For each return dated in
/// `[from, to]`, the model sees only returns strictly before that date,
/// forecasts it, and the forecast is classified with `thresholds`.
pub fn walk_forward_signals(
    returns: &ReturnSeries,
    forecaster: &dyn Forecaster,
    cfg: &WalkForwardConfig,
) -> Result<WalkForwardOutput, ForecastError> {
    cfg.thresholds
        .validate()
        .map_err(|e| ForecastError::InvalidSpec(e.to_string()))?;
    let values = returns.values();
    let test: Vec<usize> = returns
        .entries
        .iter()
        .enumerate()
        .filter(|(_, (d, _))| *d >= cfg.from && *d <= cfg.to)
        .map(|(i, _)| i)
        .collect();
    let first = *test.first().ok_or(ForecastError::EmptyWindow)?;
    if first < cfg.min_train {
        return Err(ForecastError::InsufficientTraining {
            available: first,
            required: cfg.min_train,
        });
    }
    let name = forecaster.name();
    let refit_every = cfg.refit_every.max(1);
    let mut model: Option<Box<dyn FittedForecaster>> = None;
    let mut entries = Vec::with_capacity(test.len());
    let mut forecasts = Vec::with_capacity(test.len());
    let mut diagnostics = Vec::new();
    for (k, &i) in test.iter().enumerate() {
        let date = returns.entries[i].0;
        let history = &values[..i];
        if k % refit_every == 0 {
            model = match forecaster.fit(history) {
                Ok(m) => Some(m),
                Err(error) => {
                    diagnostics.push(FitDiagnostic { date, error });
                    None
                }
            };
        }
        let signal = match model.as_ref().map(|m| m.forecast_next(history)) {
            Some(Ok(f)) => {
                forecasts.push(ForecastResult {
                    date,
                    point_forecast: f,
                    model: name.clone(),
                });
                cfg.thresholds.classify(f)
            }
            Some(Err(error)) => {
                diagnostics.push(FitDiagnostic { date, error });
                Direction::Flat
            }
            None => Direction::Flat,
        };
        entries.push((date, signal));
    }
    Ok(WalkForwardOutput {
        signals: SignalSeries::new(name, entries),
        forecasts,
        diagnostics,
    })
}

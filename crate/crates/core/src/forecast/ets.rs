use std::collections::VecDeque;
use std::fmt;

use super::optim::{nelder_mead, NelderMeadConfig};
use super::{FittedForecaster, ForecastError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorType {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    None,
    Additive,
    Multiplicative,
}

impl Component {
    pub fn as_str(self) -> &'static str {
        match self {
            Component::None => "none",
            Component::Additive => "add",
            Component::Multiplicative => "mul",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EtsSpec {
    pub error: ErrorType,
    pub trend: Component,
    pub seasonal: Component,
    /// Seasonal period; ignored when `seasonal` is `None`.
    pub period: usize,
}

impl EtsSpec {
    pub const fn new(error: ErrorType, trend: Component, seasonal: Component, period: usize) -> Self {
        Self {
            error,
            trend,
            seasonal,
            period,
        }
    }

    /// Simple exponential smoothing, the default for returns.
    pub const fn simple() -> Self {
        Self::new(ErrorType::Additive, Component::None, Component::None, 0)
    }

    fn season_len(&self) -> usize {
        match self.seasonal {
            Component::None => 0,
            _ => self.period,
        }
    }

    fn needs_positive(&self) -> bool {
        self.error == ErrorType::Multiplicative
            || self.trend == Component::Multiplicative
            || self.seasonal == Component::Multiplicative
    }

    pub fn min_fit_len(&self) -> usize {
        10 + 2 * self.season_len()
    }

    fn init_window(&self) -> usize {
        match self.season_len() {
            0 => 10,
            m => 2 * m,
        }
    }
}

impl fmt::Display for EtsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = match self.error {
            ErrorType::Additive => "add",
            ErrorType::Multiplicative => "mul",
        };
        write!(f, "{},{},{}", e, self.trend.as_str(), self.seasonal.as_str())?;
        if self.seasonal != Component::None {
            write!(f, ",{}", self.period)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Level, trend and seasonal states. `seasonal[0]` is the factor for the
/// next observation.
#[derive(Debug, Clone, PartialEq)]
pub struct EtsStates {
    pub level: f64,
    pub trend: f64,
    pub seasonal: VecDeque<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtsModel {
    pub spec: EtsSpec,
    pub smoothing: Smoothing,
    /// States before the first observation.
    pub initial: EtsStates,
    /// States after the last fitted observation.
    pub states: EtsStates,
    pub fitted: Vec<f64>,
    /// `y - yhat` for additive error, `y / yhat` for multiplicative error.
    pub residuals: Vec<f64>,
    pub objective: f64,
}

struct Pass {
    states: EtsStates,
    fitted: Vec<f64>,
    residuals: Vec<f64>,
    objective: f64,
}

fn base(spec: &EtsSpec, s: &EtsStates, h: f64) -> f64 {
    match spec.trend {
        Component::None => s.level,
        Component::Additive => s.level + h * s.trend,
        Component::Multiplicative => s.level * s.trend.powf(h),
    }
}

fn run(spec: &EtsSpec, sm: &Smoothing, init: &EtsStates, y: &[f64], keep: bool) -> Pass {
    let mut s = init.clone();
    let mut fitted = Vec::with_capacity(if keep { y.len() } else { 0 });
    let mut residuals = Vec::with_capacity(if keep { y.len() } else { 0 });
    let mut objective = 0.0;
    for &obs in y {
        let b = base(spec, &s, 1.0);
        let season = s.seasonal.front().copied();
        let yhat = match (spec.seasonal, season) {
            (Component::Additive, Some(v)) => b + v,
            (Component::Multiplicative, Some(v)) => b * v,
            _ => b,
        };
        let resid = match spec.error {
            ErrorType::Additive => obs - yhat,
            ErrorType::Multiplicative => obs / yhat,
        };
        objective += match spec.error {
            ErrorType::Additive => resid * resid,
            ErrorType::Multiplicative => (resid - 1.0) * (resid - 1.0),
        };
        if keep {
            fitted.push(yhat);
            residuals.push(resid);
        }
        let deseasoned = match (spec.seasonal, season) {
            (Component::Additive, Some(v)) => obs - v,
            (Component::Multiplicative, Some(v)) => obs / v,
            _ => obs,
        };
        let level = sm.alpha * deseasoned + (1.0 - sm.alpha) * b;
        s.trend = match spec.trend {
            Component::None => s.trend,
            Component::Additive => sm.beta * (level - s.level) + (1.0 - sm.beta) * s.trend,
            Component::Multiplicative => sm.beta * (level / s.level) + (1.0 - sm.beta) * s.trend,
        };
        s.level = level;
        if let Some(v) = season {
            let updated = match spec.seasonal {
                Component::Additive => sm.gamma * (obs - b) + (1.0 - sm.gamma) * v,
                _ => sm.gamma * (obs / b) + (1.0 - sm.gamma) * v,
            };
            s.seasonal.pop_front();
            s.seasonal.push_back(updated);
        }
    }
    if !objective.is_finite() {
        objective = f64::INFINITY;
    }
    Pass {
        states: s,
        fitted,
        residuals,
        objective,
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Heuristic states from the first window: level from the window mean, trend
/// from the average first difference (or ratio), seasonal factors from the
/// detrended per-position means (or ratios). The level is shifted back to
/// the time before the first observation along the fitted trend.
fn initial_states(spec: &EtsSpec, y: &[f64]) -> EtsStates {
    let w = spec.init_window();
    let window = &y[..w];
    let m = spec.season_len();
    let center = (w as f64 - 1.0) / 2.0;
    let trend = match (spec.trend, m) {
        (Component::None, _) => 0.0,
        (Component::Additive, 0) => (window[w - 1] - window[0]) / (w as f64 - 1.0),
        (Component::Additive, m) => (mean(&window[m..]) - mean(&window[..m])) / m as f64,
        (Component::Multiplicative, 0) => (window[w - 1] / window[0]).powf(1.0 / (w as f64 - 1.0)),
        (Component::Multiplicative, m) => (mean(&window[m..]) / mean(&window[..m])).powf(1.0 / m as f64),
    };
    let center_level = match spec.trend {
        Component::Multiplicative => (window.iter().map(|v| v.ln()).sum::<f64>() / w as f64).exp(),
        _ => mean(window),
    };
    let line = |t: f64| match spec.trend {
        Component::None => center_level,
        Component::Additive => center_level + trend * (t - center),
        Component::Multiplicative => center_level * trend.powf(t - center),
    };
    let seasonal = (0..m)
        .map(|i| {
            let cycles = w / m;
            let total: f64 = (0..cycles)
                .map(|c| {
                    let t = i + c * m;
                    match spec.seasonal {
                        Component::Additive => window[t] - line(t as f64),
                        _ => window[t] / line(t as f64),
                    }
                })
                .sum();
            total / cycles as f64
        })
        .collect();
    EtsStates {
        level: line(-1.0),
        trend,
        seasonal,
    }
}

const GRID_STEPS: usize = 50;

fn grid_value(i: usize) -> f64 {
    0.01 + 0.02 * i as f64
}

/// Chooses smoothing parameters by a 0.01..0.99 grid (step 0.02) over each
/// active parameter, refined by Nelder–Mead inside [0, 1].
pub fn ets_fit(series: &[f64], spec: EtsSpec) -> Result<EtsModel, ForecastError> {
    let required = spec.min_fit_len();
    if series.len() < required {
        return Err(ForecastError::TooShort {
            len: series.len(),
            required,
        });
    }
    if spec.seasonal != Component::None && spec.period < 2 {
        return Err(ForecastError::InvalidSpec(format!("ets({spec})")));
    }
    if spec.needs_positive() && series.iter().any(|v| *v <= 0.0) {
        return Err(ForecastError::NonPositiveData);
    }
    let init = initial_states(&spec, series);
    let use_beta = spec.trend != Component::None;
    let use_gamma = spec.seasonal != Component::None;
    let unpack = |p: &[f64]| Smoothing {
        alpha: p[0],
        beta: if use_beta { p[1] } else { 0.0 },
        gamma: if use_gamma { p[p.len() - 1] } else { 0.0 },
    };
    let objective = |p: &[f64]| {
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return f64::INFINITY;
        }
        run(&spec, &unpack(p), &init, series, false).objective
    };

    let dims = 1 + use_beta as usize + use_gamma as usize;
    let mut best = (f64::INFINITY, vec![grid_value(0); dims]);
    let mut idx = vec![0usize; dims];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| grid_value(i)).collect();
        let v = objective(&p);
        if v < best.0 {
            best = (v, p);
        }
        let mut k = 0;
        while k < dims {
            idx[k] += 1;
            if idx[k] < GRID_STEPS {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == dims {
            break;
        }
    }
    let refined = nelder_mead(
        objective,
        &best.1,
        NelderMeadConfig {
            step: 0.01,
            max_iter: 500,
            ..Default::default()
        },
    );
    let params = if refined.value < best.0 { refined.x } else { best.1 };
    let smoothing = unpack(&params);
    let pass = run(&spec, &smoothing, &init, series, true);
    Ok(EtsModel {
        spec,
        smoothing,
        initial: init,
        states: pass.states,
        fitted: pass.fitted,
        residuals: pass.residuals,
        objective: pass.objective,
    })
}

/// Point forecast `h` steps past the last fitted observation.
pub fn ets_forecast(model: &EtsModel, h: usize) -> Result<f64, ForecastError> {
    forecast_from(&model.spec, &model.states, h.max(1))
}

fn forecast_from(spec: &EtsSpec, s: &EtsStates, h: usize) -> Result<f64, ForecastError> {
    let b = base(spec, s, h as f64);
    let y = match spec.seasonal {
        Component::None => b,
        Component::Additive => b + s.seasonal[(h - 1) % s.seasonal.len()],
        Component::Multiplicative => b * s.seasonal[(h - 1) % s.seasonal.len()],
    };
    if y.is_finite() {
        Ok(y)
    } else {
        Err(ForecastError::NonFinite)
    }
}

impl FittedForecaster for EtsModel {
    /// Re-filters `history` from the stored initial states with the fitted
    /// smoothing parameters.
    fn forecast_next(&self, history: &[f64]) -> Result<f64, ForecastError> {
        let pass = run(&self.spec, &self.smoothing, &self.initial, history, false);
        forecast_from(&self.spec, &pass.states, 1)
    }
}

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::{FittedForecaster, ForecastError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierBlock {
    /// Period in trading days.
    pub period: f64,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProphetConfig {
    pub n_changepoints: usize,
    pub fourier: Vec<FourierBlock>,
    /// Ridge penalty on the changepoint slope adjustments.
    pub lambda: f64,
    /// Fraction of the history over which changepoints are placed.
    pub changepoint_range: f64,
}

impl Default for ProphetConfig {
    fn default() -> Self {
        Self {
            n_changepoints: 25,
            fourier: vec![FourierBlock {
                period: 5.0,
                order: 3,
            }],
            lambda: 0.5,
            changepoint_range: 0.8,
        }
    }
}

impl ProphetConfig {
    pub fn min_fit_len(&self) -> usize {
        2 * (self.n_changepoints + self.fourier.iter().map(|b| 2 * b.order).sum::<usize>())
    }
}

impl fmt::Display for ProphetConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cp={},fourier=", self.n_changepoints)?;
        if self.fourier.is_empty() {
            f.write_str("none")?;
        }
        for (i, b) in self.fourier.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{}:{}", b.period, b.order)?;
        }
        write!(f, ",lambda={}", self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierFit {
    pub period: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Piecewise-linear trend plus Fourier seasonality, indexed by trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct ProphetLiteModel {
    pub k: f64,
    pub m: f64,
    pub changepoints: Vec<f64>,
    pub deltas: Vec<f64>,
    /// `-changepoint * delta`, keeping the trend continuous.
    pub gammas: Vec<f64>,
    pub fourier: Vec<FourierFit>,
    pub lambda: f64,
    pub rank_deficient: bool,
    pub n_train: usize,
}

impl ProphetLiteModel {
    pub fn trend(&self, t: f64) -> f64 {
        let mut slope = self.k;
        let mut offset = self.m;
        for ((s, d), g) in self.changepoints.iter().zip(&self.deltas).zip(&self.gammas) {
            if t >= *s {
                slope += d;
                offset += g;
            }
        }
        slope * t + offset
    }

    pub fn seasonality(&self, t: f64) -> f64 {
        self.fourier
            .iter()
            .map(|blk| {
                blk.a
                    .iter()
                    .zip(&blk.b)
                    .enumerate()
                    .map(|(i, (a, b))| {
                        let x = 2.0 * PI * (i + 1) as f64 * t / blk.period;
                        a * x.cos() + b * x.sin()
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn predict(&self, t: f64) -> f64 {
        self.trend(t) + self.seasonality(t)
    }
}

fn changepoint_positions(n: usize, cfg: &ProphetConfig) -> Vec<f64> {
    if cfg.n_changepoints == 0 {
        return Vec::new();
    }
    let hist = ((n as f64 * cfg.changepoint_range).floor() as usize).max(2);
    (1..=cfg.n_changepoints)
        .map(|j| (j as f64 * (hist - 1) as f64 / cfg.n_changepoints as f64).round())
        .collect()
}

/// Ridge-regularized least squares on `[1, t, (t - s_j)+ ..., cos, sin ...]`
/// with only the changepoint columns penalized. Time is the observation
/// index. Rank deficiency (e.g. aliased Fourier orders) is flagged and
/// resolved with the minimum-norm solution.
pub fn prophet_lite_fit(values: &[f64], cfg: &ProphetConfig) -> Result<ProphetLiteModel, ForecastError> {
    let n = values.len();
    let required = cfg.min_fit_len().max(2);
    if n < required {
        return Err(ForecastError::TooShort { len: n, required });
    }
    let changepoints = changepoint_positions(n, cfg);
    let n_cp = changepoints.len();
    let n_fourier: usize = cfg.fourier.iter().map(|b| 2 * b.order).sum();
    let cols = 2 + n_cp + n_fourier;
    // time is scaled to [0, 1] for conditioning; the penalty row is scaled to
    // keep the objective in per-index units
    let scale = (n - 1).max(1) as f64;
    let penalty = cfg.lambda.max(0.0).sqrt() / scale;

    let mut a = DMatrix::<f64>::zeros(n + n_cp, cols);
    let mut rhs = DVector::<f64>::zeros(n + n_cp);
    for (row, y) in values.iter().enumerate() {
        let t = row as f64;
        a[(row, 0)] = 1.0;
        a[(row, 1)] = t / scale;
        for (j, s) in changepoints.iter().enumerate() {
            a[(row, 2 + j)] = (t - s).max(0.0) / scale;
        }
        let mut c = 2 + n_cp;
        for blk in &cfg.fourier {
            for order in 1..=blk.order {
                let x = 2.0 * PI * order as f64 * t / blk.period;
                a[(row, c)] = x.cos();
                a[(row, c + 1)] = x.sin();
                c += 2;
            }
        }
        rhs[row] = *y;
    }
    for j in 0..n_cp {
        a[(n + j, 2 + j)] = penalty;
    }

    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-9;
    let rank_deficient = svd.singular_values.iter().any(|s| *s <= tol);
    let beta = svd
        .solve(&rhs, tol)
        .map_err(|e| ForecastError::InvalidSpec(e.to_string()))?;
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(ForecastError::NonFinite);
    }

    let deltas: Vec<f64> = (0..n_cp).map(|j| beta[2 + j] / scale).collect();
    let gammas = changepoints.iter().zip(&deltas).map(|(s, d)| -s * d).collect();
    let mut c = 2 + n_cp;
    let fourier = cfg
        .fourier
        .iter()
        .map(|blk| {
            let mut fit = FourierFit {
                period: blk.period,
                a: Vec::with_capacity(blk.order),
                b: Vec::with_capacity(blk.order),
            };
            for _ in 0..blk.order {
                fit.a.push(beta[c]);
                fit.b.push(beta[c + 1]);
                c += 2;
            }
            fit
        })
        .collect();
    Ok(ProphetLiteModel {
        k: beta[1] / scale,
        m: beta[0],
        changepoints,
        deltas,
        gammas,
        fourier,
        lambda: cfg.lambda,
        rank_deficient,
        n_train: n,
    })
}

/// Evaluates trend plus seasonality at trading-day index `t`. Past the last
/// changepoint the trend continues at the final segment slope.
pub fn prophet_lite_forecast(model: &ProphetLiteModel, t: f64) -> f64 {
    model.predict(t)
}

impl FittedForecaster for ProphetLiteModel {
    fn forecast_next(&self, history: &[f64]) -> Result<f64, ForecastError> {
        let v = self.predict(history.len() as f64);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ForecastError::NonFinite)
        }
    }
}

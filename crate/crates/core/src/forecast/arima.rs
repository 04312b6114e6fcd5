use std::fmt;

use nalgebra::DMatrix;

use super::optim::{nelder_mead, NelderMeadConfig};
use super::{difference, FittedForecaster, ForecastError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }

    pub fn min_fit_len(&self) -> usize {
        50 + self.p + self.q + self.d
    }
}

impl Default for ArimaOrder {
    fn default() -> Self {
        Self::new(1, 0, 0)
    }
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Mean of the differenced series; the ARMA part runs on the centered
    /// series.
    pub intercept: f64,
    pub sigma2: f64,
    pub css: f64,
    pub n_eff: usize,
    pub fit_len: usize,
    /// AR polynomial roots lie outside the unit circle. Flagged, not enforced.
    pub ar_stationary: bool,
    pub iterations: usize,
}

impl ArimaModel {
    pub fn aic(&self) -> f64 {
        let k = (self.order.p + self.order.q + 1) as f64;
        self.n_eff as f64 * self.sigma2.max(f64::MIN_POSITIVE).ln() + 2.0 * k
    }
}

/// One-step residuals of the ARMA recursion on a centered series, with
/// residuals before index `p` fixed at zero. Returns `(css, residuals)` where
/// the sum runs over indices `p..`.
pub fn arima_css(z: &[f64], phi: &[f64], theta: &[f64]) -> (f64, Vec<f64>) {
    let p = phi.len();
    let mut e = vec![0.0; z.len()];
    let mut css = 0.0;
    for t in p..z.len() {
        let ar: f64 = phi.iter().enumerate().map(|(i, f)| f * z[t - 1 - i]).sum();
        let ma: f64 = theta
            .iter()
            .enumerate()
            .filter(|(j, _)| t > *j)
            .map(|(j, th)| th * e[t - 1 - j])
            .sum();
        e[t] = z[t] - ar - ma;
        css += e[t] * e[t];
    }
    (css, e)
}

fn ar_stationary(phi: &[f64]) -> bool {
    let p = phi.len();
    if p == 0 {
        return true;
    }
    // companion eigenvalues are the inverse roots of 1 - phi_1 z - ... - phi_p z^p
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, f) in phi.iter().enumerate() {
        companion[(0, j)] = *f;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .all(|l| l.norm() < 1.0)
}

/// Fits ARIMA(p,d,q) by minimizing the conditional sum of squares with a
/// Nelder–Mead search started from all-zero coefficients.
pub fn arima_fit(series: &[f64], order: ArimaOrder) -> Result<ArimaModel, ForecastError> {
    let required = order.min_fit_len();
    if series.len() < required {
        return Err(ForecastError::TooShort {
            len: series.len(),
            required,
        });
    }
    let w = difference(series, order.d)?;
    let intercept = w.iter().sum::<f64>() / w.len() as f64;
    let z: Vec<f64> = w.iter().map(|v| v - intercept).collect();
    let (p, q) = (order.p, order.q);
    let objective = |params: &[f64]| arima_css(&z, &params[..p], &params[p..]).0;
    let cfg = NelderMeadConfig::default();
    let min = nelder_mead(objective, &vec![0.0; p + q], cfg);
    if !min.converged {
        return Err(ForecastError::NonConvergence {
            iterations: min.iterations,
        });
    }
    let phi = min.x[..p].to_vec();
    let theta = min.x[p..].to_vec();
    let (css, _) = arima_css(&z, &phi, &theta);
    let n_eff = z.len() - p;
    Ok(ArimaModel {
        order,
        ar_stationary: ar_stationary(&phi),
        phi,
        theta,
        intercept,
        sigma2: css / n_eff as f64,
        css,
        n_eff,
        fit_len: series.len(),
        iterations: min.iterations,
    })
}

/// Lowest-AIC fit over p, q in {0,1,2} and d in {0,1}. Orders that fail to
/// fit are skipped.
pub fn arima_auto(series: &[f64]) -> Result<ArimaModel, ForecastError> {
    let mut best: Option<ArimaModel> = None;
    let mut last_err = None;
    for d in 0..=1 {
        for p in 0..=2 {
            for q in 0..=2 {
                match arima_fit(series, ArimaOrder::new(p, d, q)) {
                    Ok(m) => {
                        if best.as_ref().is_none_or(|b| m.aic() < b.aic()) {
                            best = Some(m);
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(ForecastError::NonFinite))
}

/// One-step-ahead conditional expectation given `history`, with future
/// shocks set to zero, mapped back through `d` integrations.
pub fn arima_forecast(model: &ArimaModel, history: &[f64]) -> Result<f64, ForecastError> {
    let ArimaOrder { p, d, q } = model.order;
    let required = p.max(q) + d;
    if history.len() < required.max(d + 1) {
        return Err(ForecastError::InsufficientHistory {
            len: history.len(),
            required: required.max(d + 1),
        });
    }
    let w = difference(history, d)?;
    let z: Vec<f64> = w.iter().map(|v| v - model.intercept).collect();
    let (_, e) = arima_css(&z, &model.phi, &model.theta);
    let n = z.len();
    let ar: f64 = model
        .phi
        .iter()
        .enumerate()
        .map(|(i, f)| f * z[n - 1 - i])
        .sum();
    let ma: f64 = model
        .theta
        .iter()
        .enumerate()
        .filter(|(j, _)| n > *j)
        .map(|(j, th)| th * e[n - 1 - j])
        .sum();
    let mut level = model.intercept + ar + ma;
    // each integration adds back the last value of the level below
    let mut cur = history.to_vec();
    for _ in 0..d {
        level += *cur.last().unwrap();
        cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
    }
    if level.is_finite() {
        Ok(level)
    } else {
        Err(ForecastError::NonFinite)
    }
}

impl FittedForecaster for ArimaModel {
    fn forecast_next(&self, history: &[f64]) -> Result<f64, ForecastError> {
        arima_forecast(self, history)
    }
}

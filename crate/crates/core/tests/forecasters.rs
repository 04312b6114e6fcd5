use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sentrade_core::forecast::{
    arima_css, arima_fit, arima_forecast, ets_fit, ets_forecast, prophet_lite_fit,
    prophet_lite_forecast, walk_forward_signals, ArimaOrder, Component, ErrorType, EtsSpec,
    FourierBlock, ModelSpec, ProphetConfig, WalkForwardConfig,
};
use sentrade_core::{ReturnSeries, DEFAULT_THRESHOLDS};

fn noise(seed: u64, n: usize, sd: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

#[test]
fn ar1_recovery() {
    let e = noise(2024, 2100, 1.0);
    let mut y = vec![0.0; 2100];
    for t in 1..2100 {
        y[t] = 0.6 * y[t - 1] + e[t];
    }
    // drop burn-in
    let m = arima_fit(&y[100..], ArimaOrder::new(1, 0, 0)).unwrap();
    assert!((0.55..=0.65).contains(&m.phi[0]), "phi = {}", m.phi[0]);
    assert!(m.ar_stationary);
}

#[test]
fn ma1_recovery() {
    let e = noise(7, 2001, 1.0);
    let y: Vec<f64> = (1..2001).map(|t| e[t] + 0.4 * e[t - 1]).collect();
    let m = arima_fit(&y, ArimaOrder::new(0, 0, 1)).unwrap();
    assert!((0.33..=0.47).contains(&m.theta[0]), "theta = {}", m.theta[0]);
}

#[test]
fn white_noise_degenerate_model() {
    let y: Vec<f64> = noise(3, 500, 0.01).iter().map(|v| v + 0.001).collect();
    let m = arima_fit(&y, ArimaOrder::new(0, 0, 0)).unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    assert!((m.intercept - mean).abs() < 1e-6);
    assert!((m.sigma2 - var).abs() < 1e-6);
    assert!((arima_forecast(&m, &y).unwrap() - m.intercept).abs() < 1e-15);
}

#[test]
fn css_never_worse_than_zero_start() {
    for seed in 0..10 {
        let y = noise(seed, 120, 0.02);
        let order = ArimaOrder::new(2, 0, 1);
        let m = arima_fit(&y, order).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let z: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let (zero_css, _) = arima_css(&z, &[0.0, 0.0], &[0.0]);
        assert!(m.css <= zero_css);
    }
}

#[test]
fn arima_111_matches_hand_recursion() {
    let e = noise(99, 80, 1.0);
    let mut x = vec![50.0];
    for t in 1..80 {
        x.push(x[t - 1] + 0.1 + 0.5 * e[t] + 0.3 * e[t - 1]);
    }
    let m = arima_fit(&x, ArimaOrder::new(1, 1, 1)).unwrap();
    let (phi, theta) = (m.phi[0], m.theta[0]);

    // independent recursion on the differenced, centered series
    let w: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
    let mu = w.iter().sum::<f64>() / w.len() as f64;
    assert!((mu - m.intercept).abs() < 1e-12);
    let mut prev_z = w[0] - mu;
    let mut prev_e = 0.0;
    for wt in &w[1..] {
        let z = wt - mu;
        prev_e = z - phi * prev_z - theta * prev_e;
        prev_z = z;
    }
    let expected = x[79] + mu + phi * prev_z + theta * prev_e;
    let got = arima_forecast(&m, &x).unwrap();
    assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
}

#[test]
fn ets_linear_is_exact_after_warmup() {
    let y: Vec<f64> = (0..60).map(|t| 2.0 + 3.0 * t as f64).collect();
    let spec = EtsSpec::new(ErrorType::Additive, Component::Additive, Component::None, 0);
    let m = ets_fit(&y, spec).unwrap();
    for t in 10..60 {
        assert!((m.fitted[t] - y[t]).abs() < 1e-6, "t={t}: {} vs {}", m.fitted[t], y[t]);
    }
    assert!((ets_forecast(&m, 1).unwrap() - (2.0 + 3.0 * 60.0)).abs() < 1e-6);
}

#[test]
fn ets_multiplicative_season_after_two_cycles() {
    let season = [0.8, 1.1, 1.3, 0.8];
    let y: Vec<f64> = (0..48).map(|t| 10.0 * season[t % 4]).collect();
    let spec = EtsSpec::new(ErrorType::Multiplicative, Component::None, Component::Multiplicative, 4);
    let m = ets_fit(&y, spec).unwrap();
    for t in 8..48 {
        assert!((m.fitted[t] - y[t]).abs() < 1e-4, "t={t}: {} vs {}", m.fitted[t], y[t]);
    }
    assert!((ets_forecast(&m, 1).unwrap() - 10.0 * season[0]).abs() < 1e-4);
}

#[test]
fn ets_residuals_follow_error_type() {
    let y: Vec<f64> = (0..40).map(|t| 5.0 + (t as f64 * 0.9).sin()).collect();
    let add = ets_fit(&y, EtsSpec::simple()).unwrap();
    for t in 0..40 {
        assert!((add.residuals[t] - (y[t] - add.fitted[t])).abs() < 1e-12);
    }
    let spec = EtsSpec::new(ErrorType::Multiplicative, Component::Additive, Component::None, 0);
    let mul = ets_fit(&y, spec).unwrap();
    for t in 0..40 {
        assert!((mul.residuals[t] - y[t] / mul.fitted[t]).abs() < 1e-12);
    }
}

#[test]
fn ets_mul_mul_mul_matches_hand_recursion() {
    let y: Vec<f64> = (0..40)
        .map(|t| (20.0 + 0.1 * t as f64) * [0.9, 1.0, 1.1, 1.0][t % 4] * (1.0 + 0.01 * (t as f64).sin()))
        .collect();
    let spec = EtsSpec::new(
        ErrorType::Multiplicative,
        Component::Multiplicative,
        Component::Multiplicative,
        4,
    );
    let m = ets_fit(&y, spec).unwrap();
    let (a, b, g) = (m.smoothing.alpha, m.smoothing.beta, m.smoothing.gamma);
    let mut l = m.initial.level;
    let mut r = m.initial.trend;
    let mut s: Vec<f64> = m.initial.seasonal.iter().copied().collect();
    for (t, yt) in y.iter().enumerate() {
        let st = s[0];
        let yhat = l * r * st;
        assert!((yhat - m.fitted[t]).abs() < 1e-9);
        let l_new = a * yt / st + (1.0 - a) * l * r;
        let r_new = b * l_new / l + (1.0 - b) * r;
        let s_new = g * yt / (l * r) + (1.0 - g) * st;
        l = l_new;
        r = r_new;
        s.remove(0);
        s.push(s_new);
    }
    let expected = l * r * s[0];
    assert!((ets_forecast(&m, 1).unwrap() - expected).abs() < 1e-9);
}

fn r_squared(y: &[f64], yhat: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[test]
fn prophet_recovers_line() {
    let y: Vec<f64> = (0..500).map(|t| 1.0 + 2.0 * t as f64).collect();
    let cfg = ProphetConfig {
        fourier: vec![],
        ..Default::default()
    };
    let m = prophet_lite_fit(&y, &cfg).unwrap();
    assert!((m.k - 2.0).abs() < 1e-6);
    assert!((m.m - 1.0).abs() < 1e-6);
    assert!(m.deltas.iter().all(|d| d.abs() < 1e-6), "{:?}", m.deltas);
}

#[test]
fn prophet_recovers_sinusoid() {
    let w = 2.0 * std::f64::consts::PI / 5.0;
    let y: Vec<f64> = (0..300).map(|t| 1.5 * (w * t as f64).cos() - 0.7 * (w * t as f64).sin()).collect();
    let cfg = ProphetConfig {
        fourier: vec![FourierBlock { period: 5.0, order: 2 }],
        ..Default::default()
    };
    let m = prophet_lite_fit(&y, &cfg).unwrap();
    assert!((m.fourier[0].a[0] - 1.5).abs() < 1e-6);
    assert!((m.fourier[0].b[0] + 0.7).abs() < 1e-6);
    assert!(m.k.abs() < 1e-6);
    let fitted: Vec<f64> = (0..300).map(|t| m.predict(t as f64)).collect();
    assert!(r_squared(&y, &fitted) >= 0.99);
    let truth = 1.5 * (w * 300.0).cos() - 0.7 * (w * 300.0).sin();
    assert!((prophet_lite_forecast(&m, 300.0) - truth).abs() <= 0.02 * truth.abs());
}

#[test]
fn prophet_trend_plus_sinusoid() {
    let w = 2.0 * std::f64::consts::PI / 5.0;
    let noise = noise(5, 400, 0.05);
    let y: Vec<f64> = (0..400)
        .map(|t| {
            let t = t as f64;
            let trend = if t < 200.0 { 0.02 * t } else { 4.0 - 0.01 * (t - 200.0) };
            trend + (w * t).sin() + noise[t as usize]
        })
        .collect();
    let cfg = ProphetConfig {
        fourier: vec![FourierBlock { period: 5.0, order: 2 }],
        ..Default::default()
    };
    let m = prophet_lite_fit(&y, &cfg).unwrap();
    let fitted: Vec<f64> = (0..400).map(|t| m.predict(t as f64)).collect();
    let r2 = r_squared(&y, &fitted);
    assert!(r2 >= 0.99, "R^2 = {r2}");
}

fn dated(values: &[f64]) -> ReturnSeries {
    let start = NaiveDate::from_ymd_opt(2023, 1, 2).unwrap();
    ReturnSeries {
        entries: values
            .iter()
            .enumerate()
            .map(|(i, v)| (start + Days::new(i as u64), *v))
            .collect(),
    }
}

#[test]
fn walk_forward_has_no_lookahead() {
    let base = noise(250, 250, 0.012);
    let specs: Vec<ModelSpec> = ["arima(1,0,0)", "ets(add,none,none)", "prophet(cp=10,fourier=5:2)"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let r = dated(&base);
    let cfg = WalkForwardConfig {
        from: r.entries[200].0,
        to: r.entries[249].0,
        refit_every: 1,
        min_train: 200,
        thresholds: DEFAULT_THRESHOLDS,
    };
    for spec in &specs {
        let reference = walk_forward_signals(&r, spec, &cfg).unwrap();
        assert_eq!(reference.signals.len(), 50);
        for mutate_at in [200, 215, 230, 249] {
            let mut values = base.clone();
            for v in &mut values[mutate_at..] {
                *v = -*v * 3.0 + 0.05;
            }
            let mutated = walk_forward_signals(&dated(&values), spec, &cfg).unwrap();
            let cutoff = r.entries[mutate_at].0;
            for (a, b) in reference.forecasts.iter().zip(&mutated.forecasts) {
                if a.date <= cutoff {
                    // the forecast dated t only sees returns before t
                    assert_eq!(a.point_forecast.to_bits(), b.point_forecast.to_bits(), "{spec} {}", a.date);
                }
            }
            for ((da, sa), (db, sb)) in reference.signals.entries.iter().zip(&mutated.signals.entries) {
                assert_eq!(da, db);
                if *da <= cutoff {
                    assert_eq!(sa, sb);
                }
            }
        }
    }
}

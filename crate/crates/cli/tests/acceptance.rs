//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs without the libtest harness so the lines are always shown.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sentrade_core::forecast::{
    arima_fit, ets_fit, prophet_lite_fit, walk_forward_signals, ArimaOrder, Component, ErrorType, EtsSpec,
    FourierBlock, ModelSpec, ProphetConfig, WalkForwardConfig,
};
use sentrade_core::indicators::{macd, parabolic_sar, vw_macd, Line, MacdConfig, SarConfig, Trend};
use sentrade_core::market::{compute_returns, parse_price_csv};
use sentrade_core::strategy::{buy_and_hold, combine_signals, simulate, strategy_return, SimConfig};
use sentrade_core::{Direction, PriceBar, PriceSeries, ReturnSeries, DEFAULT_THRESHOLDS};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn gspc() -> PriceSeries {
    let path = root().join("fixtures/gspc_2024-05-10_2024-08-07.csv");
    parse_price_csv(std::fs::File::open(path).unwrap()).unwrap()
}

fn d(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

fn flat_series(prices: &[f64], volumes: Option<&[u64]>) -> PriceSeries {
    let start = d("2024-01-01");
    PriceSeries::new(
        prices
            .iter()
            .enumerate()
            .map(|(i, &p)| PriceBar {
                date: start + Days::new(i as u64),
                open: p,
                high: p,
                low: p,
                close: p,
                adj_close: p,
                volume: volumes.map_or(0, |v| v[i]),
            })
            .collect(),
    )
    .unwrap()
}

fn benchmark() -> Check {
    const TARGET: f64 = -0.696;
    const TOL_PP: f64 = 0.05;
    let p = gspc();
    let w = p.window(d("2024-05-10"), d("2024-08-07"));
    let r = 100.0 * strategy_return(&buy_and_hold(&w, 10_000.0).unwrap());
    let aug5 = 100.0 * strategy_return(&buy_and_hold(&p.window(d("2024-05-10"), d("2024-08-05")), 10_000.0).unwrap());
    let detail = format!(
        "{r:.3}% over {} bars vs {TARGET}% +/- {TOL_PP}pp (window ending 2024-08-05 gives {aug5:.3}%)",
        w.len()
    );
    ensure((r - TARGET).abs() <= TOL_PP, || detail.clone())?;
    Ok(detail)
}

/// Independent all-in/all-out replay.
fn naive_replay(prices: &[f64], signals: &[i8], c0: f64) -> Vec<(f64, f64, f64)> {
    let (mut c, mut s) = (c0, 0.0f64);
    let mut out = Vec::new();
    for (p, i) in prices.iter().zip(signals) {
        if *i > 0 && c > 0.0 {
            s = c / p;
            c = 0.0;
        } else if *i < 0 && s > 0.0 {
            c = s * p;
            s = 0.0;
        }
        out.push((c, s, c + s * p));
    }
    out
}

fn simulator() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut trades = 0;
    for case in 0..1000 {
        let mut p = rng.gen_range(20.0..500.0);
        let prices: Vec<f64> = (0..63)
            .map(|_| {
                p *= 1.0 + rng.gen_range(-0.04..0.04);
                p
            })
            .collect();
        let sig: Vec<i8> = (0..63).map(|_| rng.gen_range(-1..=1)).collect();
        let ps = flat_series(&prices, None);
        let dated: Vec<_> = ps
            .dates()
            .into_iter()
            .zip(sig.iter().map(|v| Direction::from_value(*v as i64).unwrap()))
            .collect();
        let curve = simulate(&ps, &dated, SimConfig::default()).map_err(|e| e.to_string())?;
        for (t, (st, (c, s, v))) in curve.states.iter().zip(naive_replay(&prices, &sig, 10_000.0)).enumerate() {
            ensure(
                (st.cash - c).abs() <= 1e-9 && (st.shares - s).abs() <= 1e-9 && (st.value - v).abs() <= 1e-9,
                || format!("case {case} day {t}: state differs from replay"),
            )?;
            if st.trade.is_some() {
                trades += 1;
                ensure((st.value - st.value_before).abs() <= 1e-9, || {
                    format!("case {case} day {t}: value not conserved")
                })?;
            }
        }
    }
    Ok(format!("1000 x 63-day fixtures, {trades} trades, exact to 1e-9"))
}

fn fusion() -> Check {
    let mut n_cases = 0;
    for n in 1..=4u32 {
        for code in 0..3usize.pow(n) {
            let values: Vec<i64> = (0..n).map(|i| (code / 3usize.pow(i) % 3) as i64 - 1).collect();
            let comps: BTreeMap<String, i64> = values.iter().enumerate().map(|(i, v)| (format!("c{i}"), *v)).collect();
            let got = combine_signals(NaiveDate::MIN, &comps).map_err(|e| e.to_string())?.signal.value() as i64;
            ensure(got == values.iter().sum::<i64>().signum() && (-1..=1).contains(&got), || {
                format!("{values:?} gave {got}")
            })?;
            n_cases += 1;
        }
    }
    Ok(format!("{n_cases} combinations of 1-4 components"))
}

fn oracle_ema(xs: &[Option<f64>], n: usize) -> Vec<Option<f64>> {
    let a = 2.0 / (n as f64 + 1.0);
    let mut out = vec![None; xs.len()];
    let mut seed = Vec::new();
    let mut prev: Option<f64> = None;
    for (i, x) in xs.iter().enumerate() {
        let Some(x) = x else { continue };
        let v = match prev {
            Some(p) => a * x + (1.0 - a) * p,
            None => {
                seed.push(*x);
                if seed.len() < n {
                    continue;
                }
                seed.iter().sum::<f64>() / n as f64
            }
        };
        prev = Some(v);
        out[i] = Some(v);
    }
    out
}

fn zip_with(a: &[Option<f64>], b: &[Option<f64>], f: fn(f64, f64) -> f64) -> Vec<Option<f64>> {
    a.iter().zip(b).map(|(x, y)| Some(f((*x)?, (*y)?))).collect()
}

fn oracle_lines(fast: &[Option<f64>], slow: &[Option<f64>], signal: usize) -> [Vec<Option<f64>>; 3] {
    let line = zip_with(fast, slow, |a, b| a - b);
    let sig = oracle_ema(&line, signal);
    let hist = zip_with(&line, &sig, |a, b| a - b);
    [line, sig, hist]
}

fn max_gap(actual: &Line, expected: &[Option<f64>]) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for (i, e) in expected.iter().enumerate() {
        match (actual.get(i), e) {
            (Some(a), Some(e)) => worst = worst.max((a - e).abs()),
            (None, None) => {}
            _ => return Err(format!("definedness differs at index {i}")),
        }
    }
    Ok(worst)
}

fn sar_golden() -> Result<usize, String> {
    let text = std::fs::read_to_string(root().join("crates/core/tests/data/sar_golden.csv")).unwrap();
    let mut bars = Vec::new();
    let mut expected = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| f[i].parse::<f64>().unwrap();
        bars.push(PriceBar {
            date: d(f[0]),
            open: num(3),
            high: num(1),
            low: num(2),
            close: num(3),
            adj_close: num(3),
            volume: 1,
        });
        let trend = if f[7] == "up" { Trend::Up } else { Trend::Down };
        expected.push((num(4), num(5), num(6), trend, f[8].parse::<i8>().unwrap()));
    }
    let out = parabolic_sar(&bars, SarConfig::default()).map_err(|e| e.to_string())?;
    for (i, (s, e)) in out.states.iter().zip(&expected).enumerate() {
        // decimal golden values; 1e-12 absorbs binary rounding only
        let ok = (s.sar - e.0).abs() < 1e-12
            && (s.ep - e.1).abs() < 1e-12
            && (s.alpha - e.2).abs() < 1e-12
            && s.trend == e.3
            && out.signals[i].value() == e.4;
        ensure(ok, || format!("SAR golden row {i} differs"))?;
    }
    Ok(out.flips())
}

fn indicators() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let cfg = MacdConfig::default();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(40..250);
        let mut p = 100.0;
        let close: Vec<f64> = (0..n)
            .map(|_| {
                p *= 1.0 + rng.gen_range(-0.03..0.03);
                p
            })
            .collect();
        let volume: Vec<f64> = (0..n).map(|_| rng.gen_range(1e5..5e6_f64).round()).collect();
        let c: Vec<Option<f64>> = close.iter().copied().map(Some).collect();
        let out = macd(&close, cfg).map_err(|e| e.to_string())?;
        let expected = oracle_lines(&oracle_ema(&c, 12), &oracle_ema(&c, 26), 9);
        for (line, e) in [&out.macd_line, &out.signal_line, &out.histogram].into_iter().zip(&expected) {
            worst = worst.max(max_gap(line, e)?);
        }

        let cv: Vec<Option<f64>> = close.iter().zip(&volume).map(|(c, v)| Some(c * v)).collect();
        let v: Vec<Option<f64>> = volume.iter().copied().map(Some).collect();
        let vwema = |n| zip_with(&oracle_ema(&cv, n), &oracle_ema(&v, n), |a, b| a / b);
        let vw = vw_macd(&close, &volume, cfg).map_err(|e| e.to_string())?;
        let expected = oracle_lines(&vwema(12), &vwema(26), 9);
        let m = &vw.macd;
        for (line, e) in [&m.macd_line, &m.signal_line, &m.histogram].into_iter().zip(&expected) {
            worst = worst.max(max_gap(line, e)?);
        }

        let constant = vec![1_000_000.0; n];
        let same = vw_macd(&close, &constant, cfg).map_err(|e| e.to_string())?;
        for (a, b) in [
            (&same.macd.macd_line, &out.macd_line),
            (&same.macd.signal_line, &out.signal_line),
            (&same.macd.histogram, &out.histogram),
        ] {
            let b: Vec<Option<f64>> = (0..n).map(|i| b.get(i)).collect();
            ensure(max_gap(a, &b)? <= 1e-9, || "VW MACD differs from MACD under constant volume".into())?;
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e} > 1e-9"))?;
    let flips = sar_golden()?;
    Ok(format!("100 fixtures, max deviation {worst:.1e}; SAR golden matched ({flips} reversal)"))
}

fn r_squared(y: &[f64], yhat: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

fn forecasters() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut y = vec![0.0; 2100];
    for t in 1..2100 {
        y[t] = 0.6 * y[t - 1] + normal.sample(&mut rng);
    }
    let phi = arima_fit(&y[100..], ArimaOrder::new(1, 0, 0)).map_err(|e| e.to_string())?.phi[0];
    ensure((0.55..=0.65).contains(&phi), || format!("AR(1) phi = {phi}"))?;

    let line: Vec<f64> = (0..60).map(|t| 2.0 + 3.0 * t as f64).collect();
    let spec = EtsSpec::new(ErrorType::Additive, Component::Additive, Component::None, 0);
    let m = ets_fit(&line, spec).map_err(|e| e.to_string())?;
    let ets_err = (10..60).map(|t| (m.fitted[t] - line[t]).abs()).fold(0.0, f64::max);
    ensure(ets_err < 1e-6, || format!("ETS one-step error {ets_err:e} after warmup"))?;

    let w = 2.0 * std::f64::consts::PI / 5.0;
    let noise = Normal::new(0.0, 0.05).unwrap();
    let series: Vec<f64> = (0..400)
        .map(|t| {
            let t = t as f64;
            let trend = if t < 200.0 { 0.02 * t } else { 4.0 - 0.01 * (t - 200.0) };
            trend + (w * t).sin() + noise.sample(&mut rng)
        })
        .collect();
    let cfg = ProphetConfig {
        fourier: vec![FourierBlock { period: 5.0, order: 2 }],
        ..Default::default()
    };
    let p = prophet_lite_fit(&series, &cfg).map_err(|e| e.to_string())?;
    let fitted: Vec<f64> = (0..400).map(|t| p.predict(t as f64)).collect();
    let r2 = r_squared(&series, &fitted);
    ensure(r2 >= 0.99, || format!("Prophet-lite R^2 = {r2}"))?;
    Ok(format!("phi = {phi:.4}, ETS max error {ets_err:.1e}, Prophet-lite R^2 = {r2:.4}"))
}

fn dated(values: &[f64]) -> ReturnSeries {
    let start = d("2023-01-02");
    ReturnSeries {
        entries: values.iter().enumerate().map(|(i, v)| (start + Days::new(i as u64), *v)).collect(),
    }
}

fn no_lookahead() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(250);
    let normal = Normal::new(0.0, 0.012).unwrap();
    let base: Vec<f64> = (0..250).map(|_| normal.sample(&mut rng)).collect();
    let r = dated(&base);
    let cfg = WalkForwardConfig {
        from: r.entries[200].0,
        to: r.entries[249].0,
        refit_every: 1,
        min_train: 200,
        thresholds: DEFAULT_THRESHOLDS,
    };
    let mut compared = 0;
    for spec in ["arima(1,0,0)", "ets(add,none,none)", "prophet(cp=10,fourier=5:2)"] {
        let model: ModelSpec = spec.parse().unwrap();
        let reference = walk_forward_signals(&r, &model, &cfg).map_err(|e| e.to_string())?;
        for k in (200..250).step_by(7).chain([249]) {
            let mut values = base.clone();
            values[k] = -values[k] * 5.0 + 0.03;
            for v in &mut values[k + 1..] {
                *v = rng.gen_range(-0.05..0.05);
            }
            let mutated = walk_forward_signals(&dated(&values), &model, &cfg).map_err(|e| e.to_string())?;
            let cutoff = r.entries[k].0;
            for (a, b) in reference.forecasts.iter().zip(&mutated.forecasts) {
                if a.date <= cutoff {
                    ensure(a.point_forecast.to_bits() == b.point_forecast.to_bits(), || {
                        format!("{spec}: forecast for {} changed when {cutoff} onward was mutated", a.date)
                    })?;
                    compared += 1;
                }
            }
            for ((da, sa), (_, sb)) in reference.signals.entries.iter().zip(&mutated.signals.entries) {
                if *da <= cutoff {
                    ensure(sa == sb, || format!("{spec}: signal for {da} changed"))?;
                }
            }
        }
    }
    Ok(format!("250-day fixture, 3 models, {compared} earlier forecasts bit-identical"))
}

fn plausibility() -> Check {
    // The fixture starts at the window start, so the first 20 returns serve
    // as training history and the remaining 40 are scored.
    const MIN_TRAIN: usize = 20;
    let returns = compute_returns(&gspc()).unwrap();
    let scored = &returns.entries[MIN_TRAIN..];
    let neutral = scored.iter().filter(|(_, r)| r.abs() <= 0.01).count();
    let base = neutral as f64 / scored.len() as f64;
    let cfg = WalkForwardConfig {
        from: scored[0].0,
        to: scored[scored.len() - 1].0,
        refit_every: 1,
        min_train: MIN_TRAIN,
        thresholds: DEFAULT_THRESHOLDS,
    };
    let mut parts = vec![format!("base rate {:.2}% ({neutral}/{})", 100.0 * base, scored.len())];
    let mut ok = true;
    for spec in ["ets(add,none,none)", "prophet(cp=3,fourier=5:2)"] {
        let model: ModelSpec = spec.parse().unwrap();
        let out = walk_forward_signals(&returns, &model, &cfg).map_err(|e| e.to_string())?;
        let hits = out
            .signals
            .entries
            .iter()
            .zip(scored)
            .filter(|((_, s), (_, r))| *s == DEFAULT_THRESHOLDS.classify(*r))
            .count();
        let acc = hits as f64 / scored.len() as f64;
        ok &= acc >= base - 0.05;
        parts.push(format!("{spec} {:.2}%", 100.0 * acc));
    }
    let detail = format!("{} (need >= base - 5pp)", parts.join(", "));
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn end_to_end() -> Check {
    let golden = tree(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/smoke"));
    for run in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_sentrade"))
            .args(["all", "--config", "fixtures/smoke.toml", "--out"])
            .arg(dir.path())
            .current_dir(root())
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).trim().to_string())?;
        let got = tree(dir.path());
        ensure(got.keys().eq(golden.keys()), || format!("run {run}: file set differs from golden"))?;
        if let Some(name) = golden.keys().find(|k| got[*k] != golden[*k]) {
            return Err(format!("run {run}: {name} differs from golden"));
        }
    }
    Ok(format!("2 runs, {} files byte-identical to golden", golden.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, Option<Duration>, fn() -> Check); 8] = [
        ("benchmark reproduction", Some(Duration::from_secs(1)), benchmark),
        ("simulator oracle equivalence", Some(Duration::from_secs(10)), simulator),
        ("signal fusion", Some(Duration::from_secs(1)), fusion),
        ("indicator correctness", None, indicators),
        ("forecaster recovery", Some(Duration::from_secs(30)), forecasters),
        ("no-lookahead", None, no_lookahead),
        ("forecaster-accuracy plausibility", None, plausibility),
        ("end-to-end determinism", None, end_to_end),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let over = limit.filter(|l| took > *l);
        let (status, detail) = match (&result, over) {
            (Ok(d), None) => ("PASS", d.clone()),
            (Ok(d), Some(l)) => ("FAIL", format!("{d}; took {took:.2?}, limit {l:?}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        failed += usize::from(status == "FAIL");
        let limit = limit.map_or(String::new(), |l| format!(" (limit {l:?})"));
        println!("{status} {name}: {detail} [{took:.2?}{limit}]");
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

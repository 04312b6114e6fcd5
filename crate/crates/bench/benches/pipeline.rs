use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sentrade_bench::{price_series, signals};
use sentrade_core::forecast::{walk_forward_signals, ModelSpec, WalkForwardConfig};
use sentrade_core::indicators::{macd, parabolic_sar, vw_macd, MacdConfig, SarConfig};
use sentrade_core::market::compute_returns;
use sentrade_core::strategy::{simulate, SimConfig};
use sentrade_core::DEFAULT_THRESHOLDS;

fn indicators(c: &mut Criterion) {
    let mut g = c.benchmark_group("indicators");
    for n in [252, 1260] {
        let p = price_series(n, 1);
        let close = p.closes();
        let volume = p.volumes();
        g.bench_with_input(BenchmarkId::new("macd", n), &close, |b, close| {
            b.iter(|| macd(black_box(close), MacdConfig::default()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("vw_macd", n), &(close.clone(), volume), |b, (c, v)| {
            b.iter(|| vw_macd(black_box(c), black_box(v), MacdConfig::default()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("sar", n), &p, |b, p| {
            b.iter(|| parabolic_sar(black_box(p.bars()), SarConfig::default()).unwrap())
        });
    }
    g.finish();
}

fn simulator(c: &mut Criterion) {
    let p = price_series(1260, 2);
    let s = signals(&p, 3);
    c.bench_function("simulate/1260", |b| {
        b.iter(|| simulate(black_box(&p), black_box(&s), SimConfig::default()).unwrap())
    });
}

fn walk_forward(c: &mut Criterion) {
    let mut g = c.benchmark_group("walk_forward");
    g.sample_size(10);
    let p = price_series(320, 4);
    let returns = compute_returns(&p).unwrap();
    let dates = returns.dates();
    let cfg = WalkForwardConfig {
        from: dates[250],
        to: dates[dates.len() - 1],
        refit_every: 1,
        min_train: 200,
        thresholds: DEFAULT_THRESHOLDS,
    };
    for spec in ["arima(1,0,0)", "ets(add,none,none)", "prophet(cp=10,fourier=5:2)"] {
        let model: ModelSpec = spec.parse().unwrap();
        g.bench_function(spec, |b| b.iter(|| walk_forward_signals(black_box(&returns), &model, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, indicators, simulator, walk_forward);
criterion_main!(benches);

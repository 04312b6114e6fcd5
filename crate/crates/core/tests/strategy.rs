use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentrade_core::market::{compute_returns, label_returns, parse_price_csv};
use sentrade_core::report::{
    build_returns_table, classification_accuracy, format_sig, read_plot_csv, write_plot_csv,
    PlotSeries, StrategyRun,
};
use sentrade_core::strategy::{
    buy_and_hold, combine_signals, simulate, strategy_return, SimConfig, Trade,
};
use sentrade_core::{ClassSeries, Direction, PriceBar, PriceSeries, SignalSeries, DEFAULT_THRESHOLDS};

fn gspc() -> PriceSeries {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/gspc_2024-05-10_2024-08-07.csv");
    parse_price_csv(std::fs::File::open(path).unwrap()).unwrap()
}

fn series(prices: &[f64]) -> PriceSeries {
    let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
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
                volume: 0,
            })
            .collect(),
    )
    .unwrap()
}

/// Second implementation of the all-in/all-out rules, written against the
/// update equations without sharing any code.
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

#[test]
fn simulator_matches_naive_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    for _ in 0..1000 {
        let mut p = rng.gen_range(20.0..500.0);
        let prices: Vec<f64> = (0..63)
            .map(|_| {
                p *= 1.0 + rng.gen_range(-0.04..0.04);
                p
            })
            .collect();
        let sig: Vec<i8> = (0..63).map(|_| rng.gen_range(-1..=1)).collect();
        let ps = series(&prices);
        let dated: Vec<_> = ps
            .dates()
            .into_iter()
            .zip(sig.iter().map(|v| Direction::from_value(*v as i64).unwrap()))
            .collect();
        let curve = simulate(&ps, &dated, SimConfig::default()).unwrap();
        let oracle = naive_replay(&prices, &sig, 10_000.0);
        for (st, (c, s, v)) in curve.states.iter().zip(&oracle) {
            assert!((st.cash - c).abs() <= 1e-9);
            assert!((st.shares - s).abs() <= 1e-9);
            assert!((st.value - v).abs() <= 1e-9);
            if st.trade.is_some() {
                assert!((st.value - st.value_before).abs() <= 1e-9, "value not conserved");
                assert_eq!(st.cash.min(st.shares), 0.0);
            }
            assert!(st.cash >= 0.0 && st.shares >= 0.0 && st.value > 0.0);
        }
        assert!((strategy_return(&curve) - (oracle[62].2 - 10_000.0) / 10_000.0).abs() < 1e-12);
    }
}

#[test]
fn fusion_matches_sign_of_sum_exhaustively() {
    let mut checked = 0;
    for n in 1..=4u32 {
        for code in 0..3usize.pow(n) {
            let values: Vec<i64> = (0..n).map(|i| (code / 3usize.pow(i) % 3) as i64 - 1).collect();
            let components: BTreeMap<String, i64> =
                values.iter().enumerate().map(|(i, v)| (format!("c{i}"), *v)).collect();
            let got = combine_signals(NaiveDate::MIN, &components).unwrap().signal.value() as i64;
            assert_eq!(got, values.iter().sum::<i64>().signum());
            checked += 1;
        }
    }
    assert_eq!(checked, 3 + 9 + 27 + 81);
}

#[test]
fn buy_and_hold_is_price_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.gen_range(2..100);
        let prices: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..1000.0)).collect();
        let curve = buy_and_hold(&series(&prices), 10_000.0).unwrap();
        let expected = prices[n - 1] / prices[0] - 1.0;
        assert!((strategy_return(&curve) - expected).abs() < 1e-12);
        assert_eq!(curve.states.iter().filter(|s| s.trade == Some(Trade::Buy)).count(), 1);
    }
}

#[test]
fn gspc_fixture_counts_and_first_return() {
    let p = gspc();
    assert_eq!(p.len(), 61);
    let r = compute_returns(&p).unwrap();
    assert_eq!(r.len(), 60);
    assert!((r.entries[0].1 - (5221.42 / 5222.68 - 1.0)).abs() < 1e-12);
    assert!((r.entries[0].1 - -0.00024125544739483917).abs() < 1e-12);
    // independent recount
    let values: Vec<f64> = p.adj_closes();
    let (mut up, mut flat, mut down) = (0, 0, 0);
    for w in values.windows(2) {
        let x = (w[1] - w[0]) / w[0];
        if x > 0.01 {
            up += 1
        } else if x < -0.01 {
            down += 1
        } else {
            flat += 1
        }
    }
    let classes = label_returns(&r, &DEFAULT_THRESHOLDS).unwrap();
    assert_eq!(classes.counts(), [down, flat, up]);
    assert_eq!(classes.counts(), [5, 48, 7]);
}

#[test]
fn gspc_benchmark_to_aug_5() {
    let p = gspc();
    let window = p.window(
        NaiveDate::from_ymd_opt(2024, 5, 10).unwrap(),
        NaiveDate::from_ymd_opt(2024, 8, 5).unwrap(),
    );
    let r = strategy_return(&buy_and_hold(&window, 10_000.0).unwrap());
    assert!((r * 100.0 + 0.696).abs() < 0.0005, "{r}");
}

fn classes_from(values: &[i8]) -> ClassSeries {
    let start = NaiveDate::from_ymd_opt(2024, 2, 1).unwrap();
    ClassSeries {
        entries: values
            .iter()
            .enumerate()
            .map(|(i, v)| (start + Days::new(i as u64), Direction::from_value(*v as i64).unwrap()))
            .collect(),
    }
}

#[test]
fn accuracy_57_day_fixture() {
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    let truth: Vec<i8> = (0..57).map(|_| rng.gen_range(-1..=1)).collect();
    let mut idx: Vec<usize> = (0..57).collect();
    idx.shuffle(&mut rng);
    let hit: Vec<bool> = (0..57).map(|i| idx[..17].contains(&i)).collect();
    let signals: Vec<i8> = truth
        .iter()
        .zip(&hit)
        .map(|(t, h)| if *h { *t } else { (*t + 2) % 3 - 1 })
        .collect();
    let matches = truth.iter().zip(&signals).filter(|(a, b)| a == b).count();
    assert_eq!(matches, 17);
    let t = classes_from(&truth);
    let s = classes_from(&signals);
    let acc = classification_accuracy(&SignalSeries::new("arima", s.entries.clone()), &t).unwrap();
    assert_eq!((acc.matches, acc.n), (17, 57));
    assert!((acc.fraction() * 100.0 - 29.82).abs() < 0.005);

    // order of the signal entries does not matter
    let mut shuffled = s.entries.clone();
    shuffled.shuffle(&mut rng);
    let acc2 = classification_accuracy(&SignalSeries::new("arima", shuffled), &t).unwrap();
    assert_eq!(acc, acc2);
}

#[test]
fn returns_table_cells_equal_curve_returns() {
    let ps = series(&[100.0, 103.0, 99.0, 104.0, 101.0]);
    let bench = buy_and_hold(&ps, 10_000.0).unwrap();
    let runs: Vec<StrategyRun> = [[1, 0, -1, 1, 0], [0, 1, 1, -1, 0], [1, -1, 1, -1, 1]]
        .iter()
        .enumerate()
        .map(|(i, sig)| {
            let dated: Vec<_> = ps
                .dates()
                .into_iter()
                .zip(sig.iter().map(|v| Direction::from_value(*v).unwrap()))
                .collect();
            StrategyRun {
                row: format!("s{i}"),
                column: "DowJones".into(),
                curve: simulate(&ps, &dated, SimConfig::default()).unwrap(),
            }
        })
        .collect();
    let table = build_returns_table(&runs, &bench).unwrap();
    for run in &runs {
        assert_eq!(table.get(&run.row, "DowJones"), Some(strategy_return(&run.curve)));
    }
    assert!((table.benchmark - 0.01).abs() < 1e-12);
    let mut a = Vec::new();
    let mut b = Vec::new();
    table.write_csv(&mut a).unwrap();
    let mut reversed = runs.clone();
    reversed.reverse();
    build_returns_table(&reversed, &bench).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn plot_csv_roundtrip() {
    let ps = series(&[100.0, 101.3, 99.87, 104.2]);
    let curve = buy_and_hold(&ps, 10_000.0).unwrap();
    let s = vec![
        PlotSeries {
            name: "Buy and hold".into(),
            points: curve.states.iter().map(|st| (st.date, st.value)).collect(),
        },
        PlotSeries {
            name: "returns".into(),
            points: curve.states.iter().map(|st| (st.date, st.ret)).collect(),
        },
    ];
    let mut buf = Vec::new();
    write_plot_csv(&s, &mut buf).unwrap();
    let back = read_plot_csv(buf.as_slice()).unwrap();
    // values are written at 12 significant digits; re-parsed values equal
    // the in-memory values rounded the same way
    assert_eq!(back.len(), 2);
    for (a, b) in s.iter().zip(&back) {
        assert_eq!(a.name, b.name);
        for ((da, va), (db, vb)) in a.points.iter().zip(&b.points) {
            assert_eq!(da, db);
            assert_eq!(format_sig(*va).parse::<f64>().unwrap(), *vb);
            assert!((va - vb).abs() <= 1e-11 * va.abs().max(1e-300));
        }
    }
}

proptest! {
    #[test]
    fn fusion_is_permutation_invariant(values in prop::collection::vec(-1i64..=1, 0..8), seed in any::<u64>()) {
        let mut shuffled = values.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a: BTreeMap<String, i64> = values.iter().enumerate().map(|(i, v)| (format!("a{i}"), *v)).collect();
        let b: BTreeMap<String, i64> = shuffled.iter().enumerate().map(|(i, v)| (format!("b{i}"), *v)).collect();
        prop_assert_eq!(
            combine_signals(NaiveDate::MIN, &a).unwrap().signal,
            combine_signals(NaiveDate::MIN, &b).unwrap().signal
        );
    }

    #[test]
    fn identical_signals_give_identical_curves(steps in prop::collection::vec((-0.05f64..0.05, -1i64..=1), 2..60)) {
        let mut p = 50.0;
        let prices: Vec<f64> = steps.iter().map(|(r, _)| { p *= 1.0 + r; p }).collect();
        let ps = series(&prices);
        let dated: Vec<_> = ps.dates().into_iter().zip(steps.iter().map(|(_, s)| Direction::from_value(*s).unwrap())).collect();
        let a = simulate(&ps, &dated, SimConfig::default()).unwrap();
        let b = simulate(&ps, &dated, SimConfig::default()).unwrap();
        prop_assert_eq!(&a, &b);
        for s in &a.states {
            prop_assert!(s.ret.is_finite());
            if s.trade.is_some() {
                prop_assert!((s.value - s.value_before).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn returns_integrate_back_to_prices(steps in prop::collection::vec(-0.2f64..0.2, 1..100)) {
        let mut p = 100.0;
        let mut prices = vec![p];
        for r in &steps { p *= 1.0 + r; prices.push(p); }
        let ps = series(&prices);
        let r = compute_returns(&ps).unwrap();
        let mut level = prices[0];
        for ((_, ret), expected) in r.entries.iter().zip(&prices[1..]) {
            level *= 1.0 + ret;
            prop_assert!((level - expected).abs() <= 1e-9 * expected.abs());
        }
        let classes = label_returns(&r, &DEFAULT_THRESHOLDS).unwrap();
        prop_assert_eq!(classes.counts().iter().sum::<usize>(), r.len());
    }
}

//! Synthetic inputs shared by the benchmarks.

use chrono::{Days, NaiveDate};
use sentrade_core::{Direction, PriceBar, PriceSeries};

/// Small deterministic generator so the benches need no RNG dependency.
struct Lcg(u64);

impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// `n` consecutive-day bars of a bounded random walk starting at 100.
pub fn price_series(n: usize, seed: u64) -> PriceSeries {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let mut rng = Lcg(seed);
    let mut close = 100.0;
    let bars = (0..n)
        .map(|i| {
            let open = close;
            close *= 1.0 + (rng.next_f64() - 0.5) * 0.04;
            let high = open.max(close) * (1.0 + rng.next_f64() * 0.005);
            let low = open.min(close) * (1.0 - rng.next_f64() * 0.005);
            PriceBar {
                date: start + Days::new(i as u64),
                open,
                high,
                low,
                close,
                adj_close: close,
                volume: 1_000_000 + (rng.next_f64() * 4e6) as u64,
            }
        })
        .collect();
    PriceSeries::new(bars).expect("generated bars are consistent")
}

/// One signal per bar, uniform over {-1, 0, 1}.
pub fn signals(prices: &PriceSeries, seed: u64) -> Vec<(NaiveDate, Direction)> {
    let mut rng = Lcg(seed);
    prices
        .bars()
        .iter()
        .map(|b| (b.date, Direction::ALL[(rng.next_f64() * 3.0) as usize % 3]))
        .collect()
}

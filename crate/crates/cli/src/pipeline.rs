//! The pipeline stages. Each stage after `ingest` reads only files in the
//! output directory written by earlier stages.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sentrade_core::forecast::{walk_forward_signals, ForecastError, WalkForwardConfig};
use sentrade_core::indicators::{
    dual_macd, macd, parabolic_sar, signalize, vw_macd, IndicatorError, IndicatorInput, SignalRule,
};
use sentrade_core::market::{compute_returns, label_returns, parse_price_csv, write_price_csv};
use sentrade_core::news::{
    aggregate_daily, clean_article, is_non_news, join_sentiment_returns, parse_news_csv, parse_sentiment_csv,
    write_daily_sentiment_csv, write_news_csv, TradingCalendar,
};
use sentrade_core::report::{
    build_returns_table, classification_accuracy, render_svg, write_accuracy_csv, write_equity_curves_csv,
    write_plot_csv, AccuracyRow, PlotSeries, StrategyRun, BENCHMARK_ROW,
};
use sentrade_core::strategy::{
    buy_and_hold, cash_only_return, combine_series, schedule, simulate, strategy_return, write_equity_csv, SimConfig,
};
use sentrade_core::{Direction, PriceSeries, SentimentKey, SignalSeries};
use sha2::{Digest, Sha256};

use crate::artifacts::*;
use crate::config::{Component, RunConfig};
use crate::error::{config_error, data_error, Classify, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Label,
    Signals,
    Backtest,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Label,
        Stage::Signals,
        Stage::Backtest,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn run(self, cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
        match self {
            Stage::Ingest => ingest(cfg, out),
            Stage::Label => label(cfg, out),
            Stage::Signals => signals(cfg, out),
            Stage::Backtest => backtest(cfg, out),
            Stage::Evaluate => evaluate(cfg, out),
            Stage::Report => report(cfg, out),
        }
    }
}

pub fn run_all(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    Stage::ALL.iter().try_for_each(|s| s.run(cfg, out))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn file_digest(path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path).data(|| format!("cannot read {}", path.display()))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn price_path(cfg: &RunConfig) -> Result<&PathBuf, Failure> {
    cfg.prices
        .as_ref()
        .ok_or_else(|| config_error("no price file given (use --prices or `prices` in the config)"))
}

/// Input digests in a fixed order; absent optional inputs are `none`.
fn input_digests(cfg: &RunConfig) -> Result<Vec<(&'static str, String)>, Failure> {
    let mut out = vec![("prices_sha256", file_digest(price_path(cfg)?)?)];
    for (key, path) in [("sentiment_sha256", &cfg.sentiment), ("news_sha256", &cfg.news)] {
        let digest = match path {
            Some(p) => file_digest(p)?,
            None => "none".to_string(),
        };
        out.push((key, digest));
    }
    Ok(out)
}

/// 12 hex digits identifying the config and input contents.
pub fn run_id(cfg: &RunConfig) -> Result<String, Failure> {
    let mut h = Sha256::new();
    h.update(cfg.fingerprint().as_bytes());
    for (k, v) in input_digests(cfg)? {
        h.update(format!("\n{k}={v}").as_bytes());
    }
    Ok(hex(&h.finalize())[..12].to_string())
}

fn window(cfg: &RunConfig, prices: &PriceSeries) -> Result<PriceSeries, Failure> {
    let (Some(first), Some(last)) = (prices.bars().first(), prices.bars().last()) else {
        return Err(data_error("price file has no rows"));
    };
    if cfg.from < first.date || cfg.to > last.date {
        return Err(config_error(format!(
            "window {}..{} is not within the price data {}..{}",
            cfg.from, cfg.to, first.date, last.date
        )));
    }
    let w = prices.window(cfg.from, cfg.to);
    if w.len() < 2 {
        return Err(config_error(format!(
            "window {}..{} holds {} trading day(s), need at least 2",
            cfg.from,
            cfg.to,
            w.len()
        )));
    }
    Ok(w)
}

fn ingest(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    const STAGE: &str = "ingest";
    let path = price_path(cfg)?;
    let prices = parse_price_csv(open_input(path)?).data(|| path.display().to_string())?;
    window(cfg, &prices)?;
    Output::write_with(out.join(PRICES), |w| write_price_csv(&prices, w))?;

    let calendar = TradingCalendar::new(prices.dates()).data(|| path.display().to_string())?;
    let mut diags = Vec::new();
    // Articles dropped as non-news also lose their sentiment records.
    let mut non_news = BTreeSet::new();
    if let Some(p) = &cfg.news {
        let articles = parse_news_csv(open_input(p)?).data(|| p.display().to_string())?;
        let total = articles.len();
        let mut kept = Vec::with_capacity(total);
        for mut a in articles {
            if is_non_news(&a, &cfg.drop_keywords) {
                non_news.insert((a.timestamp, a.source));
                continue;
            }
            a.text = clean_article(&a.text, &cfg.boilerplate);
            kept.push(a);
        }
        if kept.len() < total {
            diags.push(Diagnostic::new(
                STAGE,
                "news",
                None,
                format!("{} non-news article(s) dropped", total - kept.len()),
            ));
        }
        Output::write_with(out.join(CLEAN_NEWS), |w| write_news_csv(&kept, w))?;
    }

    let daily = match &cfg.sentiment {
        Some(p) => {
            let mut records = parse_sentiment_csv(open_input(p)?).data(|| p.display().to_string())?;
            let before = records.len();
            records.retain(|r| !non_news.contains(&(r.timestamp, r.source)));
            if records.len() < before {
                diags.push(Diagnostic::new(
                    STAGE,
                    "sentiment",
                    None,
                    format!("{} record(s) of non-news articles dropped", before - records.len()),
                ));
            }
            let agg = aggregate_daily(&records, &calendar);
            if agg.dropped > 0 {
                diags.push(Diagnostic::new(
                    STAGE,
                    "sentiment",
                    None,
                    format!("{} record(s) fall after the last trading day and were dropped", agg.dropped),
                ));
            }
            agg.daily
        }
        None => {
            diags.push(Diagnostic::new(STAGE, "sentiment", None, "no sentiment file; strategies use components only"));
            Vec::new()
        }
    };
    Output::write_with(out.join(DAILY_SENTIMENT), |w| write_daily_sentiment_csv(&daily, w))?;

    let mut inputs = vec![
        vec!["run_id".to_string(), run_id(cfg)?],
        vec!["seed".to_string(), cfg.seed.to_string()],
    ];
    inputs.extend(input_digests(cfg)?.into_iter().map(|(k, v)| vec![k.to_string(), v]));
    Output::write_rows(out.join(INPUTS), &["key", "value"], &inputs)?;
    record_diagnostics(out, STAGE, diags)
}

fn label(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let prices = read_prices(out)?;
    let returns = compute_returns(&prices).data(|| PRICES.into())?;
    let classes = label_returns(&returns, &cfg.thresholds).config(|| "thresholds".into())?;
    write_returns(&out.join(RETURNS), &returns, &classes)?;
    record_diagnostics(out, "label", Vec::new())
}

/// One entry per window date; days the series does not cover are 0.
fn on_window(series: &SignalSeries, dates: &[NaiveDate]) -> SignalSeries {
    SignalSeries::new(
        series.source.clone(),
        dates
            .iter()
            .map(|d| (*d, series.get(*d).unwrap_or(Direction::Flat)))
            .collect(),
    )
}

fn indicator_or_zero(
    name: &str,
    result: Result<SignalSeries, IndicatorError>,
    dates: &[NaiveDate],
    diags: &mut Vec<Diagnostic>,
) -> SignalSeries {
    result.unwrap_or_else(|e| {
        diags.push(Diagnostic::new("signals", name, None, format!("{e}; signal set to 0")));
        SignalSeries::new(name, dates.iter().map(|d| (*d, Direction::Flat)).collect())
    })
}

fn is_numerical(e: &ForecastError) -> bool {
    matches!(
        e,
        ForecastError::NonConvergence { .. } | ForecastError::NonFinite | ForecastError::NonPositiveData
    )
}

fn signals(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    const STAGE: &str = "signals";
    let prices = read_prices(out)?;
    let (returns, classes) = read_returns(out)?;
    let daily = read_daily_sentiment(out)?;
    let dates = window(cfg, &prices)?.dates();
    let all_dates = prices.dates();
    let close = prices.closes();
    let volume = prices.volumes();
    let mut diags = Vec::new();
    let mut series = Vec::new();

    let calendar = TradingCalendar::new(all_dates.iter().copied()).data(|| PRICES.into())?;
    let aligned = join_sentiment_returns(&daily, &classes, &calendar, cfg.lag).data(|| DAILY_SENTIMENT.into())?;
    for key in &aligned.keys {
        series.push(aligned.signal_series(*key));
    }
    let aligned_rows: Vec<Vec<String>> = aligned
        .rows
        .iter()
        .flat_map(|r| {
            r.labels.iter().map(move |(key, l)| {
                vec![
                    r.class_day.to_string(),
                    r.sentiment_day.to_string(),
                    r.return_class.to_string(),
                    key.to_string(),
                    l.label.to_string(),
                    u8::from(l.missing).to_string(),
                ]
            })
        })
        .collect();
    Output::write_rows(
        out.join(ALIGNED),
        &["class_day", "sentiment_day", "return_class", "stream", "label", "missing"],
        &aligned_rows,
    )?;

    let d = &all_dates;
    let macd_s = macd(&close, cfg.macd).and_then(|o| signalize(IndicatorInput::Macd(&o), cfg.macd_rule, d, "macd"));
    series.push(indicator_or_zero("macd", macd_s, d, &mut diags));
    let sar_s = parabolic_sar(prices.bars(), cfg.sar).and_then(|o| {
        signalize(IndicatorInput::Sar { output: &o, close: &close }, cfg.sar_rule, d, "sar")
    });
    series.push(indicator_or_zero("sar", sar_s, d, &mut diags));
    let vw_s = vw_macd(&close, &volume, cfg.vw_macd).and_then(|o| {
        signalize(IndicatorInput::VwMacd { output: &o, close: &close }, cfg.vw_macd_rule, d, "vw_macd")
    });
    series.push(indicator_or_zero("vw_macd", vw_s, d, &mut diags));
    let dual_s = dual_macd(&close, cfg.dual_short, cfg.dual_long)
        .and_then(|v| signalize(IndicatorInput::Discrete(&v), SignalRule::Passthrough, d, "dual_macd"));
    series.push(indicator_or_zero("dual_macd", dual_s, d, &mut diags));

    let actual: BTreeMap<NaiveDate, f64> = returns.entries.iter().copied().collect();
    let wf = WalkForwardConfig {
        from: cfg.from,
        to: cfg.to,
        refit_every: cfg.refit_every,
        min_train: cfg.min_train,
        thresholds: cfg.thresholds,
    };
    let mut forecasts = Vec::new();
    for comp in [Component::Arima, Component::Ets, Component::Prophet] {
        let spec = cfg.spec_for(comp).expect("forecaster component");
        let name = comp.as_str();
        match walk_forward_signals(&returns, spec, &wf) {
            Ok(o) => {
                if let Some(f) = o.forecasts.iter().find(|f| !f.point_forecast.is_finite()) {
                    return Err(Failure::Numerical(anyhow::anyhow!(
                        "{spec} produced a non-finite forecast for {}",
                        f.date
                    )));
                }
                if o.forecasts.is_empty() && !o.diagnostics.is_empty() && o.diagnostics.iter().all(|x| is_numerical(&x.error))
                {
                    return Err(Failure::Numerical(anyhow::anyhow!(
                        "{spec} failed on every day of the window: {}",
                        o.diagnostics[0].error
                    )));
                }
                diags.extend(
                    o.diagnostics
                        .iter()
                        .map(|x| Diagnostic::new(STAGE, name, Some(x.date), format!("{}; signal set to 0", x.error))),
                );
                forecasts.extend(o.forecasts.iter().map(|f| ForecastRow {
                    date: f.date,
                    model: name.to_string(),
                    spec: spec.to_string(),
                    forecast: f.point_forecast,
                    actual: actual[&f.date],
                }));
                series.push(SignalSeries::new(name, o.signals.entries));
            }
            Err(ForecastError::InvalidSpec(msg)) => return Err(config_error(msg)),
            Err(e) => {
                diags.push(Diagnostic::new(STAGE, name, None, format!("{e}; signal set to 0")));
                series.push(SignalSeries::new(name, Vec::new()));
            }
        }
    }

    let series: Vec<SignalSeries> = series.iter().map(|s| on_window(s, &dates)).collect();
    write_signals(&out.join(SIGNALS), &series)?;
    write_forecasts(&out.join(FORECASTS), &forecasts)?;
    record_diagnostics(out, STAGE, diags)
}

/// A configured strategy bound to one sentiment stream (or none).
struct Plan {
    key: Option<SentimentKey>,
    components: Vec<Component>,
}

impl Plan {
    fn name(&self) -> String {
        let mut parts: Vec<String> = self.key.iter().map(|k| k.to_string()).collect();
        parts.extend(self.components.iter().map(|c| c.as_str().to_string()));
        parts.join("+")
    }

    fn sources(&self) -> Vec<String> {
        let mut s: Vec<String> = self.key.iter().map(|k| k.to_string()).collect();
        s.extend(self.components.iter().map(|c| c.as_str().to_string()));
        s
    }

    fn row(&self) -> String {
        let comps = self.components.iter().map(|c| c.label()).collect::<Vec<_>>().join(" + ");
        match (&self.key, comps.is_empty()) {
            (Some(k), true) => format!("{} sentiment", k.model),
            (Some(k), false) => format!("{} {comps}", k.model),
            (None, _) => comps,
        }
    }

    fn column(&self) -> String {
        self.key.map_or_else(|| "no sentiment".to_string(), |k| k.source.to_string())
    }
}

fn plans(cfg: &RunConfig, keys: &[SentimentKey]) -> Vec<Plan> {
    let mut out = Vec::new();
    for comps in &cfg.strategies {
        if keys.is_empty() {
            if !comps.is_empty() {
                out.push(Plan {
                    key: None,
                    components: comps.clone(),
                });
            }
            continue;
        }
        out.extend(keys.iter().map(|k| Plan {
            key: Some(*k),
            components: comps.clone(),
        }));
    }
    out
}

fn short_hash(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))[..12].to_string()
}

fn backtest(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let prices = read_prices(out)?;
    let signals = read_signals(out)?;
    let wprices = window(cfg, &prices)?;
    let dates = wprices.dates();
    let keys: Vec<SentimentKey> = signals.keys().filter_map(|s| s.parse().ok()).collect();
    let sim = SimConfig {
        capital: cfg.capital,
        cost_rate: cfg.cost_rate,
    };

    let benchmark = buy_and_hold(&wprices, cfg.capital).data(|| "benchmark".into())?;
    let mut curves = vec![(BENCHMARK_ROW.to_string(), benchmark)];
    let mut runs = vec![RunRow {
        strategy: BENCHMARK_ROW.to_string(),
        model: String::new(),
        news_source: String::new(),
        components: String::new(),
        row: BENCHMARK_ROW.to_string(),
        column: String::new(),
        hash: "benchmark".to_string(),
        final_return: strategy_return(&curves[0].1),
        cash_only_return: cash_only_return(&curves[0].1),
    }];
    for plan in plans(cfg, &keys) {
        let parts = plan
            .sources()
            .iter()
            .map(|s| {
                signals
                    .get(s)
                    .ok_or_else(|| data_error(format!("{SIGNALS} has no `{s}` signal (rerun `signals`)")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let combined = combine_series(&parts, &dates);
        let curve = simulate(&wprices, &schedule(&combined, cfg.execution), sim).data(|| plan.name())?;
        let name = plan.name();
        runs.push(RunRow {
            hash: short_hash(&name),
            model: plan.key.map(|k| k.model.to_string()).unwrap_or_default(),
            news_source: plan.key.map(|k| k.source.to_string()).unwrap_or_default(),
            components: plan.components.iter().map(|c| c.as_str()).collect::<Vec<_>>().join("+"),
            row: plan.row(),
            column: plan.column(),
            final_return: strategy_return(&curve),
            cash_only_return: cash_only_return(&curve),
            strategy: name.clone(),
        });
        curves.push((name, curve));
    }

    let equity_dir = out.join(EQUITY_DIR);
    if equity_dir.exists() {
        std::fs::remove_dir_all(&equity_dir).data(|| format!("cannot clear {}", equity_dir.display()))?;
    }
    for (run, (_, curve)) in runs.iter().zip(&curves) {
        Output::write_with(equity_dir.join(format!("{}.csv", run.hash)), |w| write_equity_csv(curve, w))?;
    }
    let refs: Vec<(String, &_)> = curves.iter().map(|(n, c)| (n.clone(), c)).collect();
    Output::write_with(out.join(EQUITY_CURVES), |w| write_equity_curves_csv(&refs, w))?;
    write_runs(&out.join(RUNS), &runs)?;
    record_diagnostics(out, "backtest", Vec::new())
}

fn evaluate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    const STAGE: &str = "evaluate";
    let signals = read_signals(out)?;
    let (_, classes) = read_returns(out)?;
    let mut rows = Vec::new();
    let mut diags = Vec::new();
    let mut push = |series: &SignalSeries, signal: String, model: String, news_source: String, protocol: String| {
        match classification_accuracy(series, &classes) {
            Ok(accuracy) => rows.push(AccuracyRow {
                signal,
                model,
                news_source,
                accuracy,
                protocol,
            }),
            Err(e) => diags.push(Diagnostic::new(STAGE, series.source.clone(), None, e.to_string())),
        }
    };
    let state = "state signal of day D vs realized class of day D";
    for (source, series) in &signals {
        match source.parse::<SentimentKey>() {
            Ok(k) => push(
                series,
                "sentiment".into(),
                k.model.to_string(),
                k.source.to_string(),
                format!("{state}; sentiment of day D-{}", cfg.lag),
            ),
            Err(()) => push(series, source.clone(), String::new(), String::new(), state.to_string()),
        }
    }
    // Reference row: the always-neutral signal scores the neutral base rate.
    if let Some(any) = signals.values().next() {
        let neutral = SignalSeries::new(
            "always_neutral",
            any.entries.iter().map(|(d, _)| (*d, Direction::Flat)).collect(),
        );
        push(&neutral, "always_neutral".into(), String::new(), String::new(), state.to_string());
    }
    Output::write_with(out.join("accuracy.csv"), |w| write_accuracy_csv(&rows, w))?;
    record_diagnostics(out, STAGE, diags)
}

fn report(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    const STAGE: &str = "report";
    let runs = read_runs(out)?;
    let curves = read_equity_curves(out, cfg.capital)?;
    let forecasts = read_forecasts(out)?;
    let inputs = read_inputs(out)?;
    let mut diags = Vec::new();

    let curve = |name: &str| {
        curves
            .get(name)
            .ok_or_else(|| data_error(format!("{EQUITY_CURVES} has no curve for `{name}`")))
    };
    let benchmark = curve(BENCHMARK_ROW)?;
    let strategy_runs = runs
        .iter()
        .filter(|r| r.strategy != BENCHMARK_ROW)
        .map(|r| {
            Ok(StrategyRun {
                row: r.row.clone(),
                column: r.column.clone(),
                curve: curve(&r.strategy)?.clone(),
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let table = build_returns_table(&strategy_runs, benchmark).data(|| "returns table".into())?;
    Output::write_with(out.join("returns_table.csv"), |w| table.write_csv(w))?;
    Output::write_with(out.join("returns_table.txt"), |w| {
        std::io::Write::write_all(w, table.render_text().as_bytes())
    })?;

    let mut fig1: Vec<PlotSeries> = Vec::new();
    let mut actual: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for f in &forecasts {
        actual.insert(f.date, f.actual);
        match fig1.iter_mut().find(|s| s.name == f.spec) {
            Some(s) => s.points.push((f.date, f.forecast)),
            None => fig1.push(PlotSeries {
                name: f.spec.clone(),
                points: vec![(f.date, f.forecast)],
            }),
        }
    }
    if fig1.is_empty() {
        diags.push(Diagnostic::new(STAGE, "fig1", None, "no forecasts in the window; figure 1 skipped"));
        for name in ["fig1_forecasts.csv", "fig1.svg"] {
            let p = out.join(name);
            if p.exists() {
                std::fs::remove_file(&p).data(|| format!("cannot remove {}", p.display()))?;
            }
        }
    } else {
        fig1.insert(
            0,
            PlotSeries {
                name: "actual".into(),
                points: actual.into_iter().collect(),
            },
        );
        write_figure(out, "fig1", "Forecast vs actual daily return", "return", &fig1)?;
    }

    let mut ranked: Vec<&RunRow> = runs.iter().filter(|r| r.strategy != BENCHMARK_ROW).collect();
    ranked.sort_by(|a, b| {
        b.final_return
            .total_cmp(&a.final_return)
            .then_with(|| a.strategy.cmp(&b.strategy))
    });
    let mut fig2 = vec![PlotSeries {
        name: BENCHMARK_ROW.into(),
        points: benchmark.states.iter().map(|s| (s.date, s.value)).collect(),
    }];
    for r in ranked.into_iter().take(cfg.fig2_top) {
        fig2.push(PlotSeries {
            name: format!("{} ({})", r.row, r.column),
            points: curve(&r.strategy)?.states.iter().map(|s| (s.date, s.value)).collect(),
        });
    }
    write_figure(out, "fig2", "Portfolio value", "value", &fig2)?;

    let mut meta = String::new();
    for (k, v) in &inputs {
        meta.push_str(&format!("{k} = {v}\n"));
    }
    meta.push_str(&format!("window = {}..{}\n", cfg.from, cfg.to));
    meta.push_str(&format!("lag = {}\n", cfg.lag));
    meta.push_str(&format!("execution = {}\n", cfg.execution));
    meta.push_str(&format!("capital = {}\n", cfg.capital));
    meta.push_str(&format!("cost_rate = {}\n", cfg.cost_rate));
    meta.push_str(&format!("strategies = {}\n", runs.len() - 1));
    meta.push_str(
        "accuracy_protocol = reconstruction: state signal of day D vs realized class of day D over the \
         window; sentiment taken from day D-lag; forecasts made with returns before D\n",
    );
    meta.push_str(
        "returns = mark-to-market (cash + shares * adj_close); cash_only_return in runs.csv is the \
         cash balance alone\n",
    );
    meta.push_str(&format!("config = {}\n", cfg.fingerprint()));
    Output::write_with(out.join("run.txt"), |w| std::io::Write::write_all(w, meta.as_bytes()))?;
    record_diagnostics(out, STAGE, diags)
}

fn write_figure(out: &Path, stem: &str, title: &str, y_label: &str, series: &[PlotSeries]) -> Result<(), Failure> {
    let csv_name = match stem {
        "fig1" => "fig1_forecasts.csv",
        _ => "fig2_curves.csv",
    };
    Output::write_with(out.join(csv_name), |w| write_plot_csv(series, w))?;
    let svg = render_svg(title, y_label, series).data(|| format!("{stem}.svg"))?;
    Output::write_with(out.join(format!("{stem}.svg")), |w| std::io::Write::write_all(w, svg.as_bytes()))
}

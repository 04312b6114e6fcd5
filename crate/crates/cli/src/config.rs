//! Run configuration: a TOML file whose keys can all be overridden by flags.
//!
//! ```toml
//! prices = "prices.csv"          # paths are relative to this file
//! sentiment = "sentiment.csv"
//! news = "news.csv"
//! from = "2024-05-10"
//! to = "2024-08-07"
//! lag = 1
//! execution = "next_day"         # or "same_day"
//! capital = 10000.0
//! cost_rate = 0.0
//! seed = 0
//! out = "reports/run"
//! strategies = [[], ["vw_macd"], ["vw_macd", "arima"]]
//! fig2_top = 5
//!
//! [thresholds]
//! positive = 0.01
//! negative = -0.01
//!
//! [indicators]
//! macd = [12, 26, 9]
//! vw_macd = [12, 26, 9]
//! dual_short = [12, 26, 9]
//! dual_long = [19, 39, 9]
//! sar = [0.02, 0.02, 0.2]
//! macd_rule = "macd_state"
//! vw_macd_rule = "vw_state"
//! sar_rule = "sar_side"
//!
//! [forecast]
//! arima = "arima(1,0,0)"
//! ets = "ets(add,none,none)"
//! prophet = "prophet(cp=25,fourier=5:3,lambda=0.5)"
//! min_train = 200
//! refit_every = 1
//!
//! [cleaning]
//! boilerplate = ["Copyright", "Photo by", "Write to "]
//! drop_keywords = ["Amundi S&P 500"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::Deserialize;
use sentrade_core::forecast::ModelSpec;
use sentrade_core::indicators::{MacdConfig, SarConfig, SignalRule, DUAL_LONG, DUAL_SHORT};
use sentrade_core::news::{DEFAULT_BOILERPLATE_MARKERS, DEFAULT_DROP_KEYWORDS, MAX_LAG};
use sentrade_core::strategy::{Execution, DEFAULT_CAPITAL};
use sentrade_core::{Thresholds, DEFAULT_THRESHOLDS};

use crate::error::{config_error, Classify, Failure};

/// A non-sentiment signal source that a strategy can add to its sentiment
/// stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    Macd,
    Sar,
    VwMacd,
    DualMacd,
    Arima,
    Prophet,
    Ets,
}

impl Component {
    pub const ALL: [Component; 7] = [
        Component::Macd,
        Component::Sar,
        Component::VwMacd,
        Component::DualMacd,
        Component::Arima,
        Component::Prophet,
        Component::Ets,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Macd => "macd",
            Component::Sar => "sar",
            Component::VwMacd => "vw_macd",
            Component::DualMacd => "dual_macd",
            Component::Arima => "arima",
            Component::Prophet => "prophet",
            Component::Ets => "ets",
        }
    }

    /// Display name used in table rows.
    pub fn label(self) -> &'static str {
        match self {
            Component::Macd => "MACD",
            Component::Sar => "SAR",
            Component::VwMacd => "VW MACD",
            Component::DualMacd => "Dual MACD",
            Component::Arima => "ARIMA",
            Component::Prophet => "Prophet",
            Component::Ets => "ETS",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Component::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown strategy component {s:?}"))
    }
}

/// TOML accepts dates both quoted and as bare local dates.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DateField {
    Text(String),
    Toml(toml::value::Datetime),
}

impl DateField {
    fn parse(&self, key: &str) -> Result<NaiveDate, Failure> {
        let text = match self {
            DateField::Text(s) => s.clone(),
            DateField::Toml(d) => d.to_string(),
        };
        NaiveDate::parse_from_str(&text, "%Y-%m-%d").config(|| format!("`{key}` is not a YYYY-MM-DD date: {text:?}"))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileThresholds {
    positive: Option<f64>,
    negative: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIndicators {
    macd: Option<[usize; 3]>,
    vw_macd: Option<[usize; 3]>,
    dual_short: Option<[usize; 3]>,
    dual_long: Option<[usize; 3]>,
    sar: Option<[f64; 3]>,
    macd_rule: Option<String>,
    vw_macd_rule: Option<String>,
    sar_rule: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileForecast {
    arima: Option<String>,
    ets: Option<String>,
    prophet: Option<String>,
    min_train: Option<usize>,
    refit_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCleaning {
    boilerplate: Option<Vec<String>>,
    drop_keywords: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    prices: Option<PathBuf>,
    sentiment: Option<PathBuf>,
    news: Option<PathBuf>,
    from: Option<DateField>,
    to: Option<DateField>,
    lag: Option<usize>,
    execution: Option<String>,
    capital: Option<f64>,
    cost_rate: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    strategies: Option<Vec<Vec<String>>>,
    fig2_top: Option<usize>,
    #[serde(default)]
    thresholds: FileThresholds,
    #[serde(default)]
    indicators: FileIndicators,
    #[serde(default)]
    forecast: FileForecast,
    #[serde(default)]
    cleaning: FileCleaning,
}

/// Flag values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub prices: Option<PathBuf>,
    pub sentiment: Option<PathBuf>,
    pub news: Option<PathBuf>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub lag: Option<usize>,
    pub execution: Option<String>,
    pub capital: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub prices: Option<PathBuf>,
    pub sentiment: Option<PathBuf>,
    pub news: Option<PathBuf>,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub lag: usize,
    pub thresholds: Thresholds,
    pub macd: MacdConfig,
    pub vw_macd: MacdConfig,
    pub dual_short: MacdConfig,
    pub dual_long: MacdConfig,
    pub sar: SarConfig,
    pub macd_rule: SignalRule,
    pub vw_macd_rule: SignalRule,
    pub sar_rule: SignalRule,
    pub arima: ModelSpec,
    pub ets: ModelSpec,
    pub prophet: ModelSpec,
    pub min_train: usize,
    pub refit_every: usize,
    pub execution: Execution,
    pub capital: f64,
    pub cost_rate: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub strategies: Vec<Vec<Component>>,
    pub fig2_top: usize,
    pub boilerplate: Vec<String>,
    pub drop_keywords: Vec<String>,
}

pub fn default_strategies() -> Vec<Vec<Component>> {
    let mut s = vec![vec![]];
    s.extend(Component::ALL.into_iter().map(|c| vec![c]));
    s.push(vec![Component::Macd, Component::Arima]);
    s.push(vec![Component::VwMacd, Component::Arima]);
    s
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            prices: None,
            sentiment: None,
            news: None,
            from: NaiveDate::from_ymd_opt(2024, 5, 10).unwrap(),
            to: NaiveDate::from_ymd_opt(2024, 8, 7).unwrap(),
            lag: 1,
            thresholds: DEFAULT_THRESHOLDS,
            macd: DUAL_SHORT,
            vw_macd: DUAL_SHORT,
            dual_short: DUAL_SHORT,
            dual_long: DUAL_LONG,
            sar: SarConfig::default(),
            macd_rule: SignalRule::MacdState,
            vw_macd_rule: SignalRule::VwState,
            sar_rule: SignalRule::SarSide,
            arima: ModelSpec::Arima(Default::default()),
            ets: "ets(add,none,none)".parse().unwrap(),
            prophet: ModelSpec::Prophet(Default::default()),
            min_train: 200,
            refit_every: 1,
            execution: Execution::NextDay,
            capital: DEFAULT_CAPITAL,
            cost_rate: 0.0,
            seed: 0,
            out: None,
            strategies: default_strategies(),
            fig2_top: 5,
            boilerplate: DEFAULT_BOILERPLATE_MARKERS.iter().map(|s| s.to_string()).collect(),
            drop_keywords: DEFAULT_DROP_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn macd_cfg(v: [usize; 3], key: &str) -> Result<MacdConfig, Failure> {
    let [fast, slow, signal] = v;
    if fast == 0 || signal == 0 || fast >= slow {
        return Err(config_error(format!("`indicators.{key}` needs 0 < fast < slow and signal > 0, got {v:?}")));
    }
    Ok(MacdConfig::new(fast, slow, signal))
}

fn rule(s: &str, key: &str) -> Result<SignalRule, Failure> {
    s.parse().config(|| format!("`indicators.{key}`"))
}

fn spec(s: &str, key: &str, family: &str) -> Result<ModelSpec, Failure> {
    let m: ModelSpec = s.parse().config(|| format!("`forecast.{key}`"))?;
    if m.family() != family {
        return Err(config_error(format!("`forecast.{key}` must be a {family} spec, got {s:?}")));
    }
    Ok(m)
}

impl RunConfig {
    /// Reads the optional config file, then applies flag overrides.
    pub fn load(path: Option<&Path>, flags: &Overrides) -> Result<Self, Failure> {
        let (file, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).config(|| format!("cannot read config {}", p.display()))?;
                let file: FileConfig = toml::from_str(&text).config(|| format!("invalid config {}", p.display()))?;
                (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });

        let mut cfg = RunConfig {
            prices: rel(file.prices),
            sentiment: rel(file.sentiment),
            news: rel(file.news),
            out: rel(file.out),
            ..RunConfig::default()
        };
        if let Some(d) = &file.from {
            cfg.from = d.parse("from")?;
        }
        if let Some(d) = &file.to {
            cfg.to = d.parse("to")?;
        }
        cfg.lag = file.lag.unwrap_or(cfg.lag);
        if let Some(e) = &file.execution {
            cfg.execution = e.parse().config(|| "`execution`".into())?;
        }
        cfg.capital = file.capital.unwrap_or(cfg.capital);
        cfg.cost_rate = file.cost_rate.unwrap_or(cfg.cost_rate);
        cfg.seed = file.seed.unwrap_or(cfg.seed);
        cfg.fig2_top = file.fig2_top.unwrap_or(cfg.fig2_top);
        if let Some(list) = &file.strategies {
            cfg.strategies = list
                .iter()
                .map(|s| {
                    let mut comps = s
                        .iter()
                        .map(|c| c.parse::<Component>().map_err(config_error))
                        .collect::<Result<Vec<_>, _>>()?;
                    comps.sort();
                    comps.dedup();
                    Ok(comps)
                })
                .collect::<Result<_, Failure>>()?;
        }

        let t = &file.thresholds;
        cfg.thresholds = Thresholds::new(
            t.positive.unwrap_or(DEFAULT_THRESHOLDS.positive),
            t.negative.unwrap_or(DEFAULT_THRESHOLDS.negative),
        )
        .config(|| "`thresholds`".into())?;

        let ind = &file.indicators;
        if let Some(v) = ind.macd {
            cfg.macd = macd_cfg(v, "macd")?;
        }
        if let Some(v) = ind.vw_macd {
            cfg.vw_macd = macd_cfg(v, "vw_macd")?;
        }
        if let Some(v) = ind.dual_short {
            cfg.dual_short = macd_cfg(v, "dual_short")?;
        }
        if let Some(v) = ind.dual_long {
            cfg.dual_long = macd_cfg(v, "dual_long")?;
        }
        if let Some([alpha0, alpha_step, alpha_max]) = ind.sar {
            if !(alpha0 > 0.0 && alpha_step >= 0.0 && alpha_max >= alpha0) {
                return Err(config_error("`indicators.sar` needs 0 < alpha0 <= alpha_max and alpha_step >= 0"));
            }
            cfg.sar = SarConfig { alpha0, alpha_step, alpha_max };
        }
        if let Some(r) = &ind.macd_rule {
            cfg.macd_rule = rule(r, "macd_rule")?;
        }
        if let Some(r) = &ind.vw_macd_rule {
            cfg.vw_macd_rule = rule(r, "vw_macd_rule")?;
        }
        if let Some(r) = &ind.sar_rule {
            cfg.sar_rule = rule(r, "sar_rule")?;
        }

        let fc = &file.forecast;
        if let Some(s) = &fc.arima {
            cfg.arima = spec(s, "arima", "arima")?;
        }
        if let Some(s) = &fc.ets {
            cfg.ets = spec(s, "ets", "ets")?;
        }
        if let Some(s) = &fc.prophet {
            cfg.prophet = spec(s, "prophet", "prophet")?;
        }
        cfg.min_train = fc.min_train.unwrap_or(cfg.min_train);
        cfg.refit_every = fc.refit_every.unwrap_or(cfg.refit_every);

        if let Some(b) = &file.cleaning.boilerplate {
            cfg.boilerplate = b.clone();
        }
        if let Some(k) = &file.cleaning.drop_keywords {
            cfg.drop_keywords = k.clone();
        }

        cfg.apply(flags)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, flags: &Overrides) -> Result<(), Failure> {
        if flags.prices.is_some() {
            self.prices = flags.prices.clone();
        }
        if flags.sentiment.is_some() {
            self.sentiment = flags.sentiment.clone();
        }
        if flags.news.is_some() {
            self.news = flags.news.clone();
        }
        if let Some(d) = &flags.from {
            self.from = DateField::Text(d.clone()).parse("--from")?;
        }
        if let Some(d) = &flags.to {
            self.to = DateField::Text(d.clone()).parse("--to")?;
        }
        if let Some(l) = flags.lag {
            self.lag = l;
        }
        if let Some(e) = &flags.execution {
            self.execution = e.parse().config(|| "--execution".into())?;
        }
        if let Some(c) = flags.capital {
            self.capital = c;
        }
        if let Some(s) = flags.seed {
            self.seed = s;
        }
        if flags.out.is_some() {
            self.out = flags.out.clone();
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), Failure> {
        if self.lag > MAX_LAG {
            return Err(config_error(format!("lag must be in 0..={MAX_LAG}, got {}", self.lag)));
        }
        if !(self.capital > 0.0 && self.capital.is_finite()) {
            return Err(config_error(format!("capital must be positive, got {}", self.capital)));
        }
        if !(0.0..1.0).contains(&self.cost_rate) {
            return Err(config_error(format!("cost_rate must be in [0, 1), got {}", self.cost_rate)));
        }
        if self.from > self.to {
            return Err(config_error(format!("window start {} is after its end {}", self.from, self.to)));
        }
        if self.refit_every == 0 {
            return Err(config_error("`forecast.refit_every` must be at least 1"));
        }
        if self.strategies.is_empty() {
            return Err(config_error("`strategies` is empty"));
        }
        Ok(())
    }

    /// Parameters that determine outputs, excluding file locations.
    pub fn fingerprint(&self) -> String {
        format!(
            "window={}..{};lag={};thresholds={:?};macd={:?};vw={:?};dual={:?}/{:?};sar={:?};rules={}/{}/{};\
             arima={};ets={};prophet={};min_train={};refit={};exec={};capital={:?};cost={:?};seed={};\
             strategies={:?};fig2_top={};boilerplate={:?};drop={:?}",
            self.from,
            self.to,
            self.lag,
            self.thresholds,
            self.macd,
            self.vw_macd,
            self.dual_short,
            self.dual_long,
            self.sar,
            self.macd_rule,
            self.vw_macd_rule,
            self.sar_rule,
            self.arima,
            self.ets,
            self.prophet,
            self.min_train,
            self.refit_every,
            self.execution,
            self.capital,
            self.cost_rate,
            self.seed,
            self.strategies,
            self.fig2_top,
            self.boilerplate,
            self.drop_keywords
        )
    }

    pub fn spec_for(&self, c: Component) -> Option<&ModelSpec> {
        match c {
            Component::Arima => Some(&self.arima),
            Component::Ets => Some(&self.ets),
            Component::Prophet => Some(&self.prophet),
            _ => None,
        }
    }
}

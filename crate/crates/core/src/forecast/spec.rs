//! Model-spec strings:
//!
//! ```text
//! arima(p,d,q) | arima(auto)
//! ets(E,T,S) | ets(E,T,S,m)          E in add|mul; T, S in add|mul|none
//! prophet(cp=N,fourier=P:N[+P:N...]|none,lambda=X)   keys optional
//! ```

use std::fmt;
use std::str::FromStr;

use super::{
    arima_auto, arima_fit, ets_fit, prophet_lite_fit, ArimaOrder, Component, ErrorType, EtsSpec,
    FittedForecaster, ForecastError, Forecaster, FourierBlock, ProphetConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Arima(ArimaOrder),
    ArimaAuto,
    Ets(EtsSpec),
    Prophet(ProphetConfig),
}

impl ModelSpec {
    /// Short family name used as the signal source tag.
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Arima(_) | ModelSpec::ArimaAuto => "arima",
            ModelSpec::Ets(_) => "ets",
            ModelSpec::Prophet(_) => "prophet",
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Arima(o) => write!(f, "arima({},{},{})", o.p, o.d, o.q),
            ModelSpec::ArimaAuto => f.write_str("arima(auto)"),
            ModelSpec::Ets(s) => write!(f, "ets({s})"),
            ModelSpec::Prophet(c) => write!(f, "prophet({c})"),
        }
    }
}

fn component(s: &str) -> Option<Component> {
    match s {
        "none" | "n" => Some(Component::None),
        "add" | "a" => Some(Component::Additive),
        "mul" | "m" => Some(Component::Multiplicative),
        _ => None,
    }
}

impl FromStr for ModelSpec {
    type Err = ForecastError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let bad = || ForecastError::InvalidSpec(raw.to_string());
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        let open = s.find('(').ok_or_else(bad)?;
        let body = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<&str> = if body.is_empty() { vec![] } else { body.split(',').collect() };
        match &s[..open] {
            "arima" => {
                if args == ["auto"] {
                    return Ok(ModelSpec::ArimaAuto);
                }
                let n: Vec<usize> = args
                    .iter()
                    .map(|a| a.parse().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?;
                match n.as_slice() {
                    [p, d, q] if *p <= 5 && *d <= 2 && *q <= 5 => {
                        Ok(ModelSpec::Arima(ArimaOrder::new(*p, *d, *q)))
                    }
                    _ => Err(bad()),
                }
            }
            "ets" => {
                if !(3..=4).contains(&args.len()) {
                    return Err(bad());
                }
                let error = match args[0] {
                    "add" | "a" => ErrorType::Additive,
                    "mul" | "m" => ErrorType::Multiplicative,
                    _ => return Err(bad()),
                };
                let trend = component(args[1]).ok_or_else(bad)?;
                let seasonal = component(args[2]).ok_or_else(bad)?;
                let period = match args.get(3) {
                    Some(m) => m.parse().map_err(|_| bad())?,
                    None if seasonal == Component::None => 0,
                    None => 5,
                };
                Ok(ModelSpec::Ets(EtsSpec::new(error, trend, seasonal, period)))
            }
            "prophet" => {
                let mut cfg = ProphetConfig::default();
                for arg in args {
                    let (key, value) = arg.split_once('=').ok_or_else(bad)?;
                    match key {
                        "cp" => cfg.n_changepoints = value.parse().map_err(|_| bad())?,
                        "lambda" => {
                            cfg.lambda = value.parse().map_err(|_| bad())?;
                            if !(cfg.lambda >= 0.0) {
                                return Err(bad());
                            }
                        }
                        "fourier" if value == "none" => cfg.fourier.clear(),
                        "fourier" => {
                            cfg.fourier = value
                                .split('+')
                                .map(|blk| {
                                    let (p, n) = blk.split_once(':').ok_or_else(bad)?;
                                    let period: f64 = p.parse().map_err(|_| bad())?;
                                    let order: usize = n.parse().map_err(|_| bad())?;
                                    if period > 0.0 && order > 0 {
                                        Ok(FourierBlock { period, order })
                                    } else {
                                        Err(bad())
                                    }
                                })
                                .collect::<Result<_, _>>()?;
                        }
                        _ => return Err(bad()),
                    }
                }
                Ok(ModelSpec::Prophet(cfg))
            }
            _ => Err(bad()),
        }
    }
}

impl Forecaster for ModelSpec {
    fn name(&self) -> String {
        self.family().to_string()
    }

    fn fit(&self, history: &[f64]) -> Result<Box<dyn FittedForecaster>, ForecastError> {
        Ok(match self {
            ModelSpec::Arima(order) => Box::new(arima_fit(history, *order)?),
            ModelSpec::ArimaAuto => Box::new(arima_auto(history)?),
            ModelSpec::Ets(spec) => Box::new(ets_fit(history, *spec)?),
            ModelSpec::Prophet(cfg) => Box::new(prophet_lite_fit(history, cfg)?),
        })
    }
}

//! Native model library behind a single fit-and-forecast entry point.

mod arima;
mod regression;
mod simple;
mod smoothing;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    RandomWalk,
    MovingAverage,
    ExpSmoothing,
    Arima,
    Theta,
    Croston,
    LinearRegression,
    PolynomialRegression,
    RidgeRegression,
    LassoRegression,
}

impl ModelId {
    pub const ALL: [ModelId; 10] = [
        ModelId::RandomWalk,
        ModelId::MovingAverage,
        ModelId::ExpSmoothing,
        ModelId::Arima,
        ModelId::Theta,
        ModelId::Croston,
        ModelId::LinearRegression,
        ModelId::PolynomialRegression,
        ModelId::RidgeRegression,
        ModelId::LassoRegression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::RandomWalk => "random_walk",
            ModelId::MovingAverage => "moving_average",
            ModelId::ExpSmoothing => "exp_smoothing",
            ModelId::Arima => "arima",
            ModelId::Theta => "theta",
            ModelId::Croston => "croston",
            ModelId::LinearRegression => "linear_regression",
            ModelId::PolynomialRegression => "polynomial_regression",
            ModelId::RidgeRegression => "ridge_regression",
            ModelId::LassoRegression => "lasso_regression",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    /// Accepts snake_case ids and the CamelCase names common in model catalogues.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        let id = match key.as_str() {
            "randomwalk" | "naive" => ModelId::RandomWalk,
            "movingaverage" => ModelId::MovingAverage,
            "expsmoothing" | "exponentialsmoothing" | "holtwinters" | "ets" => ModelId::ExpSmoothing,
            "arima" => ModelId::Arima,
            "theta" => ModelId::Theta,
            "croston" => ModelId::Croston,
            "linearregression" => ModelId::LinearRegression,
            "polynomialregression" => ModelId::PolynomialRegression,
            "ridgeregression" | "ridge" => ModelId::RidgeRegression,
            "lassoregression" | "lasso" => ModelId::LassoRegression,
            _ => return Err(Error::UnknownModel(s.to_string())),
        };
        Ok(id)
    }
}

/// A single hyperparameter value. JSON integers stay integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Bool(bool),
    Int(i64),
    Float(f64),
}

impl HyperValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            HyperValue::Int(i) => Some(i as f64),
            HyperValue::Float(x) => Some(x),
            HyperValue::Bool(_) => None,
        }
    }

    pub fn as_usize(&self) -> Option<usize> {
        match *self {
            HyperValue::Int(i) if i >= 0 => Some(i as usize),
            HyperValue::Float(x) if x >= 0.0 && x.fract() == 0.0 => Some(x as usize),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            HyperValue::Bool(b) => Some(b),
            _ => None,
        }
    }
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Bool(b) => write!(f, "{b}"),
            HyperValue::Int(i) => write!(f, "{i}"),
            HyperValue::Float(x) => write!(f, "{x}"),
        }
    }
}

pub type Hyperparameters = BTreeMap<String, HyperValue>;

/// Ordered list of (parameter, candidates). The last parameter varies fastest
/// when the grid is enumerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterSpace {
    pub params: Vec<(String, Vec<HyperValue>)>,
}

impl HyperparameterSpace {
    pub fn size(&self) -> usize {
        self.params.iter().map(|(_, v)| v.len()).product()
    }

    pub fn get(&self, name: &str) -> Option<&[HyperValue]> {
        self.params
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Configuration at position `index` of the row-major enumeration.
    pub fn config_at(&self, mut index: usize) -> Hyperparameters {
        let mut out = Hyperparameters::new();
        for (name, values) in self.params.iter().rev() {
            out.insert(name.clone(), values[index % values.len()]);
            index /= values.len();
        }
        out
    }

    pub fn enumerate(&self) -> Vec<Hyperparameters> {
        (0..self.size()).map(|i| self.config_at(i)).collect()
    }
}

fn space(entries: &[(&str, &[HyperValue])]) -> HyperparameterSpace {
    HyperparameterSpace {
        params: entries
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_vec()))
            .collect(),
    }
}

use HyperValue::{Bool as B, Float as F, Int as I};

/// Default discrete search space of a model.
pub fn hyperparameter_space(id: ModelId) -> HyperparameterSpace {
    match id {
        ModelId::RandomWalk => space(&[("drift", &[B(false), B(true)])]),
        ModelId::MovingAverage => space(&[("window", &[I(3), I(6), I(12), I(24)])]),
        ModelId::ExpSmoothing => space(&[
            ("alpha", &[F(0.2), F(0.5), F(0.8)]),
            ("trend", &[B(false), B(true)]),
            ("seasonal", &[B(false)]),
        ]),
        ModelId::Arima => space(&[
            ("p", &[I(0), I(1), I(2)]),
            ("d", &[I(0), I(1)]),
            ("q", &[I(0), I(1), I(2)]),
        ]),
        ModelId::Theta => space(&[("ses_alpha", &[F(0.2), F(0.5), F(0.8)])]),
        ModelId::Croston => space(&[("alpha", &[F(0.1), F(0.3), F(0.5)])]),
        ModelId::LinearRegression => space(&[("num_lags", &[I(4), I(8), I(24)])]),
        ModelId::PolynomialRegression => {
            space(&[("num_lags", &[I(4), I(8), I(24)]), ("degree", &[I(2), I(3)])])
        }
        ModelId::RidgeRegression | ModelId::LassoRegression => space(&[
            ("num_lags", &[I(4), I(8), I(24)]),
            ("lambda", &[F(0.1), F(1.0), F(10.0)]),
        ]),
    }
}

/// Space specialised to a detected seasonal period: exponential smoothing
/// gains the seasonal-on branch.
pub fn hyperparameter_space_for(id: ModelId, period: Option<usize>) -> HyperparameterSpace {
    let mut s = hyperparameter_space(id);
    if let (ModelId::ExpSmoothing, Some(p)) = (id, period) {
        for (name, values) in s.params.iter_mut() {
            if name == "seasonal" {
                values.push(B(true));
            }
        }
        s.params.push(("period".into(), vec![I(p as i64)]));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: ModelId,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
}

fn bad(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl ModelSpec {
    pub fn new(model_id: ModelId, hyperparameters: Hyperparameters) -> Result<Self> {
        let spec = Self {
            model_id,
            hyperparameters,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with(model_id: ModelId, params: &[(&str, HyperValue)]) -> Result<Self> {
        Self::new(
            model_id,
            params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        )
    }

    fn raw(&self, name: &str) -> Option<&HyperValue> {
        self.hyperparameters.get(name)
    }

    pub(crate) fn flag(&self, name: &str) -> bool {
        self.raw(name).and_then(HyperValue::as_bool).unwrap_or(false)
    }

    pub(crate) fn real(&self, name: &str) -> Option<f64> {
        self.raw(name).and_then(HyperValue::as_f64)
    }

    /// Integer parameter, falling back to the first grid value.
    pub(crate) fn count(&self, name: &str) -> usize {
        self.raw(name)
            .and_then(HyperValue::as_usize)
            .or_else(|| {
                hyperparameter_space(self.model_id)
                    .get(name)
                    .and_then(|v| v.first())
                    .and_then(HyperValue::as_usize)
            })
            .unwrap_or(0)
    }

    /// Check names, types and ranges. Values need not come from the default
    /// grid, so externally proposed settings are accepted when sensible.
    pub fn validate(&self) -> Result<()> {
        #[derive(Clone, Copy)]
        enum Kind {
            Flag,
            Count(usize, usize),
            Unit,
            NonNeg,
        }
        use Kind::*;
        let allowed: &[(&str, Kind)] = match self.model_id {
            ModelId::RandomWalk => &[("drift", Flag)],
            ModelId::MovingAverage => &[("window", Count(1, 10_000))],
            ModelId::ExpSmoothing => &[
                ("alpha", Unit),
                ("beta", Unit),
                ("gamma", Unit),
                ("trend", Flag),
                ("seasonal", Flag),
                ("period", Count(2, 10_000)),
            ],
            ModelId::Arima => &[("p", Count(0, 5)), ("d", Count(0, 2)), ("q", Count(0, 5))],
            ModelId::Theta => &[("ses_alpha", Unit)],
            ModelId::Croston => &[("alpha", Unit)],
            ModelId::LinearRegression => &[("num_lags", Count(1, 1000))],
            ModelId::PolynomialRegression => {
                &[("num_lags", Count(1, 1000)), ("degree", Count(1, 5))]
            }
            ModelId::RidgeRegression | ModelId::LassoRegression => {
                &[("num_lags", Count(1, 1000)), ("lambda", NonNeg)]
            }
        };
        for (name, value) in &self.hyperparameters {
            let Some((_, kind)) = allowed.iter().find(|(k, _)| k == name) else {
                return Err(bad(format!("{} has no parameter '{name}'", self.model_id)));
            };
            let ok = match *kind {
                Flag => value.as_bool().is_some(),
                Count(lo, hi) => value.as_usize().is_some_and(|v| (lo..=hi).contains(&v)),
                Unit => value.as_f64().is_some_and(|v| v > 0.0 && v <= 1.0),
                NonNeg => value.as_f64().is_some_and(|v| v >= 0.0 && v.is_finite()),
            };
            if !ok {
                return Err(bad(format!("{}: {name} = {value} is out of range", self.model_id)));
            }
        }
        if self.model_id == ModelId::ExpSmoothing && self.flag("seasonal") && self.raw("period").is_none() {
            return Err(bad("seasonal exp_smoothing needs a period".into()));
        }
        Ok(())
    }

    /// Hyperparameters as compact JSON, for logs and tables.
    pub fn params_json(&self) -> String {
        serde_json::to_string(&self.hyperparameters).unwrap_or_default()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.model_id, self.params_json())
    }
}

/// Point forecast; length equals the requested horizon and every value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub values: Vec<f64>,
}

/// Smallest training length that `fit_forecast` accepts for `spec`.
pub fn minimum_train_length(spec: &ModelSpec) -> usize {
    match spec.model_id {
        ModelId::RandomWalk => 1 + usize::from(spec.flag("drift")),
        ModelId::MovingAverage => spec.count("window"),
        ModelId::ExpSmoothing => {
            if spec.flag("seasonal") {
                2 * spec.count("period")
            } else {
                2
            }
        }
        ModelId::Arima => spec.count("p") + spec.count("q") + spec.count("d") + 12,
        ModelId::Theta => 3,
        ModelId::Croston => 1,
        ModelId::LinearRegression
        | ModelId::PolynomialRegression
        | ModelId::RidgeRegression
        | ModelId::LassoRegression => spec.count("num_lags") + 2,
    }
}

/// Fit `spec` on `train` and forecast `horizon` steps ahead.
pub fn fit_forecast(spec: &ModelSpec, train: &Series, horizon: usize) -> Result<Forecast> {
    spec.validate()?;
    let x = train.dense()?;
    if horizon == 0 {
        return Err(bad("horizon must be >= 1".into()));
    }
    let needed = minimum_train_length(spec);
    if x.len() < needed {
        return Err(Error::InsufficientLength {
            needed,
            got: x.len(),
        });
    }
    let values = match spec.model_id {
        ModelId::RandomWalk => simple::random_walk(&x, spec.flag("drift"), horizon),
        ModelId::MovingAverage => simple::moving_average(&x, spec.count("window"), horizon),
        ModelId::ExpSmoothing => smoothing::forecast(&x, &smoothing::Setup::from_spec(spec), horizon),
        ModelId::Arima => arima::forecast(
            &x,
            spec.count("p"),
            spec.count("d"),
            spec.count("q"),
            horizon,
        )?,
        ModelId::Theta => simple::theta(&x, spec.real("ses_alpha").unwrap_or(0.5), horizon),
        ModelId::Croston => simple::croston(&x, spec.real("alpha").unwrap_or(0.1), horizon),
        ModelId::LinearRegression
        | ModelId::PolynomialRegression
        | ModelId::RidgeRegression
        | ModelId::LassoRegression => regression::forecast(&x, &regression::Setup::from_spec(spec), horizon)?,
    };
    if values.len() != horizon || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::ModelFailure {
            model: spec.model_id,
            reason: "non-finite forecast".into(),
        });
    }
    Ok(Forecast { values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub model_id: ModelId,
    pub space: HyperparameterSpace,
    /// Minimum train length of the first grid configuration.
    pub minimum_train_length: usize,
}

/// Machine-readable registry of every native model.
pub fn catalog() -> Vec<CatalogEntry> {
    ModelId::ALL
        .iter()
        .map(|&id| {
            let space = hyperparameter_space(id);
            let first = ModelSpec {
                model_id: id,
                hyperparameters: space.config_at(0),
            };
            CatalogEntry {
                model_id: id,
                minimum_train_length: minimum_train_length(&first),
                space,
            }
        })
        .collect()
}

//! Built-in registry of nonnegative scalar fields, evaluated on ambient
//! coordinates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;
use std::sync::Arc;

type FieldFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A named density from the registry together with its parameters.
///
/// Wire format: `{"name": "affine", "a": [..], "b": 1.0}`.
///
/// | name        | parameters                    | value                         |
/// |-------------|-------------------------------|-------------------------------|
/// | `constant`  | `c`                           | c                             |
/// | `volume`    | none                          | 1                             |
/// | `affine`    | `a` (vector), `b`             | b + a·x                       |
/// | `quadratic` | `b`, `a` (vector), `q` (vector) | b + a·x + Σ q_i x_i²        |
/// | `gaussian`  | `center`, `sigma`, `scale`    | scale·exp(−‖x−center‖²/2σ²)   |
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct DensityField {
    name: String,
    params: Map<String, Value>,
    constant: Option<f64>,
    dim: Option<usize>,
    eval: Arc<FieldFn>,
}

impl fmt::Debug for DensityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityField")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl PartialEq for DensityField {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params
    }
}

fn number(params: &Map<String, Value>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) => v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
            Error::InvalidMeasure(format!("parameter `{key}` must be a finite number"))
        }),
        None => default.ok_or_else(|| Error::InvalidMeasure(format!("missing parameter `{key}`"))),
    }
}

fn vector(params: &Map<String, Value>, key: &str) -> Result<Option<Vec<f64>>> {
    let Some(v) = params.get(key) else {
        return Ok(None);
    };
    let arr = v
        .as_array()
        .ok_or_else(|| Error::InvalidMeasure(format!("parameter `{key}` must be an array")))?;
    arr.iter()
        .map(|x| {
            x.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
                Error::InvalidMeasure(format!("parameter `{key}` must hold finite numbers"))
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn lengths_agree(vs: &[&Option<Vec<f64>>]) -> Result<Option<usize>> {
    let mut dim = None;
    for v in vs.iter().filter_map(|v| v.as_ref()) {
        match dim {
            Some(d) if d != v.len() => {
                return Err(Error::InvalidMeasure(
                    "parameter vectors differ in length".into(),
                ))
            }
            _ => dim = Some(v.len()),
        }
    }
    Ok(dim)
}

fn dot_padded(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

impl DensityField {
    /// Look up `name` in the registry and bind `params`.
    pub fn from_registry(name: &str, params: Map<String, Value>) -> Result<Self> {
        let mut constant = None;
        let mut dim = None;
        let eval: Arc<FieldFn> = match name {
            "constant" | "volume" => {
                let c = if name == "volume" {
                    1.0
                } else {
                    number(&params, "c", None)?
                };
                if c < 0.0 {
                    return Err(Error::InvalidMeasure(format!(
                        "constant density {c} is negative"
                    )));
                }
                constant = Some(c);
                Arc::new(move |_| c)
            }
            "affine" => {
                let a = vector(&params, "a")?;
                let b = number(&params, "b", Some(0.0))?;
                dim = lengths_agree(&[&a])?;
                let a = a.unwrap_or_default();
                Arc::new(move |x| b + dot_padded(&a, x))
            }
            "quadratic" => {
                let a = vector(&params, "a")?;
                let q = vector(&params, "q")?;
                let b = number(&params, "b", Some(0.0))?;
                dim = lengths_agree(&[&a, &q])?;
                let a = a.unwrap_or_default();
                let q = q.unwrap_or_default();
                Arc::new(move |x| {
                    b + dot_padded(&a, x) + q.iter().zip(x).map(|(q, x)| q * x * x).sum::<f64>()
                })
            }
            "gaussian" => {
                let center = vector(&params, "center")?
                    .ok_or_else(|| Error::InvalidMeasure("missing parameter `center`".into()))?;
                let sigma = number(&params, "sigma", None)?;
                let scale = number(&params, "scale", Some(1.0))?;
                if !(sigma > 0.0) || scale < 0.0 {
                    return Err(Error::InvalidMeasure(
                        "gaussian needs sigma > 0 and scale >= 0".into(),
                    ));
                }
                dim = Some(center.len());
                Arc::new(move |x| {
                    let d2: f64 = center.iter().zip(x).map(|(c, x)| (x - c) * (x - c)).sum();
                    scale * (-d2 / (2.0 * sigma * sigma)).exp()
                })
            }
            other => {
                return Err(Error::InvalidMeasure(format!(
                "unknown density `{other}` (known: constant, volume, affine, quadratic, gaussian)"
            )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            params,
            constant,
            dim,
            eval,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        let mut params = Map::new();
        params.insert("c".into(), c.into());
        Self::from_registry("constant", params)
    }

    /// The Riemannian volume measure's density, ≡ 1.
    pub fn volume() -> Self {
        Self::from_registry("volume", Map::new()).expect("volume density is always valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &Map<String, Value> {
        &self.params
    }

    /// `Some(c)` when the field is identically c.
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    /// Parameter vectors must have the ambient dimension of the space.
    pub fn check_dim(&self, ambient: usize) -> Result<()> {
        match self.dim {
            Some(d) if d != ambient => Err(Error::InvalidMeasure(format!(
                "density `{}` has {d}-dimensional parameters but points have {ambient} coordinates",
                self.name
            ))),
            _ => Ok(()),
        }
    }

    /// Evaluate without the sign check.
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Evaluate and reject negative or non-finite values.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = (self.eval)(x);
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidMeasure(format!(
                "density `{}` evaluates to {v} at {x:?}",
                self.name
            )))
        }
    }
}

impl TryFrom<Value> for DensityField {
    type Error = Error;

    fn try_from(v: Value) -> Result<Self> {
        let Value::Object(mut map) = v else {
            return Err(Error::InvalidMeasure(
                "density must be a JSON object".into(),
            ));
        };
        let name = match map.remove("name") {
            Some(Value::String(s)) => s,
            _ => {
                return Err(Error::InvalidMeasure(
                    "density needs a string `name`".into(),
                ))
            }
        };
        Self::from_registry(&name, map)
    }
}

impl From<DensityField> for Value {
    fn from(d: DensityField) -> Value {
        let mut map = Map::new();
        map.insert("name".into(), Value::String(d.name));
        map.extend(d.params);
        Value::Object(map)
    }
}

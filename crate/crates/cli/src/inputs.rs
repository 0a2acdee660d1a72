//! Input file schemas.

use riemcover::covering::GeodesicBall;
use riemcover::differentiation::RadiusLadder;
use riemcover::measures::{AtomicMeasure, IntegrationMethod, Measure, Region};
use riemcover::{Error, ModelSpace, Point, Result};
use serde::Deserialize;
use serde_json::Value;
use std::path::{Path, PathBuf};

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Insert `space` into a JSON object that lacks one.
pub fn with_space(mut v: Value, space: Option<&ModelSpace>) -> Result<Value> {
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::InvalidInput("input must be a JSON object".into()))?;
    if !obj.contains_key("space") {
        let space = space.ok_or_else(|| {
            Error::InvalidInput("no space in the input file and no --space flag".into())
        })?;
        obj.insert("space".into(), serde_json::to_value(space)?);
    }
    Ok(v)
}

/// An inline measure or a CSV file of atoms (path relative to the input file).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Csv { csv: PathBuf },
    Inline(Measure),
}

impl MeasureSpec {
    pub fn resolve(self, base: &Path) -> Result<Measure> {
        match self {
            MeasureSpec::Inline(m) => Ok(m),
            MeasureSpec::Csv { csv } => {
                let path = if csv.is_absolute() {
                    csv
                } else {
                    base.join(csv)
                };
                Ok(Measure::Atomic(AtomicMeasure::load(&path)?))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    fn build(&self, space: &ModelSpace) -> Result<GeodesicBall> {
        let b = GeodesicBall::new(space.point(self.center.clone())?, self.radius);
        b.validate(space)?;
        Ok(b)
    }
}

/// `"everything"`, `{"box": {"lo": […], "hi": […], "bound": ball?}}` or
/// `{"ball": {"center": […], "radius": r}}`.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RegionSpec {
    #[default]
    Everything,
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default)]
        bound: Option<BallSpec>,
    },
    Ball(BallSpec),
}

impl RegionSpec {
    /// Boxes on flat spaces get the circumscribed ball as default bound.
    pub fn build(&self, space: &ModelSpace) -> Result<Region> {
        match self {
            RegionSpec::Everything => Ok(Region::everything()),
            RegionSpec::Ball(b) => Ok(Region::ball(space, b.build(space)?)),
            RegionSpec::Box { lo, hi, bound } => {
                if lo.len() != space.ambient_dim() || hi.len() != lo.len() {
                    return Err(Error::InvalidInput(
                        "box corners must have the ambient dimension".into(),
                    ));
                }
                let region = Region::coordinate_box(lo.clone(), hi.clone());
                match (bound, space) {
                    (Some(b), _) => Ok(region.with_bound(b.build(space)?)),
                    (None, ModelSpace::Euclidean { .. }) => {
                        let center: Vec<f64> =
                            lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                        let half = 0.5
                            * lo.iter()
                                .zip(hi)
                                .map(|(a, b)| (b - a) * (b - a))
                                .sum::<f64>()
                                .sqrt();
                        Ok(region
                            .with_bound(GeodesicBall::new(Point::new(center), half * (1.0 + 1e-9))))
                    }
                    _ => Ok(region),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentiateInput {
    pub space: Option<ModelSpace>,
    pub nu1: MeasureSpec,
    pub nu2: MeasureSpec,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub ladder: Option<RadiusLadder>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VitaliInput {
    pub space: Option<ModelSpace>,
    pub mu: MeasureSpec,
    #[serde(default)]
    pub region: RegionSpec,
    #[serde(default)]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
    #[serde(default)]
    pub clearance: Option<f64>,
    #[serde(default)]
    pub ladder: Option<RadiusLadder>,
}

fn default_rounds() -> usize {
    200
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RncheckInput {
    pub space: Option<ModelSpace>,
    pub nu1: MeasureSpec,
    pub nu2: MeasureSpec,
    #[serde(default)]
    pub region: RegionSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub ladder: Option<RadiusLadder>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.01
}

pub fn resolve_space(file: Option<ModelSpace>, flags: Option<ModelSpace>) -> Result<ModelSpace> {
    file.or(flags)
        .ok_or_else(|| Error::InvalidInput("no space in the input file and no --space flag".into()))
}

/// Apply --seed / --workers to a density measure's integration settings.
/// Monte Carlo evaluation (always used by `force_mc` paths) requires a seed.
pub fn configure(
    measure: &mut Measure,
    seed: Option<u64>,
    workers: Option<usize>,
    force_mc: bool,
) -> Result<()> {
    if let Measure::Density(d) = measure {
        let mc = force_mc || d.integration.method == IntegrationMethod::MonteCarlo;
        let constant = d.density.constant_value().is_some() && !force_mc;
        if mc && !constant {
            let seed = seed.ok_or_else(|| {
                Error::InvalidInput("Monte Carlo evaluation requires --seed".into())
            })?;
            d.integration.seed = seed;
        }
        if let Some(w) = workers {
            d.integration.workers = w;
        }
    }
    Ok(())
}

//! Locally finite measures as computable objects: weighted point clouds
//! (exact) and densities against Riemannian volume (quadrature or Monte
//! Carlo), with masses of open geodesic balls and bounded regions.

mod density;
mod integrate;

pub use density::DensityField;
pub use integrate::{
    monte_carlo, polar_quadrature, sphere_rule, MAX_QUADRATURE_POINTS, QUADRATURE_REL_TOL,
};

use crate::covering::{AuditRecord, GeodesicBall, Tally};
use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};
use crate::tolerance::Tolerances;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

/// A mass with an error bound; the bound is 0 exactly when the value is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassValue {
    pub value: f64,
    pub error_estimate: f64,
}

impl MassValue {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.error_estimate == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMethod {
    MonteCarlo,
    PolarQuadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationConfig {
    pub method: IntegrationMethod,
    pub sample_count: usize,
    pub quadrature_order: usize,
    pub seed: u64,
    /// Number of Monte Carlo streams; results are bitwise reproducible for a
    /// fixed value.
    pub workers: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            method: IntegrationMethod::PolarQuadrature,
            sample_count: 100_000,
            quadrature_order: 16,
            seed: 0,
            workers: 1,
        }
    }
}

impl IntegrationConfig {
    pub fn quadrature(order: usize) -> Self {
        Self {
            method: IntegrationMethod::PolarQuadrature,
            quadrature_order: order,
            ..Self::default()
        }
    }

    pub fn monte_carlo(sample_count: usize, seed: u64, workers: usize) -> Self {
        Self {
            method: IntegrationMethod::MonteCarlo,
            sample_count,
            seed,
            workers,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sample_count == 0 || self.quadrature_order == 0 || self.workers == 0 {
            return Err(Error::invalid(
                "sample_count, quadrature_order and workers must be positive",
            ));
        }
        Ok(())
    }
}

/// Finite weighted point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AtomicFile")]
pub struct AtomicMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct AtomicFile {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl TryFrom<AtomicFile> for AtomicMeasure {
    type Error = Error;

    fn try_from(f: AtomicFile) -> Result<Self> {
        AtomicMeasure::new(f.points, f.weights)
    }
}

impl AtomicMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidMeasure(format!(
                "weight {w} is not a finite nonnegative number"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Unit mass at one point.
    pub fn dirac(p: Point, weight: f64) -> Result<Self> {
        Self::new(vec![p], vec![weight])
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        // mass sums fold from +0.0; an empty float `sum` is -0.0
        self.weights.iter().fold(0.0, |a, w| a + w)
    }

    /// Check every point against the space.
    pub fn validate(&self, space: &ModelSpace) -> Result<()> {
        for p in &self.points {
            space.validate(p)?;
        }
        Ok(())
    }

    /// Same support, weights multiplied by h(point).
    pub fn reweighted<F: Fn(&Point, f64) -> f64>(&self, h: F) -> Result<Self> {
        let weights = self.atoms().map(|(p, w)| h(p, w)).collect();
        Self::new(self.points.clone(), weights)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        self.reweighted(|_, w| s * w)
    }

    /// Exact mass of a finite set, matching atoms by identical coordinates.
    pub fn mass_of_points(&self, set: &[Point]) -> f64 {
        self.atoms()
            .filter(|(p, _)| set.iter().any(|q| q.coords() == p.coords()))
            .map(|(_, w)| w)
            .fold(0.0, |a, w| a + w)
    }

    /// Smallest distance between two distinct atoms (∞ for fewer than two).
    pub fn separation(&self, space: &ModelSpace) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[..i] {
                let d = space.dist(p, q);
                if d > 0.0 {
                    best = best.min(d);
                }
            }
        }
        best
    }

    /// Rows `coord_1, …, coord_m, weight`; a non-numeric first row is taken
    /// as a header and lines starting with `#` are skipped.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(str::parse::<f64>).collect();
            let Ok(mut row) = parsed else {
                if line == 0 {
                    continue;
                }
                return Err(Error::InvalidMeasure(format!(
                    "row {} is not numeric",
                    line + 1
                )));
            };
            if row.len() < 2 {
                return Err(Error::InvalidMeasure(format!(
                    "row {} needs coordinates and a weight",
                    line + 1
                )));
            }
            weights.push(row.pop().unwrap_or_default());
            points.push(Point::new(row));
        }
        Self::new(points, weights)
    }

    pub fn to_csv_writer<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (p, weight) in self.atoms() {
            let mut row: Vec<String> = p.coords().iter().map(|x| format!("{x:?}")).collect();
            row.push(format!("{weight:?}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV for `.csv` files, JSON (`{"points": …, "weights": …}`) otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        {
            Self::from_csv_reader(file)
        } else {
            Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMeasure {
    pub density: DensityField,
    #[serde(default)]
    pub integration: IntegrationConfig,
}

impl DensityMeasure {
    pub fn new(density: DensityField, integration: IntegrationConfig) -> Self {
        Self {
            density,
            integration,
        }
    }

    /// Riemannian volume, integrated by quadrature.
    pub fn volume() -> Self {
        Self::new(DensityField::volume(), IntegrationConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    Atomic(AtomicMeasure),
    Density(DensityMeasure),
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atomic(m)
    }
}

impl From<DensityMeasure> for Measure {
    fn from(m: DensityMeasure) -> Self {
        Measure::Density(m)
    }
}

impl Measure {
    pub fn volume() -> Self {
        Measure::Density(DensityMeasure::volume())
    }

    pub fn as_atomic(&self) -> Option<&AtomicMeasure> {
        match self {
            Measure::Atomic(a) => Some(a),
            Measure::Density(_) => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Measure::Atomic(_))
    }

    /// Check the measure can be evaluated on `space`.
    pub fn validate(&self, space: &ModelSpace) -> Result<()> {
        match self {
            Measure::Atomic(a) => a.validate(space),
            Measure::Density(d) => {
                d.integration.validate()?;
                d.density.check_dim(space.ambient_dim())
            }
        }
    }

    /// Density at a point (None for atomic measures).
    pub fn density_at(&self, p: &Point) -> Option<Result<f64>> {
        match self {
            Measure::Atomic(_) => None,
            Measure::Density(d) => Some(d.density.eval(p.coords())),
        }
    }
}

/// Mass of the open ball: exact for atoms (strict ρ < r), quadrature or Monte
/// Carlo for densities. Constant densities use the closed-form volume.
pub fn ball_mass(measure: &Measure, space: &ModelSpace, ball: &GeodesicBall) -> Result<MassValue> {
    let inj = space.injectivity_radius(&ball.center)?;
    if !(ball.radius > 0.0) || ball.radius > inj {
        return Err(Error::domain(format!(
            "ball radius {} must lie in (0, {inj}]",
            ball.radius
        )));
    }
    match measure {
        Measure::Atomic(a) => Ok(MassValue::exact(
            a.atoms()
                .filter(|(p, _)| ball.contains(space, p))
                .map(|(_, w)| w)
                .fold(0.0, |a, w| a + w),
        )),
        Measure::Density(d) => {
            d.density.check_dim(space.ambient_dim())?;
            d.integration.validate()?;
            if let Some(c) = d.density.constant_value() {
                return Ok(MassValue::exact(c * space.ball_volume(ball.radius)?));
            }
            match d.integration.method {
                IntegrationMethod::PolarQuadrature => polar_quadrature(
                    space,
                    &d.density,
                    &ball.center,
                    ball.radius,
                    d.integration.quadrature_order,
                ),
                IntegrationMethod::MonteCarlo => {
                    monte_carlo(space, &ball.center, ball.radius, &d.integration, |p| {
                        d.density.eval(p.coords())
                    })
                }
            }
        }
    }
}

type Predicate = dyn Fn(&Point) -> bool + Send + Sync;

/// A membership predicate, optionally intersected with a bounding ball. The
/// bounding ball is required for density measures.
#[derive(Clone)]
pub struct Region {
    label: String,
    predicate: Arc<Predicate>,
    bound: Option<GeodesicBall>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .finish()
    }
}

impl Region {
    pub fn new<F>(label: impl Into<String>, predicate: F, bound: Option<GeodesicBall>) -> Self
    where
        F: Fn(&Point) -> bool + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            predicate: Arc::new(predicate),
            bound,
        }
    }

    pub fn everything() -> Self {
        Self::new("everything", |_| true, None)
    }

    pub fn nothing() -> Self {
        Self::new("nothing", |_| false, None)
    }

    /// Closed box lo ≤ x ≤ hi on ambient coordinates.
    pub fn coordinate_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let label = format!("box {lo:?}..{hi:?}");
        Self::new(
            label,
            move |p: &Point| {
                p.coords().len() == lo.len()
                    && p.coords()
                        .iter()
                        .zip(lo.iter().zip(&hi))
                        .all(|(x, (a, b))| a <= x && x <= b)
            },
            None,
        )
    }

    /// The open ball itself.
    pub fn ball(space: &ModelSpace, ball: GeodesicBall) -> Self {
        let (s, b) = (space.clone(), ball.clone());
        Self::new("ball", move |p: &Point| b.contains(&s, p), Some(ball))
    }

    pub fn with_bound(mut self, bound: GeodesicBall) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bound(&self) -> Option<&GeodesicBall> {
        self.bound.as_ref()
    }

    pub fn contains(&self, space: &ModelSpace, p: &Point) -> bool {
        (self.predicate)(p) && self.bound.as_ref().is_none_or(|b| b.contains(space, p))
    }
}

/// Mass of a region: exact weighted count for atoms, Monte Carlo over the
/// bounding ball with predicate rejection for densities.
pub fn region_mass(measure: &Measure, space: &ModelSpace, region: &Region) -> Result<MassValue> {
    match measure {
        Measure::Atomic(a) => Ok(MassValue::exact(
            a.atoms()
                .filter(|(p, _)| region.contains(space, p))
                .map(|(_, w)| w)
                .fold(0.0, |a, w| a + w),
        )),
        Measure::Density(d) => {
            let bound = region
                .bound()
                .ok_or_else(|| Error::invalid("density region mass needs a bounding ball"))?;
            bound.validate(space)?;
            d.density.check_dim(space.ambient_dim())?;
            d.integration.validate()?;
            let config = IntegrationConfig {
                method: IntegrationMethod::MonteCarlo,
                ..d.integration.clone()
            };
            monte_carlo(space, &bound.center, bound.radius, &config, |p| {
                if (region.predicate)(p) {
                    d.density.eval(p.coords())
                } else {
                    Ok(0.0)
                }
            })
        }
    }
}

/// Finite-resolution lower semicontinuity of y ↦ ν(D_r(y)) at x: the minimum
/// mass over the last half of `approach` must be at least ν(D_r(x)) minus the
/// summed error estimates.
pub fn semicontinuity_probe(
    measure: &Measure,
    space: &ModelSpace,
    r: f64,
    x: &Point,
    approach: &[Point],
    tol: &Tolerances,
) -> Result<AuditRecord> {
    let at_x = ball_mass(measure, space, &GeodesicBall::new(x.clone(), r))?;
    let tail_start = approach.len() / 2;
    let mut tail = Vec::with_capacity(approach.len() - tail_start);
    for y in &approach[tail_start..] {
        tail.push(ball_mass(measure, space, &GeodesicBall::new(y.clone(), r))?);
    }
    let mut t = Tally::default();
    let mut metrics = vec![("mass_at_x", at_x.value)];
    if let Some((pos, min)) = tail
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
    {
        let slack = at_x.error_estimate + min.error_estimate;
        let rhs = at_x.value - slack;
        t.check(min.value >= rhs, &[tail_start + pos], min.value, rhs);
        metrics.push(("tail_min", min.value));
        metrics.push(("tolerance", slack));
    }
    let clause = t.finish(
        "liminf",
        "min over the approach tail of nu(D_r(y)) >= nu(D_r(x)) - error",
    );
    let mut rec = AuditRecord::new("semicontinuity", tol, vec![clause]);
    for (k, v) in metrics {
        rec.metric(k, v);
    }
    rec.metric("radius", r);
    rec.metric("approach_len", approach.len() as f64);
    Ok(rec)
}

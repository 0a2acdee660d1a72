//! Constant-curvature model spaces and their closed-form geodesic geometry.
//!
//! Points are stored in an ambient embedding:
//!
//! | space        | ambient | constraint                                  |
//! |--------------|---------|---------------------------------------------|
//! | ℝⁿ           | ℝⁿ      | none                                        |
//! | Sⁿ (unit)    | ℝⁿ⁺¹    | ‖x‖ = 1                                     |
//! | Hⁿ           | ℝⁿ⁺¹    | ⟨x,x⟩_M = −1, x₀ > 0 (hyperboloid sheet)    |
//! | flat torus   | ℝⁿ      | 0 ≤ xᵢ < Pᵢ                                 |
//!
//! ⟨x,y⟩_M = −x₀y₀ + Σ xᵢyᵢ is the Minkowski form.

mod maps;
mod sampling;
mod volume;

pub use maps::{deformed_angle, deformed_cos};
pub use sampling::{sample_ball, BallSampler};
pub use volume::unit_ball_volume;

use crate::error::{Error, Result};
use crate::tolerance::{POINT_NORM_SLACK, TANGENT_SLACK};
use serde::{Deserialize, Serialize};

/// Largest supported intrinsic dimension.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpec", into = "SpaceSpec")]
pub enum ModelSpace {
    Euclidean { dim: usize },
    Sphere { dim: usize },
    Hyperbolic { dim: usize },
    FlatTorus { periods: Vec<f64> },
}

/// Wire form: `{"kind": "euclidean"|"sphere"|"hyperbolic"|"torus", "dim": n, "periods": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
}

impl TryFrom<SpaceSpec> for ModelSpace {
    type Error = Error;

    fn try_from(spec: SpaceSpec) -> Result<Self> {
        match spec.kind.as_str() {
            "euclidean" | "sphere" | "hyperbolic" => {
                let dim = spec.dim.ok_or_else(|| {
                    Error::invalid(format!("space kind {} needs \"dim\"", spec.kind))
                })?;
                match spec.kind.as_str() {
                    "euclidean" => ModelSpace::euclidean(dim),
                    "sphere" => ModelSpace::sphere(dim),
                    _ => ModelSpace::hyperbolic(dim),
                }
            }
            "torus" => {
                let periods = spec
                    .periods
                    .ok_or_else(|| Error::invalid("torus needs \"periods\""))?;
                if let Some(d) = spec.dim {
                    if d != periods.len() {
                        return Err(Error::invalid(format!(
                            "torus dim {d} does not match {} periods",
                            periods.len()
                        )));
                    }
                }
                ModelSpace::flat_torus(periods)
            }
            other => Err(Error::invalid(format!("unknown space kind {other:?}"))),
        }
    }
}

impl From<ModelSpace> for SpaceSpec {
    fn from(space: ModelSpace) -> Self {
        let dim = Some(space.dim());
        let kind = space.kind().to_string();
        let periods = match space {
            ModelSpace::FlatTorus { periods } => Some(periods),
            _ => None,
        };
        SpaceSpec { kind, dim, periods }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::invalid(format!(
            "dimension must lie in 1..={MAX_DIM}, got {dim}"
        )));
    }
    Ok(())
}

impl ModelSpace {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ModelSpace::Euclidean { dim })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ModelSpace::Sphere { dim })
    }

    pub fn hyperbolic(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ModelSpace::Hyperbolic { dim })
    }

    pub fn flat_torus(periods: Vec<f64>) -> Result<Self> {
        check_dim(periods.len())?;
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::invalid(format!(
                "torus periods must be positive and finite, got {periods:?}"
            )));
        }
        Ok(ModelSpace::FlatTorus { periods })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpace::Euclidean { .. } => "euclidean",
            ModelSpace::Sphere { .. } => "sphere",
            ModelSpace::Hyperbolic { .. } => "hyperbolic",
            ModelSpace::FlatTorus { .. } => "torus",
        }
    }

    /// Intrinsic dimension n.
    pub fn dim(&self) -> usize {
        match self {
            ModelSpace::Euclidean { dim }
            | ModelSpace::Sphere { dim }
            | ModelSpace::Hyperbolic { dim } => *dim,
            ModelSpace::FlatTorus { periods } => periods.len(),
        }
    }

    /// Length of the coordinate vector of a point.
    pub fn ambient_dim(&self) -> usize {
        match self {
            ModelSpace::Sphere { dim } | ModelSpace::Hyperbolic { dim } => dim + 1,
            _ => self.dim(),
        }
    }

    /// Constant sectional curvature.
    pub fn curvature(&self) -> f64 {
        match self {
            ModelSpace::Sphere { .. } => 1.0,
            ModelSpace::Hyperbolic { .. } => -1.0,
            _ => 0.0,
        }
    }

    /// Injectivity radius; the same at every point of a model space.
    pub fn inj_radius(&self) -> f64 {
        match self {
            ModelSpace::Euclidean { .. } | ModelSpace::Hyperbolic { .. } => f64::INFINITY,
            ModelSpace::Sphere { .. } => std::f64::consts::PI,
            ModelSpace::FlatTorus { periods } => {
                periods.iter().copied().fold(f64::INFINITY, f64::min) / 2.0
            }
        }
    }

    pub fn injectivity_radius(&self, p: &Point) -> Result<f64> {
        self.validate(p)?;
        Ok(self.inj_radius())
    }

    /// A distinguished point: the origin, the north pole (last coordinate 1),
    /// or the hyperboloid vertex (1, 0, …, 0).
    pub fn origin(&self) -> Point {
        let mut c = vec![0.0; self.ambient_dim()];
        match self {
            ModelSpace::Sphere { dim } => c[*dim] = 1.0,
            ModelSpace::Hyperbolic { .. } => c[0] = 1.0,
            _ => {}
        }
        Point(c)
    }

    /// Check the point invariants of this space.
    pub fn validate(&self, p: &Point) -> Result<()> {
        let c = p.coords();
        if c.len() != self.ambient_dim() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, {} space of dim {} needs {}",
                c.len(),
                self.kind(),
                self.dim(),
                self.ambient_dim()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("point has non-finite coordinates"));
        }
        match self {
            ModelSpace::Euclidean { .. } => Ok(()),
            ModelSpace::Sphere { .. } => {
                let n = dot(c, c).sqrt();
                if (n - 1.0).abs() > POINT_NORM_SLACK {
                    return Err(Error::invariant(format!(
                        "sphere point norm {n} differs from 1"
                    )));
                }
                Ok(())
            }
            ModelSpace::Hyperbolic { .. } => {
                let q = minkowski(c, c);
                let scale = c[0] * c[0];
                if c[0] <= 0.0 || (q + 1.0).abs() > POINT_NORM_SLACK * scale.max(1.0) {
                    return Err(Error::invariant(format!(
                        "hyperboloid point has Minkowski norm {q} and time component {}",
                        c[0]
                    )));
                }
                Ok(())
            }
            ModelSpace::FlatTorus { periods } => {
                for (x, p) in c.iter().zip(periods) {
                    if *x < 0.0 || *x >= *p {
                        return Err(Error::invariant(format!(
                            "torus coordinate {x} outside [0, {p})"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Build a validated point from raw coordinates.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        let p = Point(coords);
        self.validate(&p)?;
        Ok(p)
    }

    /// Map near-valid coordinates onto the space: normalise onto the sphere,
    /// lift onto the hyperboloid from the spatial part, wrap torus coordinates.
    pub fn project(&self, mut c: Vec<f64>) -> Point {
        match self {
            ModelSpace::Euclidean { .. } => {}
            ModelSpace::Sphere { .. } => {
                let n = dot(&c, &c).sqrt();
                c.iter_mut().for_each(|x| *x /= n);
            }
            ModelSpace::Hyperbolic { .. } => {
                let s: f64 = c[1..].iter().map(|x| x * x).sum();
                c[0] = (1.0 + s).sqrt();
            }
            ModelSpace::FlatTorus { periods } => {
                for (x, p) in c.iter_mut().zip(periods) {
                    *x = wrap(*x, *p);
                }
            }
        }
        Point(c)
    }

    /// Hyperboloid point whose spatial coordinates are `spatial`.
    pub fn hyperboloid_lift(&self, spatial: &[f64]) -> Result<Point> {
        if !matches!(self, ModelSpace::Hyperbolic { .. }) || spatial.len() != self.dim() {
            return Err(Error::invalid(
                "hyperboloid lift needs a hyperbolic space and n spatial coordinates",
            ));
        }
        let mut c = Vec::with_capacity(spatial.len() + 1);
        c.push(0.0);
        c.extend_from_slice(spatial);
        Ok(self.project(c))
    }

    /// Metric inner product of two tangent vectors (ambient components).
    pub fn metric_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            ModelSpace::Hyperbolic { .. } => minkowski(u, v),
            _ => dot(u, v),
        }
    }

    pub fn metric_norm(&self, v: &[f64]) -> f64 {
        self.metric_inner(v, v).max(0.0).sqrt()
    }
}

pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let w = x.rem_euclid(period);
    if w >= period {
        0.0
    } else {
        w
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + dot(&a[1..], &b[1..])
}

/// A point of a model space, in ambient coordinates. Serialises as a JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// A tangent vector at `base`, in ambient components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(space: &ModelSpace, base: Point, components: Vec<f64>) -> Result<Self> {
        space.validate(&base)?;
        if components.len() != space.ambient_dim() {
            return Err(Error::invalid(
                "tangent vector has the wrong number of components",
            ));
        }
        let v = TangentVector { base, components };
        let normal = match space {
            ModelSpace::Sphere { .. } => dot(v.base.coords(), &v.components),
            ModelSpace::Hyperbolic { .. } => minkowski(v.base.coords(), &v.components),
            _ => 0.0,
        };
        let scale = space.metric_norm(&v.components).max(1.0) * v.base.coords()[0].abs().max(1.0);
        if normal.abs() > TANGENT_SLACK * scale {
            return Err(Error::invariant(format!(
                "vector is not tangent at its base (normal component {normal})"
            )));
        }
        Ok(v)
    }

    /// Length under the metric at the base point.
    pub fn norm(&self, space: &ModelSpace) -> f64 {
        space.metric_norm(&self.components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_json_round_trip() {
        let s: ModelSpace =
            serde_json::from_str(r#"{"kind":"torus","periods":[2.0,6.0]}"#).unwrap();
        assert_eq!(
            s,
            ModelSpace::FlatTorus {
                periods: vec![2.0, 6.0]
            }
        );
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"kind":"torus","dim":2,"periods":[2.0,6.0]}"#);
        let h: ModelSpace = serde_json::from_str(r#"{"kind":"hyperbolic","dim":2}"#).unwrap();
        assert_eq!(h.ambient_dim(), 3);
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(serde_json::from_str::<ModelSpace>(r#"{"kind":"sphere"}"#).is_err());
        assert!(serde_json::from_str::<ModelSpace>(r#"{"kind":"klein","dim":2}"#).is_err());
        assert!(ModelSpace::euclidean(0).is_err());
        assert!(ModelSpace::euclidean(9).is_err());
        assert!(ModelSpace::flat_torus(vec![1.0, 0.0]).is_err());
        assert!(ModelSpace::flat_torus(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn point_invariants() {
        let s2 = ModelSpace::sphere(2).unwrap();
        assert!(s2.point(vec![0.0, 0.0, 1.0]).is_ok());
        assert!(s2.point(vec![0.0, 0.0, 1.001]).is_err());
        assert!(s2.point(vec![0.0, 1.0]).is_err());

        let h2 = ModelSpace::hyperbolic(2).unwrap();
        assert!(h2.point(vec![1.0, 0.0, 0.0]).is_ok());
        assert!(h2.point(vec![-1.0, 0.0, 0.0]).is_err());
        let lifted = h2.hyperboloid_lift(&[3.0, -4.0]).unwrap();
        assert!(h2.validate(&lifted).is_ok());

        let t = ModelSpace::flat_torus(vec![1.0, 2.0]).unwrap();
        assert!(t.point(vec![0.5, 1.99]).is_ok());
        assert!(t.point(vec![1.0, 0.0]).is_err());
        assert_eq!(t.project(vec![-0.25, 4.5]).coords(), &[0.75, 0.5]);
    }

    #[test]
    fn tangent_vector_must_be_orthogonal() {
        let s2 = ModelSpace::sphere(2).unwrap();
        let np = s2.origin();
        assert!(TangentVector::new(&s2, np.clone(), vec![0.3, 0.1, 0.0]).is_ok());
        assert!(TangentVector::new(&s2, np, vec![0.3, 0.1, 0.2]).is_err());
        let h2 = ModelSpace::hyperbolic(2).unwrap();
        let p = h2.hyperboloid_lift(&[0.5, 0.0]).unwrap();
        // (sinh-direction) tangent: Minkowski-orthogonal to p
        let v = vec![p.coords()[1], p.coords()[0], 0.0];
        let tv = TangentVector::new(&h2, p, v).unwrap();
        assert!((tv.norm(&h2) - 1.0).abs() < 1e-12);
    }
}

//! Greedy Besicovitch selection of geodesic balls, the overlap sets of the
//! selected sequence, audits of every inequality the bounded-overlap argument
//! relies on, and the first-fit coloring into pairwise-disjoint subfamilies.

mod audit;
mod coloring;
mod overlap;
mod select;

pub(crate) use audit::Tally;
pub use audit::{
    audit_bounds, audit_claims, audit_selection, packing_ratio, theta_floor, AuditRecord,
    ClauseResult, Witness,
};
pub use coloring::{color, multiplicity, verify_coloring, Coloring};
pub use overlap::{overlap_sets, OverlapReport};
pub use select::{greedy_select, Selection};

use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Open geodesic ball D_r(center).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicBall {
    pub center: Point,
    pub radius: f64,
}

impl GeodesicBall {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Strict membership: ρ(center, p) < radius.
    pub fn contains(&self, space: &ModelSpace, p: &Point) -> bool {
        space.dist(&self.center, p) < self.radius
    }

    /// Open balls below half the injectivity radius meet iff ρ < r₁ + r₂.
    pub fn intersects(&self, space: &ModelSpace, other: &GeodesicBall) -> bool {
        space.dist(&self.center, &other.center) < self.radius + other.radius
    }

    /// k-proper: k·radius is at most the injectivity radius.
    pub fn is_proper(&self, space: &ModelSpace, k: f64) -> bool {
        k * self.radius <= space.inj_radius()
    }

    pub fn validate(&self, space: &ModelSpace) -> Result<()> {
        space.validate(&self.center)?;
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!(
                "ball radius {} must be positive",
                self.radius
            )));
        }
        Ok(())
    }
}

/// A finite family of open 4-proper geodesic balls with bounded center set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyFile")]
pub struct BallFamily {
    space: ModelSpace,
    balls: Vec<GeodesicBall>,
    /// Diameter of the center set; `None` on the sphere where boundedness is automatic.
    #[serde(skip_serializing_if = "Option::is_none")]
    center_diameter: Option<f64>,
}

#[derive(Deserialize)]
struct FamilyFile {
    space: ModelSpace,
    balls: Vec<GeodesicBall>,
}

impl TryFrom<FamilyFile> for BallFamily {
    type Error = Error;

    fn try_from(f: FamilyFile) -> Result<Self> {
        BallFamily::new(f.space, f.balls)
    }
}

impl BallFamily {
    pub fn new(space: ModelSpace, balls: Vec<GeodesicBall>) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::invalid("ball family is empty"));
        }
        for (i, b) in balls.iter().enumerate() {
            b.validate(&space)
                .map_err(|e| Error::invalid(format!("ball {i}: {e}")))?;
            if !b.is_proper(&space, 4.0) {
                return Err(Error::invalid(format!(
                    "ball {i} with radius {} is not 4-proper (injectivity radius {})",
                    b.radius,
                    space.inj_radius()
                )));
            }
        }
        let center_diameter = match space {
            ModelSpace::Sphere { .. } => None,
            _ => {
                let d = (0..balls.len())
                    .into_par_iter()
                    .map(|i| {
                        balls[i + 1..]
                            .iter()
                            .map(|b| space.dist(&balls[i].center, &b.center))
                            .fold(0.0, f64::max)
                    })
                    .reduce(|| 0.0, f64::max);
                if !d.is_finite() {
                    return Err(Error::invalid("center set is unbounded"));
                }
                Some(d)
            }
        };
        Ok(Self {
            space,
            balls,
            center_diameter,
        })
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn balls(&self) -> &[GeodesicBall] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn center_diameter(&self) -> Option<f64> {
        self.center_diameter
    }

    /// R = sup of all radii.
    pub fn max_radius(&self) -> f64 {
        self.balls.iter().map(|b| b.radius).fold(0.0, f64::max)
    }
}

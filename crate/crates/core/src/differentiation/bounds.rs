//! Audit of the density-bound inequalities on finite atomic supports.

use super::{ratio_ladder, RadiusLadder};
use crate::covering::{AuditRecord, Tally};
use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};
use crate::measures::{AtomicMeasure, Measure};
use crate::tolerance::Tolerances;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    /// Points with lower derivative ≤ c satisfy ν₂ ≤ c·ν₁.
    Lower,
    /// Points with upper derivative ≥ c satisfy ν₂ ≥ c·ν₁.
    Upper,
}

/// Classify `points` by the lower/upper limits of their ratio ladders (min
/// and max over the ladder's second half) and check the weighted-sum
/// inequality on the selected subset, with relative slack `exact_slack`.
/// Points where some ball has zero ν₁-mass get both limits +∞.
///
/// The `resolution` clause fails when the ladder floor is not below the
/// smallest separation between atoms, since the classification is then not
/// determined by single atoms.
#[allow(clippy::too_many_arguments)]
pub fn density_bound_audit(
    nu1: &AtomicMeasure,
    nu2: &AtomicMeasure,
    space: &ModelSpace,
    points: &[Point],
    c: f64,
    side: BoundSide,
    ladder: &RadiusLadder,
    tol: &Tolerances,
) -> Result<AuditRecord> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!(
            "bound constant {c} must be positive"
        )));
    }
    let m1 = Measure::Atomic(nu1.clone());
    let m2 = Measure::Atomic(nu2.clone());
    let atoms = AtomicMeasure::new(
        nu1.points().iter().chain(nu2.points()).cloned().collect(),
        vec![0.0; nu1.len() + nu2.len()],
    )?;
    let separation = atoms.separation(space);

    let mut subset = Vec::new();
    for x in points {
        let entries = ratio_ladder(&m1, &m2, space, x, ladder)?;
        let tail = &entries[entries.len() / 2..];
        let (lower, upper) = if tail.iter().any(|e| e.ratio.is_none()) {
            (f64::INFINITY, f64::INFINITY)
        } else {
            tail.iter()
                .filter_map(|e| e.ratio)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                    (lo.min(t), hi.max(t))
                })
        };
        let selected = match side {
            BoundSide::Lower => lower <= c,
            BoundSide::Upper => upper >= c,
        };
        if selected {
            subset.push(x.clone());
        }
    }
    let mass1 = nu1.mass_of_points(&subset);
    let mass2 = nu2.mass_of_points(&subset);
    let slack = tol.exact_slack * c * mass1;
    let mut bound = Tally::default();
    let (statement, ok, lhs, rhs) = match side {
        BoundSide::Lower => (
            "nu2(S) <= c nu1(S) on S = {lower derivative <= c}",
            mass2 <= c * mass1 + slack,
            mass2,
            c * mass1 + slack,
        ),
        BoundSide::Upper => (
            "nu2(S) >= c nu1(S) on S = {upper derivative >= c}",
            mass2 >= c * mass1 - slack,
            c * mass1 - slack,
            mass2,
        ),
    };
    bound.check(ok, &[], lhs, rhs);
    let mut resolution = Tally::default();
    resolution.check(ladder.floor() < separation, &[], ladder.floor(), separation);

    let clauses = vec![
        bound.finish("bound", statement),
        resolution.finish("resolution", "ladder floor below the atom separation"),
    ];
    let mut rec = AuditRecord::new("density_bound", tol, clauses);
    rec.metric("c", c);
    rec.metric("subset_size", subset.len() as f64);
    rec.metric("nu1_subset", mass1);
    rec.metric("nu2_subset", mass2);
    rec.metric("ladder_floor", ladder.floor());
    rec.metric("atom_separation", separation);
    if ladder.floor() >= separation {
        rec.notes
            .push("inconclusive: ladder floor is not below the atom separation".into());
    }
    Ok(rec)
}

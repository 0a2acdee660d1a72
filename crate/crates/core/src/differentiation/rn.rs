//! Check that integrating the estimated derivative against ν₁ over a region
//! reproduces ν₂ of the region.

use super::{differentiate, DensityEstimate, RadiusLadder, Status};
use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};
use crate::measures::{region_mass, MassValue, Measure, Region};
use crate::tolerance::Tolerances;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnReport {
    /// ∫_A D̃ dν₁ (exact for atomic ν₁, a weighted grid sum otherwise).
    pub integral: f64,
    /// ν₂(A).
    pub target: MassValue,
    /// |integral − ν₂(A)| / max(ν₂(A), ε).
    pub relative_error: f64,
    pub points_evaluated: usize,
    /// Points that did not converge and so contribute 0.
    pub non_converged: usize,
    /// Set when ν₂(A) = 0 but the integral is not.
    pub zero_target_failure: bool,
}

const EPS: f64 = 1e-300;

/// Midpoints of a regular grid on the box [lo, hi] with the cell volume as
/// weight (Euclidean coordinates).
pub fn cell_grid(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Vec<(Point, f64)>> {
    if lo.len() != hi.len() || lo.len() != counts.len() || lo.is_empty() {
        return Err(Error::invalid(
            "grid bounds and counts must have the same positive length",
        ));
    }
    if counts.contains(&0) || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
        return Err(Error::invalid("grid needs hi > lo and positive counts"));
    }
    let h: Vec<f64> = lo
        .iter()
        .zip(hi)
        .zip(counts)
        .map(|((a, b), &n)| (b - a) / n as f64)
        .collect();
    let weight: f64 = h.iter().product();
    let total: usize = counts.iter().product();
    Ok((0..total)
        .map(|mut idx| {
            let coords = lo
                .iter()
                .zip(&h)
                .zip(counts)
                .map(|((a, h), &n)| {
                    let i = idx % n;
                    idx /= n;
                    a + (i as f64 + 0.5) * h
                })
                .collect();
            (Point::new(coords), weight)
        })
        .collect())
}

/// Compare ∫_A D̃ dν₁ with ν₂(A).
///
/// Atomic ν₁: the integral is Σ D̃(pᵢ)·w₁ᵢ over atoms in the region and
/// `grid` is ignored. Density ν₁: `grid` supplies weighted points
/// (point, volume weight) and the integral is Σ D̃(g)·ρ₁(g)·w_g over grid
/// points in the region. Non-converged points contribute 0.
pub fn rn_identity_check(
    nu1: &Measure,
    nu2: &Measure,
    space: &ModelSpace,
    region: &Region,
    grid: Option<&[(Point, f64)]>,
    ladder: &RadiusLadder,
    tol: &Tolerances,
) -> Result<(RnReport, Vec<DensityEstimate>)> {
    nu1.validate(space)?;
    nu2.validate(space)?;
    let weighted: Vec<(Point, f64)> = match nu1 {
        Measure::Atomic(a) => a
            .atoms()
            .filter(|(p, _)| region.contains(space, p))
            .map(|(p, w)| (p.clone(), w))
            .collect(),
        Measure::Density(d) => {
            let grid = grid.ok_or_else(|| {
                Error::invalid("a density reference measure needs an evaluation grid")
            })?;
            grid.iter()
                .filter(|(p, _)| region.contains(space, p))
                .map(|(p, w)| Ok((p.clone(), w * d.density.eval(p.coords())?)))
                .collect::<Result<_>>()?
        }
    };
    let estimates: Vec<DensityEstimate> = weighted
        .par_iter()
        .map(|(p, _)| differentiate(nu1, nu2, space, p, ladder, tol))
        .collect::<Result<_>>()?;
    let integral: f64 = estimates
        .iter()
        .zip(&weighted)
        .map(|(e, (_, w))| e.extrapolated * w)
        .fold(0.0, |a, w| a + w);
    let non_converged = estimates
        .iter()
        .filter(|e| e.status != Status::Converged)
        .count();
    let target = region_mass(nu2, space, region)?;
    let relative_error = (integral - target.value).abs() / target.value.max(EPS);
    Ok((
        RnReport {
            integral,
            target,
            relative_error,
            points_evaluated: weighted.len(),
            non_converged,
            zero_target_failure: target.value == 0.0 && integral != 0.0,
        },
        estimates,
    ))
}

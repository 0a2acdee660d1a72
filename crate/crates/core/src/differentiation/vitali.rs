//! Disjoint-ball fill of an atomic measure inside a region, by repeated
//! greedy selection, coloring and extraction of the best color family.

use super::RadiusLadder;
use crate::covering::{
    color, greedy_select, overlap_sets, AuditRecord, BallFamily, GeodesicBall, Tally,
};
use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};
use crate::measures::{sphere_rule, AtomicMeasure, Region};
use crate::tolerance::Tolerances;
use serde::{Deserialize, Serialize};

/// Balls D_r(a) for every center a and every ladder radius r, thinned so
/// that no atom sits in the shell r ≤ ρ(a, atom) < r + clearance. The
/// clearance keeps atoms just outside a removed ball reachable by the
/// smallest rung in later rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyGenerator {
    pub centers: Vec<Point>,
    pub ladder: RadiusLadder,
    pub clearance: f64,
}

impl FamilyGenerator {
    /// Clearance defaults to twice the ladder floor.
    pub fn new(centers: Vec<Point>, ladder: RadiusLadder) -> Self {
        let clearance = 2.0 * ladder.floor();
        Self {
            centers,
            ladder,
            clearance,
        }
    }

    /// Centered at the atoms of `mu`.
    pub fn on_support(mu: &AtomicMeasure, ladder: RadiusLadder) -> Self {
        Self::new(mu.points().to_vec(), ladder)
    }

    pub fn with_clearance(mut self, clearance: f64) -> Self {
        self.clearance = clearance;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillResult {
    pub disjoint_balls: Vec<GeodesicBall>,
    pub initial_mass: f64,
    /// Residual mass after each round.
    pub residual_per_round: Vec<f64>,
    /// (1 − 1/(2·l_used))^p · initial mass for p = 1, 2, ….
    pub envelope: Vec<f64>,
    pub l_used: usize,
    pub colors_per_round: Vec<usize>,
    pub balls_per_round: Vec<usize>,
    /// Residual mass with no admissible ball when the fill stopped.
    pub blocked_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl FillResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_per_round
            .last()
            .copied()
            .unwrap_or(self.initial_mass)
    }

    pub fn rounds(&self) -> usize {
        self.residual_per_round.len()
    }

    /// Disjointness (exact), containment in the initial region (center and
    /// boundary samples), monotone residuals and the decay envelope.
    pub fn audit(&self, space: &ModelSpace, region: &Region, tol: &Tolerances) -> AuditRecord {
        let balls = &self.disjoint_balls;
        let mut disjoint = Tally::default();
        for j in 0..balls.len() {
            for i in 0..j {
                let d = space.dist(&balls[i].center, &balls[j].center);
                let sum = balls[i].radius + balls[j].radius;
                disjoint.check(d >= sum, &[i, j], sum, d);
            }
        }
        let mut inside = Tally::default();
        for (i, b) in balls.iter().enumerate() {
            let ok = boundary_samples(space, b)
                .iter()
                .all(|p| region.contains(space, p));
            inside.check(ok, &[i], 0.0, 0.0);
        }
        let mut monotone = Tally::default();
        let mut prev = self.initial_mass;
        for (p, &r) in self.residual_per_round.iter().enumerate() {
            monotone.check(r <= prev, &[p], r, prev);
            prev = r;
        }
        let mut envelope = Tally::default();
        for (p, (&r, &e)) in self
            .residual_per_round
            .iter()
            .zip(&self.envelope)
            .enumerate()
        {
            let rhs = e + tol.exact_slack * self.initial_mass;
            envelope.check(r <= rhs, &[p], r, rhs);
        }
        let clauses = vec![
            disjoint.finish(
                "disjoint",
                "rho(c_i, c_j) >= r_i + r_j for all extracted balls",
            ),
            inside.finish(
                "inside",
                "every extracted ball lies in the initial region (sampled)",
            ),
            monotone.finish(
                "monotone",
                "residual mass is non-increasing (witness = round)",
            ),
            envelope.finish(
                "envelope",
                "residual after round p <= (1 - 1/(2 L_used))^p initial",
            ),
        ];
        let mut rec = AuditRecord::new("vitali", tol, clauses);
        rec.metric("initial_mass", self.initial_mass);
        rec.metric("final_residual", self.final_residual());
        rec.metric("rounds", self.rounds() as f64);
        rec.metric("l_used", self.l_used as f64);
        rec.metric("balls", balls.len() as f64);
        rec.metric("blocked_mass", self.blocked_mass);
        if let Some(d) = &self.diagnostic {
            rec.notes.push(d.clone());
        }
        rec
    }
}

/// Deterministic points on the closed ball: the center and at least 64·n
/// points of the boundary sphere (64 points along the segment in dimension 1).
pub fn boundary_samples(space: &ModelSpace, ball: &GeodesicBall) -> Vec<Point> {
    let n = space.dim();
    let basis = space.tangent_basis(&ball.center);
    let along = |u: &[f64], t: f64| {
        let mut v = vec![0.0; space.ambient_dim()];
        for (e, ui) in basis.iter().zip(u) {
            v.iter_mut().zip(e).for_each(|(vi, ei)| *vi += t * ui * ei);
        }
        space.exp_map(&ball.center, &v)
    };
    let mut out = vec![ball.center.clone()];
    if n == 1 {
        for k in 0..64 {
            let t = ball.radius * (2.0 * k as f64 / 63.0 - 1.0);
            out.push(along(&[1.0], t));
        }
        return out;
    }
    let mut p: usize = 1;
    while 2 * p.pow(n as u32 - 1) < 64 * n {
        p += 1;
    }
    out.extend(sphere_rule(n, p).iter().map(|(u, _)| along(u, ball.radius)));
    out
}

fn disjoint_from(space: &ModelSpace, center: &Point, r: f64, removed: &[GeodesicBall]) -> bool {
    removed
        .iter()
        .all(|b| space.dist(center, &b.center) >= r + b.radius)
}

/// Extract disjoint balls from the generated family until the μ-mass left in
/// the region is zero, no ball fits, or `max_rounds` is reached.
///
/// Each round keeps the balls inside the current region (the initial region
/// minus the open balls removed so far), runs the greedy selection and the
/// coloring, takes the color family capturing the most residual mass, and
/// appends the fewest of its balls (largest captures first) that capture at
/// least half of it.
pub fn vitali_fill(
    generator: &FamilyGenerator,
    mu: &AtomicMeasure,
    space: &ModelSpace,
    region: &Region,
    max_rounds: usize,
) -> Result<FillResult> {
    generator.ladder.check(space)?;
    mu.validate(space)?;
    for c in &generator.centers {
        space.validate(c)?;
    }
    if !(generator.clearance >= 0.0) {
        return Err(Error::invalid("clearance must be nonnegative"));
    }

    // candidate radii per center, largest first, fixed across rounds
    let candidates: Vec<Vec<f64>> = generator
        .centers
        .iter()
        .map(|c| {
            if !region.contains(space, c) {
                return Vec::new();
            }
            generator
                .ladder
                .radii()
                .into_iter()
                .filter(|&r| {
                    mu.points().iter().all(|a| {
                        let d = space.dist(c, a);
                        !(d >= r && d < r + generator.clearance)
                    })
                })
                .filter(|&r| {
                    let ball = GeodesicBall::new(c.clone(), r);
                    boundary_samples(space, &ball)
                        .iter()
                        .all(|p| region.contains(space, p))
                })
                .collect()
        })
        .collect();

    let mut removed: Vec<GeodesicBall> = Vec::new();
    let live = |removed: &[GeodesicBall], p: &Point| {
        region.contains(space, p) && removed.iter().all(|b| !b.contains(space, p))
    };
    let residual = |removed: &[GeodesicBall]| -> f64 {
        mu.atoms()
            .filter(|(p, _)| live(removed, p))
            .map(|(_, w)| w)
            .fold(0.0, |a, w| a + w)
    };

    let initial_mass = residual(&removed);
    let mut out = FillResult {
        disjoint_balls: Vec::new(),
        initial_mass,
        residual_per_round: Vec::new(),
        envelope: Vec::new(),
        l_used: 1,
        colors_per_round: Vec::new(),
        balls_per_round: Vec::new(),
        blocked_mass: 0.0,
        diagnostic: None,
    };
    let mut current = initial_mass;

    for _ in 0..max_rounds {
        if current == 0.0 {
            break;
        }
        let balls: Vec<GeodesicBall> = generator
            .centers
            .iter()
            .zip(&candidates)
            .filter(|(c, _)| live(&removed, c))
            .filter_map(|(c, radii)| {
                radii
                    .iter()
                    .find(|&&r| disjoint_from(space, c, r, &removed))
                    .map(|&r| GeodesicBall::new(c.clone(), r))
            })
            .collect();
        if balls.is_empty() {
            out.diagnostic = Some(format!(
                "no admissible ball above the ladder floor {}; residual mass {current} remains",
                generator.ladder.floor()
            ));
            break;
        }
        let family = BallFamily::new(space.clone(), balls)?;
        let selection = greedy_select(&family);
        let report = overlap_sets(&selection);
        let coloring = color(&selection, &report);

        let capture: Vec<f64> = selection
            .balls()
            .map(|b| {
                mu.atoms()
                    .filter(|(p, _)| b.contains(space, p) && live(&removed, p))
                    .map(|(_, w)| w)
                    .fold(0.0, |a, w| a + w)
            })
            .collect();
        let totals: Vec<f64> = coloring
            .families
            .iter()
            .map(|fam| fam.iter().map(|&k| capture[k]).fold(0.0, |a, w| a + w))
            .collect();
        let (best, best_total) =
            totals
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (c, t)| if t > acc.1 { (c, t) } else { acc },
                );
        if !(best_total > 0.0) {
            out.diagnostic = Some(format!(
                "selected balls capture no residual mass; {current} remains"
            ));
            break;
        }
        let mut order = coloring.families[best].clone();
        order.sort_by(|&a, &b| capture[b].total_cmp(&capture[a]).then(a.cmp(&b)));
        let mut taken = 0.0;
        let mut added = 0;
        for k in order {
            if 2.0 * taken >= best_total {
                break;
            }
            taken += capture[k];
            removed.push(selection.ball(k).clone());
            added += 1;
        }
        current = residual(&removed);
        out.residual_per_round.push(current);
        out.colors_per_round.push(coloring.colors());
        out.balls_per_round.push(added);
    }

    if current > 0.0 && out.diagnostic.is_none() && out.residual_per_round.len() == max_rounds {
        out.diagnostic = Some(format!(
            "stopped after {max_rounds} rounds with residual mass {current}"
        ));
    }
    // live atoms at which no generated ball fits any more
    out.blocked_mass = mu
        .atoms()
        .filter(|(p, _)| live(&removed, p))
        .filter(|(p, _)| {
            !generator.centers.iter().zip(&candidates).any(|(c, radii)| {
                c.coords() == p.coords()
                    && radii.iter().any(|&r| disjoint_from(space, c, r, &removed))
            })
        })
        .map(|(_, w)| w)
        .fold(0.0, |a, w| a + w);
    out.l_used = out.colors_per_round.iter().copied().max().unwrap_or(1);
    let q = 1.0 - 1.0 / (2.0 * out.l_used as f64);
    out.envelope = (1..=out.residual_per_round.len())
        .map(|p| q.powi(p as i32) * initial_mass)
        .collect();
    out.disjoint_balls = removed;
    Ok(out)
}

//! First-fit coloring of a selection into pairwise-disjoint families.

use super::audit::{AuditRecord, Tally};
use super::{OverlapReport, Selection};
use crate::geometry::Point;
use crate::tolerance::Tolerances;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `sigma[k]` is the 1-based color of selection step k; `families[c]` lists the
/// 0-based steps with color c + 1, in selection order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    pub sigma: Vec<usize>,
    pub families: Vec<Vec<usize>>,
}

impl Coloring {
    pub fn colors(&self) -> usize {
        self.families.len()
    }
}

/// Ball k receives the smallest color not used by any j ∈ I_k.
pub fn color(selection: &Selection, report: &OverlapReport) -> Coloring {
    let mut sigma = Vec::with_capacity(selection.len());
    let mut families: Vec<Vec<usize>> = Vec::new();
    let mut taken = Vec::new();
    for k in 0..selection.len() {
        taken.clear();
        taken.resize(families.len() + 1, false);
        for &j in &report.intersecting[k] {
            taken[sigma[j] - 1] = true;
        }
        let c = taken.iter().position(|t| !t).unwrap_or(families.len());
        if c == families.len() {
            families.push(Vec::new());
        }
        families[c].push(k);
        sigma.push(c + 1);
    }
    Coloring { sigma, families }
}

/// Clauses:
/// * `disjoint` – ρ(a_i, a_j) ≥ r_i + r_j for every pair inside a family.
/// * `single_color` – every step appears in exactly one family, matching sigma.
/// * `color_bound` – number of colors ≤ max_k #I_k + 1.
/// * `coverage` – every center of the family lies in a ball of some color.
pub fn verify_coloring(
    selection: &Selection,
    report: &OverlapReport,
    coloring: &Coloring,
    tol: &Tolerances,
) -> AuditRecord {
    let space = selection.family.space();
    let balls: Vec<_> = selection.balls().collect();

    let disjoint = coloring
        .families
        .par_iter()
        .map(|fam| {
            let mut t = Tally::default();
            for (x, &i) in fam.iter().enumerate() {
                for &j in &fam[x + 1..] {
                    if i >= balls.len() || j >= balls.len() {
                        t.check(false, &[i, j], f64::NAN, f64::NAN);
                        continue;
                    }
                    let d = space.dist(&balls[i].center, &balls[j].center);
                    let sum = balls[i].radius + balls[j].radius;
                    t.check(d >= sum, &[i, j], sum, d);
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    let mut single = Tally::default();
    let mut seen = vec![0usize; balls.len()];
    for (c, fam) in coloring.families.iter().enumerate() {
        for &k in fam {
            if k < seen.len() {
                seen[k] += 1;
                let ok = coloring.sigma.get(k) == Some(&(c + 1));
                single.check(
                    ok,
                    &[k],
                    coloring.sigma.get(k).copied().unwrap_or(0) as f64,
                    (c + 1) as f64,
                );
            } else {
                single.check(false, &[k], k as f64, balls.len() as f64);
            }
        }
    }
    for (k, &n) in seen.iter().enumerate() {
        single.check(n == 1, &[k], n as f64, 1.0);
    }

    let mut bound = Tally::default();
    let limit = report.max_intersecting + 1;
    bound.check(
        coloring.colors() <= limit,
        &[],
        coloring.colors() as f64,
        limit as f64,
    );

    let colored: Vec<usize> = coloring
        .families
        .iter()
        .flatten()
        .copied()
        .filter(|&k| k < balls.len())
        .collect();
    let mut coverage = Tally::default();
    for (i, ball) in selection.family.balls().iter().enumerate() {
        let hit = colored
            .iter()
            .any(|&k| balls[k].contains(space, &ball.center));
        coverage.check(hit, &[i], 0.0, 0.0);
    }

    let clauses = vec![
        disjoint.finish("disjoint", "rho(a_i, a_j) >= r_i + r_j within each family"),
        single.finish("single_color", "every chosen ball has exactly one color"),
        bound.finish("color_bound", "colors <= max_k #I_k + 1"),
        coverage.finish(
            "coverage",
            "every center lies in a colored ball (witness = family index + 1)",
        ),
    ];
    let mut rec = AuditRecord::new("coloring", tol, clauses);
    rec.metric("colors", coloring.colors() as f64);
    rec.metric("max_intersecting", report.max_intersecting as f64);
    rec
}

/// Largest number of chosen balls containing any one probe.
pub fn multiplicity(selection: &Selection, probes: &[Point]) -> usize {
    let space = selection.family.space();
    let balls: Vec<_> = selection.balls().collect();
    probes
        .par_iter()
        .map(|p| balls.iter().filter(|b| b.contains(space, p)).count())
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{greedy_select, overlap_sets, BallFamily, GeodesicBall};
    use crate::geometry::ModelSpace;

    fn run(centers: &[f64], r: f64) -> (Selection, OverlapReport, Coloring) {
        let space = ModelSpace::euclidean(1).unwrap();
        let balls = centers
            .iter()
            .map(|&c| GeodesicBall::new(Point::new(vec![c]), r))
            .collect();
        let sel = greedy_select(&BallFamily::new(space, balls).unwrap());
        let rep = overlap_sets(&sel);
        let col = color(&sel, &rep);
        (sel, rep, col)
    }

    // smallest number of disjoint classes by trying every assignment
    fn brute_min_colors(sel: &Selection) -> usize {
        let n = sel.len();
        let space = sel.family.space();
        for k in 1..=n {
            let total = k.pow(n as u32);
            for code in 0..total {
                let mut assign = Vec::with_capacity(n);
                let mut c = code;
                for _ in 0..n {
                    assign.push(c % k);
                    c /= k;
                }
                let ok = (0..n).all(|i| {
                    (0..i).all(|j| {
                        assign[i] != assign[j] || !sel.ball(i).intersects(space, sel.ball(j))
                    })
                });
                if ok {
                    return k;
                }
            }
        }
        n
    }

    #[test]
    fn chain_needs_two_colors() {
        let (sel, rep, col) = run(&[0.0, 1.0, 2.0], 0.75);
        assert_eq!(sel.len(), 3);
        assert_eq!(col.colors(), 2);
        assert_eq!(col.colors(), brute_min_colors(&sel));
        assert_eq!(col.sigma, vec![1, 2, 1]);
        assert!(verify_coloring(&sel, &rep, &col, &Tolerances::default()).passed);
    }

    #[test]
    fn disjoint_family_single_color() {
        let (sel, rep, col) = run(&[0.0, 3.0, 6.0], 1.0);
        assert_eq!(col.colors(), 1);
        assert!(verify_coloring(&sel, &rep, &col, &Tolerances::default()).passed);
        let probes: Vec<_> = (0..100)
            .map(|i| Point::new(vec![i as f64 * 0.07]))
            .collect();
        assert!(multiplicity(&sel, &probes) <= 1);
    }

    #[test]
    fn single_ball_multiplicity() {
        let (sel, _, _) = run(&[0.0], 1.0);
        assert_eq!(multiplicity(&sel, &[Point::new(vec![0.0])]), 1);
    }

    #[test]
    fn bad_coloring_rejected() {
        let (sel, rep, _) = run(&[0.0, 1.0, 2.0], 0.75);
        let bad = Coloring {
            sigma: vec![1, 1, 1],
            families: vec![vec![0, 1, 2]],
        };
        let rec = verify_coloring(&sel, &rep, &bad, &Tolerances::default());
        assert!(!rec.clause("disjoint").unwrap().passed);
        assert_eq!(
            rec.clause("disjoint").unwrap().witnesses[0].steps,
            vec![1, 2]
        );
    }
}

//! Audits of the inequalities behind the bounded-overlap property of a greedy
//! selection. Audits never fail early: every clause is evaluated on every
//! applicable index tuple and violations are reported with witnesses.

use super::{OverlapReport, Selection};
use crate::geometry::{deformed_angle, deformed_cos, ModelSpace};
use crate::tolerance::Tolerances;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Witnesses kept per clause.
pub const MAX_WITNESSES: usize = 16;

/// A violating index tuple. `steps` are 1-based selection steps (D₁ is step 1);
/// the violated inequality was `lhs <= rhs` (or `lhs < rhs` for strict clauses).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub steps: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub statement: String,
    pub passed: bool,
    pub checked: u64,
    pub violations: u64,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub audit: String,
    pub passed: bool,
    pub tolerances: Tolerances,
    pub clauses: Vec<ClauseResult>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AuditRecord {
    pub(crate) fn new(audit: &str, tol: &Tolerances, clauses: Vec<ClauseResult>) -> Self {
        Self {
            audit: audit.to_string(),
            passed: clauses.iter().all(|c| c.passed),
            tolerances: *tol,
            clauses,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.clause == name)
    }

    pub fn total_violations(&self) -> u64 {
        self.clauses.iter().map(|c| c.violations).sum()
    }

    pub(crate) fn metric(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(key.to_string(), value);
        }
    }

    /// Merge several audits into one record (clauses are prefixed by audit name).
    pub fn combine(audit: &str, tol: &Tolerances, parts: Vec<AuditRecord>) -> Self {
        let mut clauses = Vec::new();
        let mut metrics = BTreeMap::new();
        let mut notes = Vec::new();
        for part in parts {
            for mut c in part.clauses {
                c.clause = format!("{}.{}", part.audit, c.clause);
                clauses.push(c);
            }
            for (k, v) in part.metrics {
                metrics.insert(format!("{}.{}", part.audit, k), v);
            }
            notes.extend(part.notes);
        }
        let mut rec = AuditRecord::new(audit, tol, clauses);
        rec.metrics = metrics;
        rec.notes = notes;
        rec
    }
}

/// Per-clause accumulator; merged in index order so output is independent of
/// thread scheduling.
#[derive(Debug, Default, Clone)]
pub(crate) struct Tally {
    checked: u64,
    violations: u64,
    witnesses: Vec<Witness>,
}

impl Tally {
    pub(crate) fn check(&mut self, ok: bool, steps: &[usize], lhs: f64, rhs: f64) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(Witness {
                    steps: steps.iter().map(|s| s + 1).collect(),
                    lhs,
                    rhs,
                });
            }
        }
    }

    pub(crate) fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.violations += other.violations;
        let room = MAX_WITNESSES.saturating_sub(self.witnesses.len());
        self.witnesses
            .extend(other.witnesses.into_iter().take(room));
        self
    }

    pub(crate) fn finish(self, clause: &str, statement: &str) -> ClauseResult {
        ClauseResult {
            clause: clause.to_string(),
            statement: statement.to_string(),
            passed: self.violations == 0,
            checked: self.checked,
            violations: self.violations,
            witnesses: self.witnesses,
        }
    }
}

fn merge_all(tallies: Vec<Tally>) -> Tally {
    tallies.into_iter().fold(Tally::default(), Tally::merge)
}

/// Selection rule, radius monotonicity, separation and coverage.
///
/// Clauses:
/// * `rule` – a_j is uncovered by D₁..D_{j−1} and r_j > ¾ of the supremum of
///   radii over balls with uncovered centers (recomputed, and the recorded
///   supremum is never smaller than the recomputed one).
/// * `a` – r_j ≤ (4/3)·r_i for i < j.
/// * `b_prime` – ρ(a_i, a_j) ≥ r_i for i < j.
/// * `b` – ρ(a_i, a_j) > r_i/3 + r_j/3 for i ≠ j (the third-radius balls are disjoint).
/// * `c` – every center of the family lies in some chosen ball.
pub fn audit_selection(selection: &Selection, tol: &Tolerances) -> AuditRecord {
    let family = &selection.family;
    let space = family.space();
    let all = family.balls();
    let balls: Vec<_> = selection.balls().collect();
    let count = balls.len();

    let mut rule = Tally::default();
    let mut covered = vec![false; all.len()];
    for (j, &idx) in selection.chosen.iter().enumerate() {
        let sup_true = all
            .iter()
            .zip(&covered)
            .filter(|(_, c)| !**c)
            .map(|(b, _)| b.radius)
            .fold(0.0, f64::max);
        let recorded = selection.sup_records[j];
        let r = all[idx].radius;
        let sup = sup_true.max(recorded);
        rule.check(!covered[idx], &[j], 1.0, 0.0);
        rule.check(r > 0.75 * sup, &[j], 0.75 * sup, r);
        rule.check(
            recorded + tol.exact_slack >= sup_true,
            &[j],
            sup_true,
            recorded,
        );
        for (flag, b) in covered.iter_mut().zip(all) {
            if !*flag && all[idx].contains(space, &b.center) {
                *flag = true;
            }
        }
    }

    let mut clause_a = Tally::default();
    let mut min_pos = 0;
    for j in 1..count {
        let ri = balls[min_pos].radius;
        let rhs = 4.0 / 3.0 * ri + tol.exact_slack;
        clause_a.check(balls[j].radius <= rhs, &[min_pos, j], balls[j].radius, rhs);
        if balls[j].radius < balls[min_pos].radius {
            min_pos = j;
        }
    }

    let pair_tallies: Vec<(Tally, Tally)> = (0..count)
        .into_par_iter()
        .map(|j| {
            let mut bp = Tally::default();
            let mut b = Tally::default();
            for i in 0..j {
                let d = space.dist(&balls[i].center, &balls[j].center);
                bp.check(
                    d >= balls[i].radius - tol.exact_slack,
                    &[i, j],
                    balls[i].radius,
                    d,
                );
                let third = balls[i].radius / 3.0 + balls[j].radius / 3.0;
                b.check(d > third, &[i, j], third, d);
            }
            (bp, b)
        })
        .collect();
    let (bp, b): (Vec<_>, Vec<_>) = pair_tallies.into_iter().unzip();

    let mut clause_c = Tally::default();
    for (i, ball) in all.iter().enumerate() {
        let hit = balls.iter().any(|d| d.contains(space, &ball.center));
        // steps here index family balls, reported as-is
        clause_c.check(hit, &[i], 0.0, 0.0);
    }

    let clauses = vec![
        rule.finish(
            "rule",
            "a_j uncovered and r_j > 3/4 sup{r : D_r(a) in F, a in A_j}",
        ),
        clause_a.finish("a", "r_j <= 4/3 r_i for i < j"),
        merge_all(bp).finish("b_prime", "rho(a_i, a_j) >= r_i for i < j"),
        merge_all(b).finish("b", "rho(a_i, a_j) > r_i/3 + r_j/3 for i != j"),
        clause_c.finish(
            "c",
            "every center lies in some chosen ball (witness = family index + 1)",
        ),
    ];
    let mut rec = AuditRecord::new("selection", tol, clauses);
    rec.metric("family_size", all.len() as f64);
    rec.metric("selected", count as f64);
    rec.metric("max_radius", family.max_radius());
    rec
}

/// Constant ratio c₂/c₁ of the packing bound on #M_k.
///
/// 1 on flat spaces. On curved spaces the ratio of volume-to-Euclidean-volume
/// factors evaluated at the run's extreme radii r_min/3 and 5·r_max; those
/// factors are monotone in the radius, so the endpoint ratio dominates every
/// per-step ratio used by the packing argument.
pub fn packing_ratio(space: &ModelSpace, r_min: f64, r_max: f64) -> f64 {
    match space {
        ModelSpace::Euclidean { .. } | ModelSpace::FlatTorus { .. } => 1.0,
        _ => {
            let lo = space.volume_ratio(r_min / 3.0).unwrap_or(1.0);
            let hi = space.volume_ratio(5.0 * r_max).unwrap_or(1.0);
            lo.max(hi) / lo.min(hi)
        }
    }
}

/// arccos(61/64), the separation floor for comparison angles in I_k \ M_k.
pub fn theta_floor() -> f64 {
    (61.0f64 / 64.0).acos()
}

/// Packing bound on #M_k, the containment behind it, and the angle floor.
///
/// Clauses:
/// * `m_count` – #M_k ≤ (c₂/c₁)·20ⁿ.
/// * `containment` – ρ(a_j, a_k) + r_j/3 ≤ 5·r_k for j ∈ M_k.
/// * `angle_floor` – θ_def(a_i, a_j) ≥ arccos(61/64) at a_k for distinct i, j ∈ I_k \ M_k.
///
/// The Riemannian angle at a_k and its ratio to θ_def are reported as metrics.
pub fn audit_bounds(
    selection: &Selection,
    report: &OverlapReport,
    tol: &Tolerances,
) -> AuditRecord {
    let space = selection.family.space();
    let balls: Vec<_> = selection.balls().collect();
    let radii = selection.radii();
    let r_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let ratio = packing_ratio(space, r_min, r_max);
    let bound = ratio * 20f64.powi(space.dim() as i32);
    let floor = theta_floor();

    struct StepOut {
        m: Tally,
        contain: Tally,
        angle: Tally,
        min_theta: f64,
        min_tangent: f64,
        min_ratio: f64,
        tangent_failures: u64,
    }

    let per_k: Vec<StepOut> = (0..balls.len())
        .into_par_iter()
        .map(|k| {
            let bk = balls[k];
            let mut out = StepOut {
                m: Tally::default(),
                contain: Tally::default(),
                angle: Tally::default(),
                min_theta: f64::INFINITY,
                min_tangent: f64::INFINITY,
                min_ratio: f64::INFINITY,
                tangent_failures: 0,
            };
            let m_k = &report.comparable[k];
            out.m
                .check(m_k.len() as f64 <= bound, &[k], m_k.len() as f64, bound);
            for &j in m_k {
                let lhs = space.dist(&balls[j].center, &bk.center) + balls[j].radius / 3.0;
                let rhs = 5.0 * bk.radius + tol.exact_slack;
                out.contain.check(lhs <= rhs, &[j, k], lhs, rhs);
            }
            let far = report.far(k);
            for (x, &i) in far.iter().enumerate() {
                for &j in &far[x + 1..] {
                    let di = space.dist(&bk.center, &balls[i].center);
                    let dj = space.dist(&bk.center, &balls[j].center);
                    let dij = space.dist(&balls[i].center, &balls[j].center);
                    match deformed_angle(di, dj, dij) {
                        Ok(theta) => {
                            out.angle.check(
                                theta >= floor - tol.transcendental_slack,
                                &[i, j, k],
                                floor,
                                theta,
                            );
                            out.min_theta = out.min_theta.min(theta);
                            match space.angle_at(&bk.center, &balls[i].center, &balls[j].center) {
                                Ok(tangent) => {
                                    out.min_tangent = out.min_tangent.min(tangent);
                                    if theta > 0.0 {
                                        out.min_ratio = out.min_ratio.min(tangent / theta);
                                    }
                                }
                                Err(_) => out.tangent_failures += 1,
                            }
                        }
                        Err(_) => out.angle.check(false, &[i, j, k], floor, f64::NAN),
                    }
                }
            }
            out
        })
        .collect();

    let mut m = Tally::default();
    let mut contain = Tally::default();
    let mut angle = Tally::default();
    let (mut min_theta, mut min_tangent, mut min_ratio) =
        (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut tangent_failures = 0;
    for out in per_k {
        m = m.merge(out.m);
        contain = contain.merge(out.contain);
        angle = angle.merge(out.angle);
        min_theta = min_theta.min(out.min_theta);
        min_tangent = min_tangent.min(out.min_tangent);
        min_ratio = min_ratio.min(out.min_ratio);
        tangent_failures += out.tangent_failures;
    }

    let clauses = vec![
        m.finish("m_count", "#M_k <= (c2/c1) 20^n"),
        contain.finish("containment", "rho(a_j, a_k) + r_j/3 <= 5 r_k for j in M_k"),
        angle.finish(
            "angle_floor",
            "theta_def(a_i, a_j) >= arccos(61/64) for distinct i, j in I_k \\ M_k",
        ),
    ];
    let mut rec = AuditRecord::new("bounds", tol, clauses);
    rec.metric("volume_ratio", ratio);
    rec.metric("m_bound", bound);
    rec.metric("max_comparable", report.max_comparable as f64);
    rec.metric("max_far", report.max_far as f64);
    rec.metric("max_intersecting", report.max_intersecting as f64);
    rec.metric("l_value", report.l_value() as f64);
    rec.metric("theta_floor", floor);
    rec.metric("min_theta_def", min_theta);
    rec.metric("min_tangent_angle", min_tangent);
    rec.metric("min_tangent_ratio", min_ratio);
    if tangent_failures > 0 {
        rec.notes.push(format!(
            "{tangent_failures} tangent angles could not be evaluated"
        ));
    }
    rec
}

/// Triangle-inequality claims on pairs i, j ∈ I_k \ M_k, labelled so that
/// |a_i| ≤ |a_j| where |x| = ρ(a_k, x) (both labellings on ties).
///
/// * `far_cosine` – if a_i ∉ D_j then cos θ_def ≤ 5/6 (the contrapositive of
///   "cos θ_def > 5/6 implies a_i ∈ D_j").
/// * `inner_distance` – if a_i ∈ D_j then i < j and
///   0 ≤ ρ(a_i, a_j) + |a_i| − |a_j| ≤ (8/3)(1 − cos θ_def)|a_j|.
pub fn audit_claims(
    selection: &Selection,
    report: &OverlapReport,
    tol: &Tolerances,
) -> AuditRecord {
    let space = selection.family.space();
    let balls: Vec<_> = selection.balls().collect();

    let per_k: Vec<(Tally, Tally, u64)> = (0..balls.len())
        .into_par_iter()
        .map(|k| {
            let mut c1 = Tally::default();
            let mut c2 = Tally::default();
            let mut triggered = 0;
            let far = report.far(k);
            let ak = &balls[k].center;
            for (x, &p) in far.iter().enumerate() {
                for &q in &far[x + 1..] {
                    let dp = space.dist(ak, &balls[p].center);
                    let dq = space.dist(ak, &balls[q].center);
                    let mut labellings = Vec::with_capacity(2);
                    if dp <= dq {
                        labellings.push((p, q, dp, dq));
                    }
                    if dq <= dp {
                        labellings.push((q, p, dq, dp));
                    }
                    for (i, j, di, dj) in labellings {
                        let dij = space.dist(&balls[i].center, &balls[j].center);
                        let cos = match deformed_cos(di, dj, dij) {
                            Ok(c) => c,
                            Err(_) => {
                                c1.check(false, &[i, j, k], f64::NAN, 5.0 / 6.0);
                                continue;
                            }
                        };
                        if cos > 5.0 / 6.0 {
                            triggered += 1;
                        }
                        let rj = balls[j].radius;
                        if dij >= rj {
                            let rhs = 5.0 / 6.0 + tol.transcendental_slack;
                            c1.check(cos <= rhs, &[i, j, k], cos, rhs);
                        } else {
                            let gap = dij + di - dj;
                            let upper = 8.0 / 3.0 * (1.0 - cos) * dj + tol.transcendental_slack;
                            c2.check(i < j, &[i, j, k], i as f64, j as f64);
                            c2.check(gap >= -tol.exact_slack, &[i, j, k], 0.0, gap);
                            c2.check(gap <= upper, &[i, j, k], gap, upper);
                        }
                    }
                }
            }
            (c1, c2, triggered)
        })
        .collect();

    let mut c1 = Tally::default();
    let mut c2 = Tally::default();
    let mut triggered = 0;
    for (a, b, t) in per_k {
        c1 = c1.merge(a);
        c2 = c2.merge(b);
        triggered += t;
    }
    let clauses = vec![
        c1.finish("far_cosine", "a_i not in D_j implies cos theta_def <= 5/6"),
        c2.finish("inner_distance", "a_i in D_j implies i < j and 0 <= rho(a_i,a_j) + |a_i| - |a_j| <= 8/3 (1 - cos theta_def) |a_j|"),
    ];
    let mut rec = AuditRecord::new("claims", tol, clauses);
    rec.metric("pairs_with_cos_above_5_6", triggered as f64);
    rec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{greedy_select, overlap_sets, BallFamily, GeodesicBall};
    use crate::geometry::Point;

    fn family(space: ModelSpace, balls: Vec<(Vec<f64>, f64)>) -> BallFamily {
        BallFamily::new(
            space,
            balls
                .into_iter()
                .map(|(c, r)| GeodesicBall::new(Point::new(c), r))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn theta_floor_value() {
        assert!((theta_floor().cos() - 61.0 / 64.0).abs() < 1e-15);
        assert!((theta_floor() - 0.307_395).abs() < 1e-6);
    }

    #[test]
    fn euclidean_plane_bound_is_400() {
        let r2 = ModelSpace::euclidean(2).unwrap();
        let fam = family(r2, vec![(vec![0.0, 0.0], 1.0)]);
        let sel = greedy_select(&fam);
        let rep = overlap_sets(&sel);
        let rec = audit_bounds(&sel, &rep, &Tolerances::default());
        assert_eq!(rec.metrics["m_bound"], 400.0);
        assert!(rec.passed);
    }

    #[test]
    fn single_ball_passes_everything() {
        let s2 = ModelSpace::sphere(2).unwrap();
        let fam = family(s2.clone(), vec![(s2.origin().into_coords(), 0.3)]);
        let sel = greedy_select(&fam);
        let tol = Tolerances::default();
        assert!(audit_selection(&sel, &tol).passed);
        let rep = overlap_sets(&sel);
        assert!(audit_bounds(&sel, &rep, &tol).passed);
        assert!(audit_claims(&sel, &rep, &tol).passed);
    }

    #[test]
    fn equal_radii_are_separated() {
        let r2 = ModelSpace::euclidean(2).unwrap();
        let balls: Vec<_> = (0..60)
            .map(|i| {
                let t = i as f64 * 0.37;
                (vec![t.sin() * (1.0 + 0.01 * i as f64), t.cos()], 0.3)
            })
            .collect();
        let sel = greedy_select(&family(r2.clone(), balls));
        let rec = audit_selection(&sel, &Tolerances::default());
        assert!(rec.passed);
        for i in 0..sel.len() {
            for j in 0..i {
                assert!(r2.dist(&sel.ball(i).center, &sel.ball(j).center) >= 0.3);
            }
        }
    }

    #[test]
    fn corrupted_order_is_caught() {
        let r1 = ModelSpace::euclidean(1).unwrap();
        let fam = family(r1, vec![(vec![0.0], 0.1), (vec![5.0], 1.0)]);
        // small ball first violates both the rule and clause (a)
        let sel = Selection::from_parts(fam, vec![0, 1], vec![1.0, 1.0]).unwrap();
        let rec = audit_selection(&sel, &Tolerances::default());
        assert!(!rec.passed);
        let a = rec.clause("a").unwrap();
        assert_eq!(a.violations, 1);
        assert_eq!(a.witnesses[0].steps, vec![1, 2]);
        assert!(!rec.clause("rule").unwrap().passed);
        assert!(rec.clause("c").unwrap().passed);
    }

    #[test]
    fn missing_coverage_is_caught() {
        let r1 = ModelSpace::euclidean(1).unwrap();
        let fam = family(r1, vec![(vec![0.0], 1.0), (vec![5.0], 1.0)]);
        let sel = Selection::from_parts(fam, vec![0], vec![1.0]).unwrap();
        let rec = audit_selection(&sel, &Tolerances::default());
        let c = rec.clause("c").unwrap();
        assert_eq!(c.violations, 1);
        assert_eq!(c.witnesses[0].steps, vec![2]);
    }

    #[test]
    fn far_pairs_feed_claims() {
        // two big balls meeting a small late ball from both sides
        let r1 = ModelSpace::euclidean(1).unwrap();
        let fam = family(
            r1,
            vec![(vec![-1.0], 1.0), (vec![1.05], 1.0), (vec![0.02], 0.05)],
        );
        let sel = greedy_select(&fam);
        let rep = overlap_sets(&sel);
        assert_eq!(rep.far(2), vec![0, 1]);
        let tol = Tolerances::default();
        let bounds = audit_bounds(&sel, &rep, &tol);
        assert!(bounds.passed);
        // opposite rays: θ_def = π
        let theta = bounds.metrics["min_theta_def"];
        // near-degenerate triangle: the angle is only determined to ~sqrt(ulp)
        assert!((theta - std::f64::consts::PI).abs() < 1e-6, "{theta}");
        let claims = audit_claims(&sel, &rep, &tol);
        assert!(claims.passed);
        assert!(claims.clause("far_cosine").unwrap().checked >= 1);
    }
}

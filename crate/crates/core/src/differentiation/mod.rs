//! Differentiation of one measure against another by ratios of geodesic ball
//! masses over a shrinking radius ladder, plus the disjoint-ball fill, the
//! density-bound audit and the integral identity check built on it.

mod bounds;
mod rn;
mod vitali;

pub use bounds::{density_bound_audit, BoundSide};
pub use rn::{cell_grid, rn_identity_check, RnReport};
pub use vitali::{boundary_samples, vitali_fill, FamilyGenerator, FillResult};

use crate::covering::GeodesicBall;
use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};
use crate::measures::{ball_mass, MassValue, Measure};
use crate::tolerance::Tolerances;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Radii r₀·factorᵏ for k = 0..depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LadderFile")]
pub struct RadiusLadder {
    pub r0: f64,
    pub factor: f64,
    pub depth: usize,
}

#[derive(Deserialize)]
struct LadderFile {
    r0: f64,
    factor: f64,
    depth: usize,
}

impl TryFrom<LadderFile> for RadiusLadder {
    type Error = Error;

    fn try_from(f: LadderFile) -> Result<Self> {
        RadiusLadder::new(f.r0, f.factor, f.depth)
    }
}

impl RadiusLadder {
    pub fn new(r0: f64, factor: f64, depth: usize) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::invalid(format!("ladder r0 = {r0} must be positive")));
        }
        if !(factor > 0.0 && factor < 1.0) {
            return Err(Error::invalid(format!(
                "ladder factor = {factor} must lie in (0, 1)"
            )));
        }
        if depth < 3 {
            return Err(Error::invalid(format!(
                "ladder depth = {depth} must be at least 3"
            )));
        }
        Ok(Self { r0, factor, depth })
    }

    /// r₀ = min(0.2, inj/8), factor 0.5, depth 6.
    pub fn default_for(space: &ModelSpace) -> Self {
        Self {
            r0: (space.inj_radius() / 8.0).min(0.2),
            factor: 0.5,
            depth: 6,
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        let mut r = self.r0;
        (0..self.depth)
            .map(|_| {
                let cur = r;
                r *= self.factor;
                cur
            })
            .collect()
    }

    /// Smallest radius of the ladder.
    pub fn floor(&self) -> f64 {
        self.r0 * self.factor.powi(self.depth as i32 - 1)
    }

    /// The largest ball must be 4-proper.
    pub fn check(&self, space: &ModelSpace) -> Result<()> {
        if 4.0 * self.r0 > space.inj_radius() {
            return Err(Error::domain(format!(
                "ladder r0 = {} exceeds a quarter of the injectivity radius {}",
                self.r0,
                space.inj_radius()
            )));
        }
        Ok(())
    }
}

/// One rung: both masses and their ratio. `ratio` is `None` when the
/// denominator mass is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub radius: f64,
    pub nu1: MassValue,
    pub nu2: MassValue,
    pub ratio: Option<f64>,
    pub error_estimate: Option<f64>,
}

/// ν₂(D_r(x)) / ν₁(D_r(x)) on every rung, with first-order error propagation
/// (e₂ + |τ|·e₁) / ν₁.
pub fn ratio_ladder(
    nu1: &Measure,
    nu2: &Measure,
    space: &ModelSpace,
    x: &Point,
    ladder: &RadiusLadder,
) -> Result<Vec<RatioEntry>> {
    ladder.check(space)?;
    space.validate(x)?;
    ladder
        .radii()
        .into_iter()
        .map(|r| {
            let ball = GeodesicBall::new(x.clone(), r);
            let m1 = ball_mass(nu1, space, &ball)?;
            let m2 = ball_mass(nu2, space, &ball)?;
            let (ratio, err) = if m1.value > 0.0 {
                let t = m2.value / m1.value;
                (
                    Some(t),
                    Some((m2.error_estimate + t.abs() * m1.error_estimate) / m1.value),
                )
            } else {
                (None, None)
            };
            Ok(RatioEntry {
                radius: r,
                nu1: m1,
                nu2: m2,
                ratio,
                error_estimate: err,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// The last three ratios agree within the convergence window.
    Converged,
    /// The ratios exceed the ceiling and keep increasing.
    Divergent,
    /// The tail keeps returning to two separated levels.
    Oscillating,
    /// Some ball has zero ν₁-mass.
    UndefinedZeroDenominator,
    /// None of the above at this ladder depth.
    Unresolved,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Divergent => "divergent",
            Status::Oscillating => "oscillating",
            Status::UndefinedZeroDenominator => "undefined_zero_denominator",
            Status::Unresolved => "unresolved",
        }
    }
}

/// Ratio value and its error, `None` for a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioValue {
    pub value: Option<f64>,
    pub error_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub point: Point,
    pub radii: Vec<f64>,
    pub ratios: Vec<RatioValue>,
    /// The extrapolated limit when converged, 0 otherwise.
    pub extrapolated: f64,
    pub status: Status,
}

impl DensityEstimate {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

fn spread(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Classify a ladder and extrapolate.
///
/// * converged: the last three ratios lie within
///   w = max(3·max error, rel_tol·|last|); the limit is the last ratio when the
///   last two agree exactly, else the Richardson value
///   (τ_k − q²τ_{k−1}) / (1 − q²) for the ladder factor q (second-order
///   error in r), falling back to the last ratio if that moves by more than w.
/// * divergent: last ratio above the ceiling, strictly increasing over the
///   last three rungs.
/// * oscillating: the tail (second half, at least four rungs) is not
///   monotone, spreads by more than gap_tol·|mean|, and both its minimum and
///   maximum are revisited within the window.
pub fn classify(entries: &[RatioEntry], factor: f64, tol: &Tolerances) -> (Status, f64) {
    if entries.iter().any(|e| e.ratio.is_none()) {
        return (Status::UndefinedZeroDenominator, 0.0);
    }
    let tau: Vec<f64> = entries.iter().filter_map(|e| e.ratio).collect();
    let errs: Vec<f64> = entries.iter().filter_map(|e| e.error_estimate).collect();
    let n = tau.len();
    if n < 3 {
        return (Status::Unresolved, 0.0);
    }
    let last3 = &tau[n - 3..];
    let last = tau[n - 1];
    let err3 = errs[n - 3..].iter().copied().fold(0.0, f64::max);
    let window = (3.0 * err3).max(tol.rel_tol * last.abs());
    let (lo, hi) = spread(last3);
    if hi - lo <= window {
        let prev = tau[n - 2];
        let value = if last == prev {
            last
        } else {
            let q2 = factor * factor;
            let rich = (last - q2 * prev) / (1.0 - q2);
            if (rich - last).abs() <= window && rich.is_finite() {
                rich
            } else {
                last
            }
        };
        return (Status::Converged, value);
    }
    if last > tol.divergence_ceiling && last3.windows(2).all(|w| w[1] > w[0]) {
        return (Status::Divergent, 0.0);
    }
    let tail = &tau[(n / 2).min(n.saturating_sub(4))..];
    let monotone = tail.windows(2).all(|w| w[1] >= w[0]) || tail.windows(2).all(|w| w[1] <= w[0]);
    let (tlo, thi) = spread(tail);
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let terr = errs[n - tail.len()..].iter().copied().fold(0.0, f64::max);
    let w = (3.0 * terr).max(tol.rel_tol * mean.abs());
    let near_lo = tail.iter().filter(|&&t| t - tlo <= w).count();
    let near_hi = tail.iter().filter(|&&t| thi - t <= w).count();
    if !monotone && thi - tlo > tol.gap_tol * mean.abs() && near_lo >= 2 && near_hi >= 2 {
        return (Status::Oscillating, 0.0);
    }
    (Status::Unresolved, 0.0)
}

/// Ratio ladder at `x`, classified; non-converged points get the value 0.
pub fn differentiate(
    nu1: &Measure,
    nu2: &Measure,
    space: &ModelSpace,
    x: &Point,
    ladder: &RadiusLadder,
    tol: &Tolerances,
) -> Result<DensityEstimate> {
    let entries = ratio_ladder(nu1, nu2, space, x, ladder)?;
    let (status, extrapolated) = classify(&entries, ladder.factor, tol);
    Ok(DensityEstimate {
        point: x.clone(),
        radii: entries.iter().map(|e| e.radius).collect(),
        ratios: entries
            .iter()
            .map(|e| RatioValue {
                value: e.ratio,
                error_estimate: e.error_estimate,
            })
            .collect(),
        extrapolated,
        status,
    })
}

/// `differentiate` at every point, in parallel, in input order.
pub fn differentiate_grid(
    nu1: &Measure,
    nu2: &Measure,
    space: &ModelSpace,
    points: &[Point],
    ladder: &RadiusLadder,
    tol: &Tolerances,
) -> Result<Vec<DensityEstimate>> {
    points
        .par_iter()
        .map(|x| differentiate(nu1, nu2, space, x, ladder, tol))
        .collect()
}

/// CSV with columns x1..xm, r1..rd, ratio1..ratiod, extrapolated, status.
/// Undefined ratios are left empty.
pub fn write_estimates_csv<W: std::io::Write>(estimates: &[DensityEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = estimates.first() else {
        w.flush()?;
        return Ok(());
    };
    let m = first.point.coords().len();
    let d = first.radii.len();
    let mut header: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    header.extend((1..=d).map(|i| format!("r{i}")));
    header.extend((1..=d).map(|i| format!("ratio{i}")));
    header.push("extrapolated".into());
    header.push("status".into());
    w.write_record(&header)?;
    for e in estimates {
        if e.point.coords().len() != m || e.radii.len() != d {
            return Err(Error::invalid(
                "estimates differ in dimension or ladder depth",
            ));
        }
        let mut row: Vec<String> = e.point.coords().iter().map(|x| format!("{x:?}")).collect();
        row.extend(e.radii.iter().map(|r| format!("{r:?}")));
        row.extend(
            e.ratios
                .iter()
                .map(|r| r.value.map(|v| format!("{v:?}")).unwrap_or_default()),
        );
        row.push(format!("{:?}", e.extrapolated));
        row.push(e.status.as_str().into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{AtomicMeasure, DensityField, DensityMeasure, IntegrationConfig};
    use serde_json::json;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    fn entries(tau: &[f64]) -> Vec<RatioEntry> {
        tau.iter()
            .map(|&t| RatioEntry {
                radius: 1.0,
                nu1: MassValue::exact(1.0),
                nu2: MassValue::exact(t),
                ratio: Some(t),
                error_estimate: Some(0.0),
            })
            .collect()
    }

    #[test]
    fn ladder_radii_and_validation() {
        let l = RadiusLadder::new(0.2, 0.5, 4).unwrap();
        assert_eq!(l.radii(), vec![0.2, 0.1, 0.05, 0.025]);
        assert_eq!(l.floor(), 0.025);
        assert!(RadiusLadder::new(0.2, 1.0, 4).is_err());
        assert!(RadiusLadder::new(0.2, 0.5, 2).is_err());
        let s2 = ModelSpace::sphere(2).unwrap();
        let d = RadiusLadder::default_for(&s2);
        assert_eq!(d.r0, 0.2);
        assert!(d.check(&s2).is_ok());
        assert!(RadiusLadder::new(1.0, 0.5, 3).unwrap().check(&s2).is_err());
    }

    #[test]
    fn shared_atom_ratio() {
        let r1 = ModelSpace::euclidean(1).unwrap();
        let x = p(&[0.0]);
        let nu1: Measure = AtomicMeasure::dirac(x.clone(), 2.0).unwrap().into();
        let nu2: Measure = AtomicMeasure::dirac(x.clone(), 3.0).unwrap().into();
        let ladder = RadiusLadder::new(0.2, 0.5, 6).unwrap();
        for e in ratio_ladder(&nu1, &nu2, &r1, &x, &ladder).unwrap() {
            assert_eq!(e.ratio, Some(1.5));
        }
        let est = differentiate(&nu1, &nu2, &r1, &x, &ladder, &Tolerances::default()).unwrap();
        assert_eq!(est.status, Status::Converged);
        assert_eq!(est.extrapolated, 1.5);
    }

    #[test]
    fn quadratic_density_ratio_and_limit() {
        let r2 = ModelSpace::euclidean(2).unwrap();
        let q: DensityField =
            serde_json::from_value(json!({"name": "quadratic", "b": 1.0, "q": [1.0, 0.0]}))
                .unwrap();
        let nu2: Measure = DensityMeasure::new(q, IntegrationConfig::quadrature(16)).into();
        let x = p(&[0.5, 0.0]);
        let one = RadiusLadder::new(0.1, 0.5, 3).unwrap();
        let e = &ratio_ladder(&Measure::volume(), &nu2, &r2, &x, &one).unwrap()[0];
        // mean of x² over the disk of radius r about x₀ is x₀² + r²/4
        assert!((e.ratio.unwrap() - 1.2525).abs() < 1e-12);
        let ladder = RadiusLadder::new(0.2, 0.5, 5).unwrap();
        let est = differentiate(
            &Measure::volume(),
            &nu2,
            &r2,
            &x,
            &ladder,
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(est.status, Status::Converged);
        assert!((est.extrapolated - 1.25).abs() < 1e-10);
    }

    #[test]
    fn atom_against_volume_diverges() {
        let r2 = ModelSpace::euclidean(2).unwrap();
        let x = p(&[0.0, 0.0]);
        let nu2: Measure = AtomicMeasure::dirac(x.clone(), 1.0).unwrap().into();
        let ladder = RadiusLadder::new(0.2, 0.5, 20).unwrap();
        let est = differentiate(
            &Measure::volume(),
            &nu2,
            &r2,
            &x,
            &ladder,
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(est.status, Status::Divergent);
        assert_eq!(est.extrapolated, 0.0);
        let short = RadiusLadder::new(0.2, 0.5, 6).unwrap();
        let est = differentiate(
            &Measure::volume(),
            &nu2,
            &r2,
            &x,
            &short,
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(est.status, Status::Unresolved);
    }

    #[test]
    fn zero_denominator_flagged() {
        let r1 = ModelSpace::euclidean(1).unwrap();
        let nu1: Measure = AtomicMeasure::dirac(p(&[5.0]), 1.0).unwrap().into();
        let ladder = RadiusLadder::new(0.2, 0.5, 4).unwrap();
        let entries = ratio_ladder(&nu1, &nu1, &r1, &p(&[0.0]), &ladder).unwrap();
        assert!(entries.iter().all(|e| e.ratio.is_none()));
        let est =
            differentiate(&nu1, &nu1, &r1, &p(&[0.0]), &ladder, &Tolerances::default()).unwrap();
        assert_eq!(est.status, Status::UndefinedZeroDenominator);
        assert_eq!(est.extrapolated, 0.0);
    }

    #[test]
    fn oscillation_detected() {
        let tol = Tolerances::default();
        let (s, v) = classify(&entries(&[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]), 0.5, &tol);
        assert_eq!((s, v), (Status::Oscillating, 0.0));
        let (s, _) = classify(&entries(&[5.0, 4.0, 3.0, 2.0, 1.0, 0.5]), 0.5, &tol);
        assert_eq!(s, Status::Unresolved);
    }

    #[test]
    fn richardson_removes_quadratic_term() {
        let tau: Vec<f64> = (0..6).map(|k| 2.0 + 1e-4 * 0.25f64.powi(k)).collect();
        let (s, v) = classify(&entries(&tau), 0.5, &Tolerances::default());
        assert_eq!(s, Status::Converged);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn estimates_csv_layout() {
        let r1 = ModelSpace::euclidean(1).unwrap();
        let nu1: Measure = AtomicMeasure::dirac(p(&[0.0]), 1.0).unwrap().into();
        let ladder = RadiusLadder::new(0.2, 0.5, 3).unwrap();
        let tol = Tolerances::default();
        let est =
            differentiate_grid(&nu1, &nu1, &r1, &[p(&[0.0]), p(&[1.0])], &ladder, &tol).unwrap();
        let mut out = Vec::new();
        write_estimates_csv(&est, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "x1,r1,r2,r3,ratio1,ratio2,ratio3,extrapolated,status"
        );
        assert_eq!(lines[1], "0.0,0.2,0.1,0.05,1.0,1.0,1.0,1.0,converged");
        assert_eq!(
            lines[2],
            "1.0,0.2,0.1,0.05,,,,0.0,undefined_zero_denominator"
        );
    }
}

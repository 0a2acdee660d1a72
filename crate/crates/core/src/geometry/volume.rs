use super::ModelSpace;
use crate::error::{Error, Result};
use crate::quadrature;
use std::f64::consts::PI;

/// Volume ω_n of the Euclidean unit n-ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_n = 2π/n · ω_{n−2}
    let mut w = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

/// x − sin x, accurate for small x.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() > 0.5 {
        return x - x.sin();
    }
    series_odd(x, -1.0)
}

/// sinh x − x, accurate for small x.
fn sinh_minus_x(x: f64) -> f64 {
    if x.abs() > 0.5 {
        return x.sinh() - x;
    }
    series_odd(x, 1.0)
}

// Σ_{k≥1} sign^{k+1}·x^{2k+1}/(2k+1)!  (sign = −1 gives x − sin x)
fn series_odd(x: f64, sign: f64) -> f64 {
    let x2 = x * x;
    let mut term = x * x2 / 6.0;
    let mut sum = 0.0f64;
    let mut k = 1;
    while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
        sum += term;
        let a = (2 * k + 2) as f64;
        let b = (2 * k + 3) as f64;
        term *= sign * x2 / (a * b);
        k += 1;
        if k > 40 {
            break;
        }
    }
    sum
}

impl ModelSpace {
    /// Total volume: finite for the sphere and the torus.
    pub fn total_volume(&self) -> f64 {
        match self {
            ModelSpace::Sphere { dim } => (dim + 1) as f64 * unit_ball_volume(dim + 1),
            ModelSpace::FlatTorus { periods } => periods.iter().product(),
            _ => f64::INFINITY,
        }
    }

    /// Riemannian volume of a geodesic ball of radius `r`, 0 < r ≤ inj.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        let inj = self.inj_radius();
        if !(r > 0.0) || r > inj || !r.is_finite() {
            return Err(Error::domain(format!(
                "ball radius {r} must lie in (0, {inj}]"
            )));
        }
        let n = self.dim();
        let area = n as f64 * unit_ball_volume(n); // |S^{n−1}|
        Ok(match self {
            ModelSpace::Euclidean { .. } | ModelSpace::FlatTorus { .. } => {
                unit_ball_volume(n) * r.powi(n as i32)
            }
            ModelSpace::Sphere { .. } => match n {
                1 => 2.0 * r,
                2 => 4.0 * PI * (r / 2.0).sin().powi(2),
                3 => PI * x_minus_sin(2.0 * r),
                _ => area * radial_integral(|t: f64| t.sin(), n, r),
            },
            ModelSpace::Hyperbolic { .. } => match n {
                1 => 2.0 * r,
                2 => 4.0 * PI * (r / 2.0).sinh().powi(2),
                3 => PI * sinh_minus_x(2.0 * r),
                _ => area * radial_integral(|t: f64| t.sinh(), n, r),
            },
        })
    }

    /// vol(D_s) / (ω_n sⁿ): the ratio of a geodesic ball's volume to the
    /// Euclidean ball of the same radius. Radii past the sphere's diameter
    /// use the total volume.
    pub fn volume_ratio(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::domain(format!("radius {s} must be positive")));
        }
        let n = self.dim();
        let euclid = unit_ball_volume(n) * s.powi(n as i32);
        match self {
            ModelSpace::Euclidean { .. } | ModelSpace::FlatTorus { .. } => Ok(1.0),
            ModelSpace::Sphere { .. } if s >= PI => Ok(self.total_volume() / euclid),
            _ => Ok(self.ball_volume(s)? / euclid),
        }
    }

    /// Radial Jacobian t ↦ s_κ(t)^{n−1} of geodesic polar coordinates.
    pub fn radial_jacobian(&self, t: f64) -> f64 {
        let m = self.dim() as i32 - 1;
        match self {
            ModelSpace::Sphere { .. } => t.sin().powi(m),
            ModelSpace::Hyperbolic { .. } => t.sinh().powi(m),
            _ => t.powi(m),
        }
    }
}

fn radial_integral<F: Fn(f64) -> f64>(s: F, n: usize, r: f64) -> f64 {
    let m = n as i32 - 1;
    let (v, _) = quadrature::integrate(|t| s(t).powi(m), 0.0, r, 1e-13, 0.0, 400);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_examples() {
        let r2 = ModelSpace::euclidean(2).unwrap();
        assert!((r2.ball_volume(1.0).unwrap() - PI).abs() < 1e-15);
        let s2 = ModelSpace::sphere(2).unwrap();
        let v = s2.ball_volume(PI / 4.0).unwrap();
        assert!((v - 2.0 * PI * (1.0 - (PI / 4.0).cos())).abs() < 1e-14);
        assert!((v - 1.84030).abs() < 1e-5);
        let h2 = ModelSpace::hyperbolic(2).unwrap();
        let v = h2.ball_volume(1.0).unwrap();
        assert!((v - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-14);
        assert!((v - 3.41228).abs() < 1e-5);
    }

    #[test]
    fn three_dimensional_closed_forms_match_quadrature() {
        for r in [1e-4, 1e-2, 0.3, 1.0, 2.5] {
            let s3 = ModelSpace::sphere(3).unwrap().ball_volume(r).unwrap();
            let q = 4.0 * PI * radial_integral(|t: f64| t.sin(), 3, r);
            assert!((s3 - q).abs() <= 1e-12 * q, "S3 r={r}: {s3} vs {q}");
            let h3 = ModelSpace::hyperbolic(3).unwrap().ball_volume(r).unwrap();
            let q = 4.0 * PI * radial_integral(|t: f64| t.sinh(), 3, r);
            assert!((h3 - q).abs() <= 1e-12 * q, "H3 r={r}: {h3} vs {q}");
        }
    }

    #[test]
    fn sphere_full_radius_is_total_volume() {
        for n in 1..=8 {
            let s = ModelSpace::sphere(n).unwrap();
            let v = s.ball_volume(PI).unwrap();
            assert!(
                (v - s.total_volume()).abs() < 1e-9,
                "n={n}: {v} vs {}",
                s.total_volume()
            );
        }
    }

    #[test]
    fn domain_errors() {
        let s2 = ModelSpace::sphere(2).unwrap();
        assert!(matches!(s2.ball_volume(0.0), Err(Error::Domain(_))));
        assert!(matches!(s2.ball_volume(3.5), Err(Error::Domain(_))));
        let t = ModelSpace::flat_torus(vec![1.0, 1.0]).unwrap();
        assert!(t.ball_volume(0.5).is_ok());
        assert!(t.ball_volume(0.51).is_err());
    }

    #[test]
    fn volume_ratio_monotone_in_curvature() {
        let s = ModelSpace::sphere(2).unwrap();
        let h = ModelSpace::hyperbolic(2).unwrap();
        let (a, b) = (s.volume_ratio(0.1).unwrap(), s.volume_ratio(1.0).unwrap());
        assert!(a > b && a < 1.0);
        let (a, b) = (h.volume_ratio(0.1).unwrap(), h.volume_ratio(1.0).unwrap());
        assert!(a < b && a > 1.0);
        assert!(s.volume_ratio(4.0).unwrap() > 0.0);
    }
}

use super::{dot, minkowski, ModelSpace, Point, TangentVector};
use crate::error::{Error, Result};
use crate::tolerance::TRANSCENDENTAL_SLACK;
use std::f64::consts::PI;

impl ModelSpace {
    fn check_pair(&self, p: &Point, q: &Point) -> Result<()> {
        let n = self.ambient_dim();
        if p.coords().len() != n || q.coords().len() != n {
            return Err(Error::invalid(format!(
                "dimension mismatch: expected {n} coordinates, got {} and {}",
                p.coords().len(),
                q.coords().len()
            )));
        }
        Ok(())
    }

    /// Geodesic distance.
    ///
    /// Checks coordinate counts and that the sphere inner product (resp. the
    /// negated Minkowski product) lies in the arccos (arccosh) domain up to
    /// roundoff slack.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_pair(p, q)?;
        match self {
            ModelSpace::Sphere { .. } => {
                let ip = dot(p.coords(), q.coords());
                if !(-1.0 - TRANSCENDENTAL_SLACK..=1.0 + TRANSCENDENTAL_SLACK).contains(&ip) {
                    return Err(Error::invariant(format!(
                        "sphere inner product {ip} outside [-1, 1]"
                    )));
                }
            }
            ModelSpace::Hyperbolic { .. } => {
                let m = -minkowski(p.coords(), q.coords());
                let scale = (p.coords()[0] * q.coords()[0]).abs().max(1.0);
                if m < 1.0 - TRANSCENDENTAL_SLACK * scale {
                    return Err(Error::invariant(format!(
                        "negated Minkowski product {m} below 1"
                    )));
                }
            }
            _ => {}
        }
        Ok(self.dist(p, q))
    }

    /// Geodesic distance for points already known to be valid.
    pub fn dist(&self, p: &Point, q: &Point) -> f64 {
        let (a, b) = (p.coords(), q.coords());
        match self {
            ModelSpace::Euclidean { .. } => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            ModelSpace::Sphere { .. } => {
                // θ = 2·atan2(‖p−q‖, ‖p+q‖) equals arccos⟨p,q⟩ for unit vectors
                // and stays accurate at both ends of [0, π].
                let (mut minus, mut plus) = (0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    minus += (x - y) * (x - y);
                    plus += (x + y) * (x + y);
                }
                2.0 * minus.sqrt().atan2(plus.sqrt())
            }
            ModelSpace::Hyperbolic { .. } => {
                let m = -minkowski(a, b);
                if m < 2.0 {
                    // ⟨p−q, p−q⟩_M = 4 sinh²(d/2)
                    let mut s = -(a[0] - b[0]) * (a[0] - b[0]);
                    for (x, y) in a[1..].iter().zip(&b[1..]) {
                        s += (x - y) * (x - y);
                    }
                    2.0 * (s.max(0.0).sqrt() / 2.0).asinh()
                } else {
                    m.acosh()
                }
            }
            ModelSpace::FlatTorus { periods } => a
                .iter()
                .zip(b)
                .zip(periods)
                .map(|((x, y), p)| {
                    let d = torus_offset(*x, *y, *p);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Inverse of the exponential map at `base`.
    pub fn log_map(&self, base: &Point, target: &Point) -> Result<TangentVector> {
        self.check_pair(base, target)?;
        let d = self.distance(base, target)?;
        let inj = self.inj_radius();
        let n = self.ambient_dim();
        let (b, t) = (base.coords(), target.coords());
        let components = match self {
            ModelSpace::Euclidean { .. } => t.iter().zip(b).map(|(y, x)| y - x).collect(),
            ModelSpace::FlatTorus { periods } => {
                if d >= inj {
                    return Err(Error::domain(format!(
                        "target at distance {d} is not inside the injectivity radius {inj}"
                    )));
                }
                b.iter()
                    .zip(t)
                    .zip(periods)
                    .map(|((x, y), p)| torus_offset(*x, *y, *p))
                    .collect()
            }
            ModelSpace::Sphere { .. } | ModelSpace::Hyperbolic { .. } => {
                if d == 0.0 {
                    vec![0.0; n]
                } else {
                    if inj - d <= TRANSCENDENTAL_SLACK {
                        return Err(Error::domain(format!(
                            "target at distance {d} lies on the cut locus (injectivity radius {inj})"
                        )));
                    }
                    // Tangential part of (target − base), computed from the
                    // difference for conditioning at short range.
                    let diff: Vec<f64> = t.iter().zip(b).map(|(y, x)| y - x).collect();
                    let along = match self {
                        ModelSpace::Sphere { .. } => -dot(&diff, b),
                        _ => minkowski(&diff, b),
                    };
                    let v: Vec<f64> = diff.iter().zip(b).map(|(dv, x)| dv + along * x).collect();
                    let len = self.metric_norm(&v);
                    if len == 0.0 {
                        return Err(Error::domain("log map direction is undefined"));
                    }
                    v.into_iter().map(|x| x * d / len).collect()
                }
            }
        };
        Ok(TangentVector {
            base: base.clone(),
            components,
        })
    }

    /// Exponential map at `base` applied to the ambient tangent components `v`.
    pub fn exp_map(&self, base: &Point, v: &[f64]) -> Point {
        let b = base.coords();
        match self {
            ModelSpace::Euclidean { .. } | ModelSpace::FlatTorus { .. } => {
                self.project(b.iter().zip(v).map(|(x, y)| x + y).collect())
            }
            ModelSpace::Sphere { .. } | ModelSpace::Hyperbolic { .. } => {
                let len = self.metric_norm(v);
                if len == 0.0 {
                    return base.clone();
                }
                let (c, s) = match self {
                    ModelSpace::Sphere { .. } => (len.cos(), len.sin() / len),
                    _ => (len.cosh(), len.sinh() / len),
                };
                self.project(b.iter().zip(v).map(|(x, y)| c * x + s * y).collect())
            }
        }
    }

    /// Orthonormal basis of the tangent space at `p` (ambient components).
    pub fn tangent_basis(&self, p: &Point) -> Vec<Vec<f64>> {
        let n = self.dim();
        let c = p.coords();
        match self {
            ModelSpace::Euclidean { .. } | ModelSpace::FlatTorus { .. } => (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            ModelSpace::Sphere { .. } => {
                // Householder reflection H with H(s·e_k) = p; H e_i (i ≠ k) spans p^⊥.
                let k = (0..=n)
                    .max_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs()))
                    .expect("non-empty");
                let s = c[k].signum();
                let mut w = c.to_vec();
                w[k] -= s;
                let ww = dot(&w, &w);
                (0..=n)
                    .filter(|&i| i != k)
                    .map(|i| {
                        let mut e = vec![0.0; n + 1];
                        e[i] = 1.0;
                        if ww > 0.0 {
                            let f = 2.0 * w[i] / ww;
                            e.iter_mut().zip(&w).for_each(|(x, wj)| *x -= f * wj);
                        }
                        e
                    })
                    .collect()
            }
            ModelSpace::Hyperbolic { .. } => {
                // Boost of the standard frame at the vertex (1, 0, …, 0) onto p.
                let t = c[0];
                (0..n)
                    .map(|i| {
                        let si = c[i + 1];
                        let mut e = vec![0.0; n + 1];
                        e[0] = si;
                        for j in 0..n {
                            e[j + 1] = si * c[j + 1] / (1.0 + t);
                        }
                        e[i + 1] += 1.0;
                        e
                    })
                    .collect()
            }
        }
    }

    /// Riemannian angle at `base` between the geodesics towards `p` and `q`.
    pub fn angle_at(&self, base: &Point, p: &Point, q: &Point) -> Result<f64> {
        let u = self.log_map(base, p)?;
        let v = self.log_map(base, q)?;
        let nu = u.norm(self);
        let nv = v.norm(self);
        if nu == 0.0 || nv == 0.0 {
            return Err(Error::domain(
                "angle is undefined when a ray has zero length",
            ));
        }
        let du: Vec<f64> = u
            .components
            .iter()
            .zip(&v.components)
            .map(|(a, b)| a / nu - b / nv)
            .collect();
        let su: Vec<f64> = u
            .components
            .iter()
            .zip(&v.components)
            .map(|(a, b)| a / nu + b / nv)
            .collect();
        Ok(2.0 * self.metric_norm(&du).atan2(self.metric_norm(&su)))
    }
}

/// Signed minimal displacement from `x` to `y` on a circle of length `p`.
fn torus_offset(x: f64, y: f64, p: f64) -> f64 {
    // The three lattice translates y − x + {−p, 0, p} cover every minimiser
    // because both coordinates lie in [0, p).
    let d = y - x;
    [d - p, d, d + p]
        .into_iter()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .expect("three candidates")
}

fn check_lengths(dki: f64, dkj: f64, dij: f64) -> Result<()> {
    if !(dki > 0.0 && dkj > 0.0 && dij >= 0.0)
        || !(dki.is_finite() && dkj.is_finite() && dij.is_finite())
    {
        return Err(Error::invalid(format!(
            "deformed angle needs positive ray lengths and a nonnegative chord, got ({dki}, {dkj}, {dij})"
        )));
    }
    Ok(())
}

/// Law-of-cosines cosine of the comparison angle at the vertex whose rays
/// have lengths `dki`, `dkj` and whose far endpoints are `dij` apart.
pub fn deformed_cos(dki: f64, dkj: f64, dij: f64) -> Result<f64> {
    check_lengths(dki, dkj, dij)?;
    let cosine = (dki * dki + dkj * dkj - dij * dij) / (2.0 * dki * dkj);
    if !(-1.0 - TRANSCENDENTAL_SLACK..=1.0 + TRANSCENDENTAL_SLACK).contains(&cosine) {
        return Err(Error::InvalidTriple {
            dki,
            dkj,
            dij,
            cosine,
        });
    }
    Ok(cosine.clamp(-1.0, 1.0))
}

/// Euclidean comparison angle arccos((dki² + dkj² − dij²)/(2·dki·dkj)).
///
/// Evaluated with Kahan's needle-triangle formula so small angles keep full
/// relative accuracy.
pub fn deformed_angle(dki: f64, dkj: f64, dij: f64) -> Result<f64> {
    let cosine = deformed_cos(dki, dkj, dij)?;
    if dij == 0.0 || cosine == 1.0 {
        return Ok(0.0);
    }
    if cosine == -1.0 {
        return Ok(PI);
    }
    let (a, b) = if dki >= dkj { (dki, dkj) } else { (dkj, dki) };
    let c = dij;
    let mu = if b >= c { c - (a - b) } else { b - (a - c) };
    let num = ((a - b) + c) * mu;
    let den = (a + (b + c)) * ((a - c) + b);
    if num <= 0.0 {
        return Ok(0.0);
    }
    if den <= 0.0 {
        return Ok(PI);
    }
    Ok(2.0 * (num / den).sqrt().atan())
}

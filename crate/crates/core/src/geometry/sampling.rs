use super::{ModelSpace, Point};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Uniform sampler for an open geodesic ball, with the tangent frame at the
/// center precomputed.
#[derive(Debug, Clone)]
pub struct BallSampler {
    space: ModelSpace,
    center: Point,
    radius: f64,
    basis: Vec<Vec<f64>>,
    radial: Radial,
}

#[derive(Debug, Clone, Copy)]
enum Radial {
    /// t = r·U^{1/n}, no rejection
    Power,
    /// power proposal, accept with (sin t / t)^{n−1}
    SphereReject,
    /// power proposal, accept with ((sinh t / t) / (sinh r / r))^{n−1}
    HyperbolicPower { scale: f64 },
    /// density ∝ e^{(n−1)t}, accept with (1 − e^{−2t})^{n−1}
    HyperbolicExp,
}

impl BallSampler {
    pub fn new(space: &ModelSpace, center: &Point, radius: f64) -> Result<Self> {
        space.validate(center)?;
        if !(radius > 0.0) || radius > space.inj_radius() {
            return Err(Error::domain(format!(
                "sampling radius {radius} must lie in (0, {}]",
                space.inj_radius()
            )));
        }
        let n = space.dim();
        let radial = match space {
            _ if n == 1 => Radial::Power,
            ModelSpace::Sphere { .. } => Radial::SphereReject,
            ModelSpace::Hyperbolic { .. } => {
                let q = radius / radius.sinh();
                let acceptance = q.powi(n as i32 - 1);
                if acceptance >= 0.05 {
                    Radial::HyperbolicPower {
                        scale: radius.sinh() / radius,
                    }
                } else {
                    Radial::HyperbolicExp
                }
            }
            _ => Radial::Power,
        };
        Ok(Self {
            space: space.clone(),
            center: center.clone(),
            radius,
            basis: space.tangent_basis(center),
            radial,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = self.space.dim() as f64;
        let m = self.space.dim() as i32 - 1;
        let r = self.radius;
        loop {
            match self.radial {
                Radial::Power => return r * rng.random::<f64>().powf(1.0 / n),
                Radial::SphereReject => {
                    let t = r * rng.random::<f64>().powf(1.0 / n);
                    let accept = if t == 0.0 { 1.0 } else { (t.sin() / t).powi(m) };
                    if rng.random::<f64>() < accept {
                        return t;
                    }
                }
                Radial::HyperbolicPower { scale } => {
                    let t = r * rng.random::<f64>().powf(1.0 / n);
                    let accept = if t == 0.0 {
                        scale.powi(-m)
                    } else {
                        (t.sinh() / t / scale).powi(m)
                    };
                    if rng.random::<f64>() < accept {
                        return t;
                    }
                }
                Radial::HyperbolicExp => {
                    let k = m as f64;
                    let u: f64 = rng.random();
                    let t = r + (u + (1.0 - u) * (-k * r).exp()).ln() / k;
                    let accept = (1.0 - (-2.0 * t).exp()).powi(m);
                    if t >= 0.0 && rng.random::<f64>() < accept {
                        return t;
                    }
                }
            }
        }
    }

    /// One point, uniform w.r.t. Riemannian volume on the open ball.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let n = self.space.dim();
        loop {
            let t = self.sample_radius(rng);
            let mut dir = vec![0.0; n];
            let mut norm = 0.0;
            while norm == 0.0 {
                dir.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            }
            let mut v = vec![0.0; self.space.ambient_dim()];
            for (e, g) in self.basis.iter().zip(&dir) {
                let c = t * g / norm;
                v.iter_mut().zip(e).for_each(|(vi, ei)| *vi += c * ei);
            }
            let p = self.space.exp_map(&self.center, &v);
            // roundoff in the exponential map can land exactly on the boundary
            if self.space.dist(&self.center, &p) < self.radius {
                return p;
            }
        }
    }
}

/// Draw one point uniformly (w.r.t. Riemannian volume) from the open ball
/// D_r(center).
pub fn sample_ball<R: Rng + ?Sized>(
    space: &ModelSpace,
    center: &Point,
    r: f64,
    rng: &mut R,
) -> Result<Point> {
    Ok(BallSampler::new(space, center, r)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tiny_radius_stays_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for space in [
            ModelSpace::euclidean(3).unwrap(),
            ModelSpace::sphere(2).unwrap(),
            ModelSpace::hyperbolic(4).unwrap(),
            ModelSpace::flat_torus(vec![1.0, 2.0]).unwrap(),
        ] {
            let c = space.origin();
            let r = 1e-9;
            for _ in 0..1000 {
                let p = sample_ball(&space, &c, r, &mut rng).unwrap();
                assert!(space.dist(&c, &p) < r);
                assert!(space.validate(&p).is_ok());
            }
        }
    }

    #[test]
    fn one_dimensional_mean() {
        let r1 = ModelSpace::euclidean(1).unwrap();
        let c = Point::new(vec![2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let sampler = BallSampler::new(&r1, &c, 0.5).unwrap();
        let mean = (0..n)
            .map(|_| sampler.sample(&mut rng).coords()[0])
            .sum::<f64>()
            / n as f64;
        // uniform on (1.5, 2.5): σ = 0.5/√3
        let sigma = 0.5 / 3f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn rejects_oversized_radius() {
        let s2 = ModelSpace::sphere(2).unwrap();
        assert!(BallSampler::new(&s2, &s2.origin(), 3.2).is_err());
    }
}

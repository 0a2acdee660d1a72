//! Seeded random fixtures: ball families and weighted atoms on each model
//! space, with radii inside the 4-proper range.

use crate::covering::{BallFamily, GeodesicBall};
use crate::error::Result;
use crate::geometry::{ModelSpace, Point};
use crate::measures::AtomicMeasure;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Radius range used for random families on `space`.
///
/// * ℝⁿ: [0.01, 0.2]
/// * Sⁿ: [0.02, 0.35] (below π/8 = inj/8)
/// * Hⁿ: [0.02, 0.5]
/// * torus: [0.005, min(P)/8] (4-proper)
pub fn radius_range(space: &ModelSpace) -> (f64, f64) {
    match space {
        ModelSpace::Euclidean { .. } => (0.01, 0.2),
        ModelSpace::Sphere { .. } => (0.02, 0.35),
        ModelSpace::Hyperbolic { .. } => (0.02, 0.5),
        ModelSpace::FlatTorus { .. } => (0.005, space.inj_radius() / 4.0),
    }
}

/// A random point: uniform in [0,1]ⁿ on ℝⁿ, uniform on Sⁿ, within
/// hyperbolic distance 2 of the vertex on Hⁿ, uniform on the torus.
pub fn random_point<R: Rng + ?Sized>(space: &ModelSpace, rng: &mut R) -> Point {
    let n = space.dim();
    match space {
        ModelSpace::Euclidean { .. } => Point::new((0..n).map(|_| rng.random::<f64>()).collect()),
        ModelSpace::Sphere { .. } => {
            let v: Vec<f64> = (0..=n).map(|_| rng.sample(StandardNormal)).collect();
            space.project(v)
        }
        ModelSpace::Hyperbolic { .. } => {
            let origin = space.origin();
            let dir: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dir
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let t = 2.0 * rng.random::<f64>();
            let mut v = vec![0.0];
            v.extend(dir.iter().map(|x| t * x / norm));
            space.exp_map(&origin, &v)
        }
        ModelSpace::FlatTorus { periods } => {
            Point::new(periods.iter().map(|p| p * rng.random::<f64>()).collect())
        }
    }
}

/// `count` balls with random centers and radii in [`radius_range`].
pub fn random_family<R: Rng + ?Sized>(
    space: &ModelSpace,
    count: usize,
    rng: &mut R,
) -> Result<BallFamily> {
    let (lo, hi) = radius_range(space);
    let balls = (0..count)
        .map(|_| {
            let c = random_point(space, rng);
            GeodesicBall::new(c, lo + (hi - lo) * rng.random::<f64>())
        })
        .collect();
    BallFamily::new(space.clone(), balls)
}

/// `count` atoms at random points with weights k/8, k = 1..=16, so that sums
/// and products by small dyadic factors stay exact.
pub fn random_atoms<R: Rng + ?Sized>(
    space: &ModelSpace,
    count: usize,
    rng: &mut R,
) -> Result<AtomicMeasure> {
    let points = (0..count).map(|_| random_point(space, rng)).collect();
    let weights = (0..count)
        .map(|_| rng.random_range(1..=16) as f64 / 8.0)
        .collect();
    AtomicMeasure::new(points, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid_and_seeded() {
        for space in [
            ModelSpace::euclidean(2).unwrap(),
            ModelSpace::sphere(2).unwrap(),
            ModelSpace::hyperbolic(2).unwrap(),
            ModelSpace::flat_torus(vec![1.0, 1.5]).unwrap(),
        ] {
            let a = random_family(&space, 50, &mut rng(3)).unwrap();
            let b = random_family(&space, 50, &mut rng(3)).unwrap();
            assert_eq!(a, b);
            let (lo, hi) = radius_range(&space);
            assert!(a.balls().iter().all(|x| x.radius >= lo && x.radius <= hi));
            let atoms = random_atoms(&space, 20, &mut rng(4)).unwrap();
            atoms.validate(&space).unwrap();
        }
    }

    #[test]
    fn hyperbolic_points_within_two() {
        let h2 = ModelSpace::hyperbolic(2).unwrap();
        let mut r = rng(1);
        for _ in 0..200 {
            let p = random_point(&h2, &mut r);
            assert!(h2.dist(&h2.origin(), &p) <= 2.0 + 1e-12);
        }
    }
}

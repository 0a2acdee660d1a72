//! Ball and region integrals of density fields: tensor polar quadrature and
//! partitioned Monte Carlo.

use super::{DensityField, IntegrationConfig, MassValue};
use crate::error::{Error, Result};
use crate::geometry::{BallSampler, ModelSpace, Point};
use crate::quadrature::gauss_legendre_on;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Largest tensor grid evaluated by one quadrature pass.
pub const MAX_QUADRATURE_POINTS: usize = 4_000_000;

/// Relative accuracy targeted by order doubling.
pub const QUADRATURE_REL_TOL: f64 = 1e-8;

const MAX_DOUBLINGS: usize = 4;

/// Directions on S^{n−1} with weights summing to its area.
///
/// Circle: trapezoid rule with 2p nodes. Each further polar angle φ adds
/// p Gauss–Legendre nodes on [0, π] weighted by sin^{k}φ.
pub fn sphere_rule(n: usize, p: usize) -> Vec<(Vec<f64>, f64)> {
    if n == 1 {
        return vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)];
    }
    let m = 2 * p;
    let mut rule: Vec<(Vec<f64>, f64)> = (0..m)
        .map(|k| {
            let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
            (vec![th.cos(), th.sin()], 2.0 * PI / m as f64)
        })
        .collect();
    for k in 1..n - 1 {
        let polar = gauss_legendre_on(p, 0.0, PI);
        let mut next = Vec::with_capacity(rule.len() * p);
        for &(phi, w) in &polar {
            let (s, c) = phi.sin_cos();
            let wphi = w * s.powi(k as i32);
            for (u, wu) in &rule {
                let mut v = Vec::with_capacity(u.len() + 1);
                v.push(c);
                v.extend(u.iter().map(|x| s * x));
                next.push((v, wu * wphi));
            }
        }
        rule = next;
    }
    rule
}

fn polar_points(n: usize, p: usize) -> usize {
    if n == 1 {
        2 * p
    } else {
        2 * p.pow(n as u32)
    }
}

fn polar_pass(
    space: &ModelSpace,
    density: &DensityField,
    center: &Point,
    r: f64,
    p: usize,
) -> Result<f64> {
    let n = space.dim();
    let basis = space.tangent_basis(center);
    let dirs = sphere_rule(n, p);
    let amb = space.ambient_dim();
    let radial = gauss_legendre_on(p, 0.0, r);
    let shells: Vec<f64> = radial
        .par_iter()
        .map(|&(t, wt)| {
            let mut acc = 0.0;
            let mut v = vec![0.0; amb];
            for (u, wu) in &dirs {
                v.iter_mut().for_each(|x| *x = 0.0);
                for (e, ui) in basis.iter().zip(u) {
                    v.iter_mut().zip(e).for_each(|(vi, ei)| *vi += t * ui * ei);
                }
                let q = space.exp_map(center, &v);
                acc += wu * density.eval(q.coords())?;
            }
            Ok(acc * wt * space.radial_jacobian(t))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(shells.iter().sum())
}

/// ∫_{D_r(center)} density dvol by polar quadrature with order doubling.
/// The error estimate is the difference between the last two orders.
pub fn polar_quadrature(
    space: &ModelSpace,
    density: &DensityField,
    center: &Point,
    r: f64,
    order: usize,
) -> Result<MassValue> {
    let n = space.dim();
    let mut p = order.max(1);
    if polar_points(n, 2 * p) > MAX_QUADRATURE_POINTS {
        return Err(Error::invalid(format!(
            "polar quadrature of order {p} in dimension {n} exceeds {MAX_QUADRATURE_POINTS} nodes; use monte_carlo"
        )));
    }
    let mut prev = polar_pass(space, density, center, r, p)?;
    let mut best = MassValue {
        value: prev,
        error_estimate: f64::INFINITY,
    };
    for _ in 0..MAX_DOUBLINGS {
        if polar_points(n, 2 * p) > MAX_QUADRATURE_POINTS {
            break;
        }
        p *= 2;
        let cur = polar_pass(space, density, center, r, p)?;
        let err = (cur - prev).abs();
        best = MassValue {
            value: cur,
            error_estimate: err,
        };
        if err <= QUADRATURE_REL_TOL * cur.abs() {
            break;
        }
        prev = cur;
    }
    Ok(best)
}

/// Running sums of one Monte Carlo stream.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

/// Average of `f` over uniform draws from D_r(center), scaled by the ball
/// volume. Samples are split across `config.workers` streams derived from
/// (seed, stream index) and reduced in stream order.
pub fn monte_carlo<F>(
    space: &ModelSpace,
    center: &Point,
    r: f64,
    config: &IntegrationConfig,
    f: F,
) -> Result<MassValue>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    let volume = space.ball_volume(r)?;
    let sampler = BallSampler::new(space, center, r)?;
    let total = config.sample_count.max(1);
    let workers = config.workers.max(1).min(total);
    let parts: Vec<Moments> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let count = total / workers + usize::from(w < total % workers);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(w as u64);
            let mut m = Moments::default();
            for _ in 0..count {
                let y = f(&sampler.sample(&mut rng))?;
                m.count += 1;
                m.sum += y;
                m.sum_sq += y * y;
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all = Moments::default();
    for m in parts {
        all.count += m.count;
        all.sum += m.sum;
        all.sum_sq += m.sum_sq;
    }
    let nf = all.count as f64;
    let mean = all.sum / nf;
    let var = if all.count > 1 {
        ((all.sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MassValue {
        value: mean * volume,
        error_estimate: 3.0 * volume * (var / nf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rule_weights_sum_to_area() {
        for n in 1..=5 {
            let area = n as f64 * crate::geometry::unit_ball_volume(n);
            let rule = sphere_rule(n, 12);
            let s: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((s - area).abs() < 1e-12 * area, "n={n}: {s} vs {area}");
            for (u, _) in &rule {
                let norm: f64 = u.iter().map(|x| x * x).sum();
                assert!((norm - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sphere_rule_second_moment() {
        // ∫ u_1² over S² = 4π/3
        let rule = sphere_rule(3, 12);
        let m: f64 = rule.iter().map(|(u, w)| w * u[0] * u[0]).sum();
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}

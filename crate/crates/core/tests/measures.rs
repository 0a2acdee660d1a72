use proptest::prelude::*;
use rand::Rng;
use riemcover::covering::{color, greedy_select, overlap_sets, GeodesicBall};
use riemcover::fixtures::{random_atoms, random_family, random_point, rng};
use riemcover::measures::{
    ball_mass, region_mass, semicontinuity_probe, AtomicMeasure, DensityField, DensityMeasure,
    IntegrationConfig, Measure, Region,
};
use riemcover::{ModelSpace, Point, Tolerances};
use serde_json::json;

fn atomic(m: &AtomicMeasure) -> Measure {
    Measure::Atomic(m.clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn atomic_mass_monotone_and_right_continuous(seed in any::<u64>(), r1 in 0.01f64..0.3, r2 in 0.01f64..0.3) {
        let space = ModelSpace::euclidean(2).unwrap();
        let mut g = rng(seed);
        let mu = random_atoms(&space, 80, &mut g).unwrap();
        let x = random_point(&space, &mut g);
        let m = atomic(&mu);
        let mass = |r: f64| ball_mass(&m, &space, &GeodesicBall::new(x.clone(), r)).unwrap();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(mass(lo).value <= mass(hi).value);
        prop_assert_eq!(mass(lo).error_estimate, 0.0);
        // no atom at distance in [r, r + eps] ⇒ mass unchanged on that interval
        let eps = 1e-9;
        let atom_at = mu.points().iter().any(|p| {
            let d = space.dist(&x, p);
            d >= lo && d <= lo + eps
        });
        if !atom_at {
            prop_assert_eq!(mass(lo).value, mass(lo + eps).value);
        }
    }

    #[test]
    fn atomic_mass_is_additive_over_disjoint_balls(seed in any::<u64>()) {
        let space = ModelSpace::sphere(2).unwrap();
        let mut g = rng(seed);
        let mu = random_atoms(&space, 200, &mut g).unwrap();
        let fam = random_family(&space, 60, &mut g).unwrap();
        let sel = greedy_select(&fam);
        let col = color(&sel, &overlap_sets(&sel));
        let m = atomic(&mu);
        for f in &col.families {
            let balls: Vec<GeodesicBall> = f.iter().map(|&j| sel.ball(j).clone()).collect();
            let sum: f64 = balls.iter().map(|b| ball_mass(&m, &space, b).unwrap().value).sum();
            let union: f64 = mu
                .atoms()
                .filter(|(p, _)| balls.iter().any(|b| b.contains(&space, p)))
                .map(|(_, w)| w)
                .sum();
            // weights are multiples of 1/8, so both sums are exact
            prop_assert_eq!(sum, union);
        }
    }

    #[test]
    fn reweighted_measure_is_absolutely_continuous(seed in any::<u64>()) {
        let space = ModelSpace::euclidean(2).unwrap();
        let mut g = rng(seed);
        let base = random_atoms(&space, 40, &mut g).unwrap();
        // zero out a random subset of atoms in ν₁
        let w1: Vec<f64> = base.weights().iter().map(|&w| if g.random_bool(0.3) { 0.0 } else { w }).collect();
        let nu1 = AtomicMeasure::new(base.points().to_vec(), w1).unwrap();
        let nu2 = nu1.reweighted(|p, w| w * (1.0 + p.coords()[0].powi(2))).unwrap();
        for _ in 0..20 {
            let set: Vec<Point> = nu1.points().iter().filter(|_| g.random_bool(0.5)).cloned().collect();
            if nu1.mass_of_points(&set) == 0.0 {
                prop_assert_eq!(nu2.mass_of_points(&set), 0.0);
            }
        }
        let nulls: Vec<Point> = nu1.atoms().filter(|(_, w)| *w == 0.0).map(|(p, _)| p.clone()).collect();
        prop_assert_eq!(nu2.mass_of_points(&nulls), 0.0);
    }
}

fn random_density(g: &mut impl Rng, ambient: usize) -> DensityField {
    let vec = |g: &mut dyn FnMut() -> f64| (0..ambient).map(|_| g()).collect::<Vec<f64>>();
    match g.random_range(0..3) {
        0 => {
            let a = vec(&mut || g.random_range(-1.0..1.0));
            DensityField::from_registry(
                "affine",
                json!({"a": a, "b": 4.0}).as_object().unwrap().clone(),
            )
            .unwrap()
        }
        1 => {
            let a = vec(&mut || g.random_range(-1.0..1.0));
            let q = vec(&mut || g.random_range(0.0..2.0));
            DensityField::from_registry(
                "quadratic",
                json!({"a": a, "q": q, "b": 3.0})
                    .as_object()
                    .unwrap()
                    .clone(),
            )
            .unwrap()
        }
        _ => {
            let c = vec(&mut || g.random_range(-0.5..0.5));
            let sigma = g.random_range(0.1..1.0);
            DensityField::from_registry(
                "gaussian",
                json!({"center": c, "sigma": sigma})
                    .as_object()
                    .unwrap()
                    .clone(),
            )
            .unwrap()
        }
    }
}

#[test]
fn quadrature_and_monte_carlo_agree() {
    let spaces = [
        ModelSpace::euclidean(2).unwrap(),
        ModelSpace::sphere(2).unwrap(),
        ModelSpace::hyperbolic(2).unwrap(),
        ModelSpace::euclidean(3).unwrap(),
        ModelSpace::sphere(3).unwrap(),
    ];
    let mut g = rng(11);
    for i in 0..50 {
        let space = &spaces[i % spaces.len()];
        let field = random_density(&mut g, space.ambient_dim());
        let center = if space.kind() == "hyperbolic" {
            space.origin()
        } else {
            random_point(space, &mut g)
        };
        let ball = GeodesicBall::new(center, g.random_range(0.05..0.5));
        let q = ball_mass(
            &Measure::Density(DensityMeasure::new(
                field.clone(),
                IntegrationConfig::quadrature(16),
            )),
            space,
            &ball,
        )
        .unwrap();
        let mc = ball_mass(
            &Measure::Density(DensityMeasure::new(
                field,
                IntegrationConfig::monte_carlo(20_000, i as u64, 2),
            )),
            space,
            &ball,
        )
        .unwrap();
        assert!(
            (q.value - mc.value).abs() <= 3.0 * (q.error_estimate + mc.error_estimate),
            "pair {i}: quadrature {q:?} vs monte carlo {mc:?}"
        );
    }
}

#[test]
fn unit_square_density_mass() {
    let space = ModelSpace::euclidean(2).unwrap();
    let region = Region::coordinate_box(vec![0.0, 0.0], vec![1.0, 1.0])
        .with_bound(GeodesicBall::new(Point::new(vec![0.5, 0.5]), 0.75));
    let m = Measure::Density(DensityMeasure::new(
        DensityField::volume(),
        IntegrationConfig::monte_carlo(200_000, 5, 4),
    ));
    let v = region_mass(&m, &space, &region).unwrap();
    assert!((v.value - 1.0).abs() <= 3.0 * v.error_estimate, "{v:?}");
    assert!(v.error_estimate > 0.0);
}

#[test]
fn region_mass_of_atoms() {
    let space = ModelSpace::euclidean(2).unwrap();
    let mu = random_atoms(&space, 30, &mut rng(2)).unwrap();
    let m = atomic(&mu);
    assert_eq!(
        region_mass(&m, &space, &Region::nothing()).unwrap().value,
        0.0
    );
    assert_eq!(
        region_mass(&m, &space, &Region::everything())
            .unwrap()
            .value,
        mu.total_mass()
    );
}

#[test]
fn semicontinuity_with_boundary_atoms() {
    let tol = Tolerances::default();
    let space = ModelSpace::euclidean(2).unwrap();
    for seed in 0..100u64 {
        let mut g = rng(seed);
        let x = random_point(&space, &mut g);
        let r0 = g.random_range(0.05..0.3);
        let mut points = random_atoms(&space, 30, &mut g).unwrap().points().to_vec();
        // one atom on the boundary sphere of D_r(x); r is reset to the computed
        // distance so the atom sits exactly on the boundary in floating point
        let phi: f64 = g.random_range(0.0..std::f64::consts::TAU);
        let edge = Point::new(vec![
            x.coords()[0] + r0 * phi.cos(),
            x.coords()[1] + r0 * phi.sin(),
        ]);
        let r = space.dist(&x, &edge);
        points.push(edge);
        let mu = AtomicMeasure::new(points.clone(), vec![1.0; points.len()]).unwrap();
        let dir: f64 = g.random_range(0.0..std::f64::consts::TAU);
        // geometric approach: the tail gets inside every atom's clearance
        let approach: Vec<Point> = (1..=60)
            .map(|m| {
                let s = r * 0.5f64.powi(m);
                Point::new(vec![
                    x.coords()[0] + s * dir.cos(),
                    x.coords()[1] + s * dir.sin(),
                ])
            })
            .collect();
        let rec = semicontinuity_probe(&atomic(&mu), &space, r, &x, &approach, &tol).unwrap();
        assert!(rec.passed, "seed {seed}: {rec:?}");
    }
}

#[test]
fn semicontinuity_of_constant_density() {
    let space = ModelSpace::sphere(2).unwrap();
    let m = Measure::Density(DensityMeasure::new(
        DensityField::constant(2.0).unwrap(),
        IntegrationConfig::default(),
    ));
    let x = space.origin();
    let approach: Vec<Point> = (1..=10)
        .map(|k| space.project(vec![1.0, 1.0 / k as f64, 0.0]))
        .collect();
    let rec = semicontinuity_probe(&m, &space, 0.3, &x, &approach, &Tolerances::default()).unwrap();
    assert!(rec.passed);
    assert_eq!(rec.metrics["mass_at_x"], rec.metrics["tail_min"]);
}

#[test]
fn measure_json_round_trip() {
    let space = ModelSpace::euclidean(2).unwrap();
    let mu = random_atoms(&space, 5, &mut rng(9)).unwrap();
    let m = atomic(&mu);
    let back: Measure = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back, m);
    let d: Measure = serde_json::from_value(json!({
        "kind": "density",
        "density": {"name": "quadratic", "q": [1.0, 0.0], "b": 1.0}
    }))
    .unwrap();
    let v = ball_mass(
        &d,
        &space,
        &GeodesicBall::new(Point::new(vec![0.5, 0.0]), 0.1),
    )
    .unwrap();
    let exact = std::f64::consts::PI * 0.01 * (1.25 + 0.0025);
    assert!((v.value - exact).abs() < 1e-10 * exact);
}

mod common;

use std::sync::Arc;

use morrey_core::extremal::*;
use morrey_core::geometry::{triangulate, DomainSpec, Point};
use morrey_core::plaplace::*;
use rand::Rng;

fn pole_solution(spec: &DomainSpec, h: f64, y: Point, p: f64) -> PotentialSolution {
    solve_pole(spec, &SolverConfig::with_p(p), h, y).unwrap()
}

#[test]
fn energy_descends_and_potential_is_positive() {
    let sol = pole_solution(&DomainSpec::square(1.0).unwrap(), 0.08, Point::new(0.3, -0.2), 3.5);
    let hist = &sol.report.energy_history;
    assert!(hist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{hist:?}");
    let mesh = &sol.field.mesh;
    for (k, &v) in sol.field.values.iter().enumerate() {
        if !mesh.boundary[k] {
            assert!(v > 0.0, "node {k}: {v}");
        }
    }
}

#[test]
fn discrete_morrey_inequality() {
    let spec = DomainSpec::unit_disk();
    let p = 3.0;
    let mut o = ExtremalOptions::new(0.05);
    o.sweep_spacing = Some(0.25);
    let lambda_p = find_extremal(&spec, &SolverConfig::with_p(p), &o).unwrap().lambda_p;
    let mesh = Arc::new(triangulate(&spec, 0.05, None).unwrap());
    let mut rng = common::rng(42);
    for k in 0..100 {
        let v = if k % 2 == 0 {
            // rough random admissible field
            let vals = mesh
                .boundary
                .iter()
                .map(|&b| if b { 0.0 } else { rng.random_range(-1.0..1.0) })
                .collect();
            FieldFunction::new(mesh.clone(), vals).unwrap()
        } else {
            // near-optimal: ball extremals of random balls inside the disk
            let c = Point::polar(rng.random_range(0.0..0.5), rng.random_range(0.0..6.3));
            let r = rng.random_range(0.2..(1.0 - c.norm()));
            let amp = rng.random_range(0.1..3.0);
            FieldFunction::interpolate(mesh.clone(), |x| amp * (1.0 - (x.dist(c) / r).sqrt()).max(0.0))
        };
        let lhs = p_energy(&v, p).unwrap();
        let rhs = lambda_p * v.sup_norm().powf(p);
        assert!(lhs >= rhs * (1.0 - 1e-2), "{k}: {lhs} < {rhs}");
    }
}

#[test]
fn scale_covariance() {
    // lambda(c Omega) = c^{n - p} lambda(Omega) at matching resolution
    let p = 3.0;
    for (small, big) in [
        (DomainSpec::unit_disk(), DomainSpec::disk(Point::ORIGIN, 2.0).unwrap()),
        (DomainSpec::square(1.0).unwrap(), DomainSpec::square(2.0).unwrap()),
    ] {
        let a = pole_solution(&small, 0.05, Point::ORIGIN, p).lambda;
        let b = pole_solution(&big, 0.1, Point::ORIGIN, p).lambda;
        assert!((b / a - 0.5).abs() <= 0.5e-2, "{a} {b}");
    }
}

#[test]
fn domain_monotonicity() {
    // unit disk inside [-1, 1]^2 inside the disk of radius sqrt 2
    let p = 4.0;
    let inner = pole_solution(&DomainSpec::unit_disk(), 0.04, Point::ORIGIN, p).lambda;
    let mid = pole_solution(&DomainSpec::square(1.0).unwrap(), 0.04, Point::ORIGIN, p).lambda;
    let outer = pole_solution(&DomainSpec::disk(Point::ORIGIN, 2f64.sqrt()).unwrap(), 0.04, Point::ORIGIN, p).lambda;
    assert!(inner > mid && mid > outer, "{inner} {mid} {outer}");
}

#[test]
fn landscape_argmin_ignores_initial_amplitude() {
    let spec = DomainSpec::unit_disk();
    let cfg = SolverConfig::with_p(3.0);
    let h = 0.08;
    let poles = sweep_nodes(&spec, 0.3, h);
    let landscape = |c: f64| -> Point {
        let vals: Vec<(Point, f64)> = poles
            .iter()
            .map(|&y| {
                let mesh = Arc::new(triangulate(&spec, h, Some(y)).unwrap());
                let d = spec.boundary_distance(y);
                let init: Vec<f64> = mesh.vertices.iter().map(|x| c * (1.0 - x.dist(y) / d).max(0.0)).collect();
                (y, solve_potential_from(mesh, &cfg, &init).unwrap().lambda)
            })
            .collect();
        vals.iter().min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.x.total_cmp(&b.0.x))).unwrap().0
    };
    let base = landscape(1.0);
    assert!(base.norm() < 1e-12);
    for c in [0.1, 10.0] {
        assert_eq!(landscape(c), base);
    }
}

#[test]
fn green_duality_over_a_sweep() {
    let spec = DomainSpec::unit_disk();
    let p = 3.0;
    let sweep = pole_sweep(&spec, &SolverConfig::with_p(p), 0.3, 0.08).unwrap();
    let k = sweep.argmax_green();
    assert_eq!(sweep.samples[k].pole, sweep.best().pole);
    for s in &sweep.samples {
        let g = s.green_diagonal(p);
        assert!((g - s.lambda.powf(-1.0 / (p - 1.0))).abs() <= 1e-12 * g);
    }
}

#[test]
fn sweep_is_deterministic() {
    let spec = DomainSpec::square(1.0).unwrap();
    let cfg = SolverConfig::with_p(4.0);
    let a = pole_sweep(&spec, &cfg, 0.4, 0.1).unwrap();
    let b = pole_sweep(&spec, &cfg, 0.4, 0.1).unwrap();
    let bits = |r: &PoleSweepResult| r.samples.iter().map(|s| (s.pole.x.to_bits(), s.pole.y.to_bits(), s.lambda.to_bits())).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

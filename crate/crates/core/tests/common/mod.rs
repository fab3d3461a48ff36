//! Shared oracles and generators for the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use morrey_core::geometry::Point;
use morrey_core::shape::GridFunction;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random quasiconcave field on a centered `(2 half + 1)^2` grid: the
/// minimum of a few affine functions around a random peak, clamped to
/// `[0, 1]` and rounded down to the ladder `k / 64`. Superlevel sets are
/// convex polygons intersected with the lattice. With `zero_frame` the
/// outermost ring of nodes is set to zero. Draws whose lattice level sets
/// lose convexity to round-off at a ladder threshold are redrawn.
pub fn random_quasiconcave(rng: &mut impl Rng, half: usize, cell: f64, zero_frame: bool) -> GridFunction {
    loop {
        let u = draw(rng, half, cell, zero_frame);
        if u.check_quasiconcave().is_ok() {
            return u;
        }
    }
}

fn draw(rng: &mut impl Rng, half: usize, cell: f64, zero_frame: bool) -> GridFunction {
    let extent = half as f64 * cell;
    let center = Point::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)) * extent;
    let k = rng.random_range(3..=6);
    let phase = rng.random_range(0.0..TAU);
    let planes: Vec<(Point, f64)> = (0..k)
        .map(|i| {
            let a = phase + TAU * (i as f64 + rng.random_range(-0.3..0.3)) / k as f64;
            let slope = rng.random_range(0.8..2.5) / extent;
            (Point::polar(1.0, a), slope)
        })
        .collect();
    let peak = rng.random_range(0.6..1.4);
    let n = 2 * half + 1;
    let f = |x: Point| {
        let v = planes
            .iter()
            .map(|&(xi, s)| peak - s * xi.dot(x - center))
            .fold(f64::INFINITY, f64::min)
            .clamp(0.0, 1.0);
        (v * 64.0).floor() / 64.0
    };
    let u = GridFunction::centered(cell, half, f).expect("values lie in [0, 1]");
    if !zero_frame {
        return u;
    }
    let mut values = u.values().to_vec();
    for j in 0..n {
        for i in 0..n {
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                values[j * n + i] = 0.0;
            }
        }
    }
    GridFunction::new(u.origin, u.cell, n, n, values).unwrap()
}

/// Direct sup-min over all node pairs:
/// `u_rho(z) = max { min(u0(x), u1(y)) : (1 - rho) x + rho y = z }`,
/// evaluated at the nodes of `target` (a grid that contains every
/// combination point). Returns `None` if some combination point misses the
/// target grid.
pub fn brute_force_combination(u0: &GridFunction, u1: &GridFunction, rho: f64, target: &GridFunction) -> Option<Vec<f64>> {
    let mut out = vec![0.0f64; target.nx * target.ny];
    for j0 in 0..u0.ny {
        for i0 in 0..u0.nx {
            let a = u0.get(i0, j0);
            if a <= 0.0 {
                continue;
            }
            let x = u0.node(i0, j0);
            for j1 in 0..u1.ny {
                for i1 in 0..u1.nx {
                    let b = u1.get(i1, j1);
                    if b <= 0.0 {
                        continue;
                    }
                    let z = x * (1.0 - rho) + u1.node(i1, j1) * rho;
                    let d = (z - target.origin) * (1.0 / target.cell);
                    let (i, j) = (d.x.round(), d.y.round());
                    if (d.x - i).abs() > 1e-6 || (d.y - j).abs() > 1e-6 || i < 0.0 || j < 0.0 {
                        return None;
                    }
                    let (i, j) = (i as usize, j as usize);
                    if i >= target.nx || j >= target.ny {
                        return None;
                    }
                    let k = j * target.nx + i;
                    out[k] = out[k].max(a.min(b));
                }
            }
        }
    }
    Some(out)
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{superlevel_mask, GridFunction, LADDER_LEVELS};
use crate::error::{Error, Result};
use crate::geometry::{PixelMask, Point};

const MAX_DENOMINATOR: usize = 64;

/// `rho = a / b` with the smallest `b <= 64`.
pub fn rational_weight(rho: f64) -> Result<(usize, usize)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::OutOfRange(format!("combination weight {rho}")));
    }
    for b in 1..=MAX_DENOMINATOR {
        let a = (rho * b as f64).round();
        if (rho * b as f64 - a).abs() <= 1e-9 {
            return Ok((a as usize, b));
        }
    }
    Err(Error::UnsupportedWeight(rho))
}

/// Integer offset of `other` relative to `base` in cells, if the grids share
/// a lattice.
fn lattice_offset(base: Point, other: Point, cell: f64) -> Result<(i64, i64)> {
    let d = (other - base) * (1.0 / cell);
    let (dx, dy) = (d.x.round(), d.y.round());
    if (d.x - dx).abs() > 1e-9 || (d.y - dy).abs() > 1e-9 {
        return Err(Error::Grid("grids are not aligned on a common lattice".into()));
    }
    Ok((dx as i64, dy as i64))
}

fn same_cell(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::Grid(format!("cell sizes differ: {a} vs {b}")));
    }
    Ok(())
}

/// Maximal runs `[lo, hi]` of occupied cells in row `j`.
fn row_runs(m: &PixelMask, j: usize) -> Vec<(i64, i64)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < m.nx {
        if m.get(i, j) {
            let lo = i;
            while i + 1 < m.nx && m.get(i + 1, j) {
                i += 1;
            }
            runs.push((lo as i64, i as i64));
        }
        i += 1;
    }
    runs
}

/// Cell-center Minkowski combination `(1 - rho) A + rho B` with
/// `rho = a / b`. The combined centers live on the lattice refined by `b`,
/// so the result has cell size `cell / b`; every output cell is occupied
/// iff its center is `(1 - rho) x + rho y` for occupied centers `x`, `y`.
pub fn minkowski_combine_masks(a_mask: &PixelMask, b_mask: &PixelMask, rho: f64) -> Result<PixelMask> {
    same_cell(a_mask.cell, b_mask.cell)?;
    let (a, b) = rational_weight(rho)?;
    let (ca, cb) = ((b - a) as i64, a as i64);
    let (dx, dy) = lattice_offset(a_mask.origin, b_mask.origin, a_mask.cell)?;
    let span = |na: usize, nb: usize, d: i64| (cb * d, ca * (na as i64 - 1) + cb * (d + nb as i64 - 1));
    let (mx0, mx1) = span(a_mask.nx, b_mask.nx, dx);
    let (my0, my1) = span(a_mask.ny, b_mask.ny, dy);
    let (nx, ny) = ((mx1 - mx0 + 1) as usize, (my1 - my0 + 1) as usize);
    let cell = a_mask.cell / b as f64;
    let origin = a_mask.origin + Point::new(0.5, 0.5) * (a_mask.cell - cell) + Point::new(mx0 as f64, my0 as f64) * cell;
    let mut out = PixelMask::empty(origin, cell, nx, ny);
    let runs_a: Vec<Vec<(i64, i64)>> = (0..a_mask.ny).map(|j| row_runs(a_mask, j)).collect();
    let runs_b: Vec<Vec<(i64, i64)>> = (0..b_mask.ny).map(|j| row_runs(b_mask, j)).collect();
    let mut diff = vec![0i32; nx + 1];
    for (jb, rb) in runs_b.iter().enumerate() {
        if rb.is_empty() {
            continue;
        }
        for (ja, ra) in runs_a.iter().enumerate() {
            if ra.is_empty() {
                continue;
            }
            let row = (ca * ja as i64 + cb * (dy + jb as i64) - my0) as usize;
            diff.iter_mut().for_each(|d| *d = 0);
            let mut mark = |lo: i64, hi: i64| {
                diff[(lo - mx0) as usize] += 1;
                diff[(hi - mx0) as usize + 1] -= 1;
            };
            for &(a0, a1) in ra {
                for &(b0, b1) in rb {
                    if cb <= 1 {
                        for i in a0..=a1 {
                            mark(ca * i + cb * (dx + b0), ca * i + cb * (dx + b1));
                        }
                    } else if ca == 1 {
                        for k in b0..=b1 {
                            mark(a0 + cb * (dx + k), a1 + cb * (dx + k));
                        }
                    } else {
                        for i in a0..=a1 {
                            for k in b0..=b1 {
                                let m = ca * i + cb * (dx + k);
                                mark(m, m);
                            }
                        }
                    }
                }
            }
            let mut acc = 0;
            for (i, d) in diff.iter().take(nx).enumerate() {
                acc += d;
                if acc > 0 {
                    out.set(i, row, true);
                }
            }
        }
    }
    Ok(out)
}

/// `u_rho(z) = sup { min(u0(x), u1(y)) : z = (1 - rho) x + rho y }`,
/// assembled level by level: the superlevel sets of `u_rho` on the ladder
/// `j / 64` are the Minkowski combinations of those of the inputs, and
/// `u_rho` is their layer-cake sum. Values are therefore exact for inputs
/// on the ladder and rounded down to it otherwise. The result lives on the
/// grid refined by the denominator of `rho` and is certified quasiconcave
/// (see [`GridFunction::is_certified`]).
pub fn minkowski_combination(u0: &GridFunction, u1: &GridFunction, rho: f64) -> Result<GridFunction> {
    same_cell(u0.cell, u1.cell)?;
    lattice_offset(u0.origin, u1.origin, u0.cell)?;
    rational_weight(rho)?;
    u0.check_quasiconcave()?;
    u1.check_quasiconcave()?;
    let empty = minkowski_combine_masks(&u0.mask_grid(), &u1.mask_grid(), rho)?;
    let layers: Vec<PixelMask> = (0..LADDER_LEVELS)
        .into_par_iter()
        .map(|j| -> Result<PixelMask> {
            let t = j as f64 / LADDER_LEVELS as f64;
            minkowski_combine_masks(&superlevel_mask(u0, t)?, &superlevel_mask(u1, t)?, rho)
        })
        .collect::<Result<_>>()?;
    let mut count = vec![0u32; empty.nx * empty.ny];
    for layer in &layers {
        for (i, j) in layer.occupied() {
            count[j * empty.nx + i] += 1;
        }
    }
    let values = count.iter().map(|&c| c as f64 / LADDER_LEVELS as f64).collect();
    let origin = empty.origin + Point::new(0.5, 0.5) * empty.cell;
    Ok(GridFunction::new(origin, empty.cell, empty.nx, empty.ny, values)?.certify())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinityReport {
    pub passed: bool,
    /// `(1 - rho) x0 + rho x1`.
    pub expected: Point,
    /// Maximizing node of `u_rho` closest to `expected`.
    pub argmax: Point,
    pub distance: f64,
    pub max_value: f64,
}

/// Inputs must attain their maximum (1 up to round-off) at the grid nodes
/// nearest `x0`, `x1`. The maximizer of `u_rho` sits at `(1 - rho) x0 + rho x1` (within one
/// input cell) and `max u_rho = 1` up to one ladder rung.
pub fn maximizer_affinity_check(
    u0: &GridFunction,
    u1: &GridFunction,
    rho: f64,
    x0: Point,
    x1: Point,
) -> Result<AffinityReport> {
    for (u, x) in [(u0, x0), (u1, x1)] {
        let v = nearest_value(u, x);
        if !(v == u.max() && v >= 1.0 - 1e-6) {
            return Err(Error::Precondition(format!("input must attain its maximum 1 at {x:?}, found {v}")));
        }
    }
    let ur = minkowski_combination(u0, u1, rho)?;
    let expected = x0.lerp(x1, rho);
    let top = ur.max();
    let mut best = (Point::ORIGIN, f64::INFINITY);
    for j in 0..ur.ny {
        for i in 0..ur.nx {
            if ur.get(i, j) >= top {
                let d = ur.node(i, j).dist(expected);
                if d < best.1 {
                    best = (ur.node(i, j), d);
                }
            }
        }
    }
    let passed = best.1 <= u0.cell * (1.0 + 1e-9) && top >= 1.0 - 1.0 / LADDER_LEVELS as f64;
    Ok(AffinityReport { passed, expected, argmax: best.0, distance: best.1, max_value: top })
}

fn nearest_value(u: &GridFunction, x: Point) -> f64 {
    let d = (x - u.origin) * (1.0 / u.cell);
    let (i, j) = (d.x.round(), d.y.round());
    if i < 0.0 || j < 0.0 || i as usize >= u.nx || j as usize >= u.ny {
        return f64::NAN;
    }
    u.get(i as usize, j as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert_eq!(rational_weight(0.25).unwrap(), (1, 4));
        assert_eq!(rational_weight(0.5).unwrap(), (1, 2));
        assert_eq!(rational_weight(0.0).unwrap(), (0, 1));
        assert_eq!(rational_weight(1.0).unwrap(), (1, 1));
        assert_eq!(rational_weight(3.0 / 7.0).unwrap(), (3, 7));
        assert!(matches!(rational_weight(1.0 / std::f64::consts::PI), Err(Error::UnsupportedWeight(_))));
        assert!(rational_weight(1.5).is_err());
    }

    #[test]
    fn mask_combination_of_segments() {
        // centers 0..=2 and 4..=4 (one row): halfway sums are 2, 2.5, 3
        let a = PixelMask::from_fn(Point::new(-0.5, -0.5), 1.0, 5, 1, |i, _| i <= 2);
        let b = PixelMask::from_fn(Point::new(-0.5, -0.5), 1.0, 5, 1, |i, _| i == 4);
        let c = minkowski_combine_masks(&a, &b, 0.5).unwrap();
        assert_eq!(c.cell, 0.5);
        let centers: Vec<f64> = c.occupied().map(|(i, j)| c.cell_center(i, j).x).collect();
        assert_eq!(centers, vec![2.0, 2.5, 3.0]);
    }

    #[test]
    fn self_combination_is_identity_on_coarse_nodes() {
        let u = GridFunction::talenti(3.0, Point::ORIGIN, 1.0, 0.1, 11).unwrap();
        let r = minkowski_combination(&u, &u, 0.5).unwrap();
        assert!(r.is_certified() && !u.is_certified());
        for j in 0..u.ny {
            for i in 0..u.nx {
                let v = r.get(2 * i, 2 * j);
                assert!(r.node(2 * i, 2 * j).dist(u.node(i, j)) < 1e-12);
                assert!((v - u.get(i, j)).abs() <= 1.0 / 64.0 + 1e-12);
            }
        }
    }

    #[test]
    fn affinity_endpoints() {
        let u0 = GridFunction::talenti(3.0, Point::new(-0.2, 0.0), 0.7, 0.1, 10).unwrap();
        let u1 = GridFunction::talenti(3.0, Point::new(3.0 * 0.1, 0.1), 0.7, 0.1, 10).unwrap();
        let x0 = Point::new(-0.2, 0.0);
        let x1 = Point::new(3.0 * 0.1, 0.1);
        for rho in [0.0, 0.5, 1.0] {
            let rep = maximizer_affinity_check(&u0, &u1, rho, x0, x1).unwrap();
            assert!(rep.passed, "{rho}: {rep:?}");
        }
        assert!(maximizer_affinity_check(&u0, &u1, 0.5, x1, x0).is_err());
    }
}

//! Calculus of quasiconcave grid functions: superlevel sets, Minkowski
//! combinations, support profiles, Steiner rearrangement.

mod minkowski;
mod steiner;
mod support;

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::{polygon::convex_hull, PixelMask, Point};
use crate::plaplace::FieldFunction;

pub use minkowski::{
    maximizer_affinity_check, minkowski_combination, minkowski_combine_masks, rational_weight,
    AffinityReport,
};
pub use steiner::{
    grid_p_energy, polya_szego_check, steiner_argmax_check, steiner_rearrange, PolyaSzegoReport,
    SteinerArgmaxReport,
};
pub use support::{
    radial_support_ode_residual, radial_support_ode_residual_with_exponent, support_profile,
    SupportProfile,
};

/// Levels of the layer-cake ladder `t_j = j / J`.
pub const LADDER_LEVELS: usize = 64;

/// Nodal values on the uniform grid `origin + (i, j) * cell`, stored
/// row-major by `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub origin: Point,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    values: Vec<f64>,
    support: Vec<bool>,
    /// Quasiconcave by construction (a Minkowski combination of checked
    /// inputs); the lattice test is skipped.
    certified: bool,
}

impl GridFunction {
    /// Support is taken to be `{u > 0}`.
    pub fn new(origin: Point, cell: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        let support = values.iter().map(|&v| v > 0.0).collect();
        Self::with_support(origin, cell, nx, ny, values, support)
    }

    pub fn with_support(
        origin: Point,
        cell: f64,
        nx: usize,
        ny: usize,
        values: Vec<f64>,
        support: Vec<bool>,
    ) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) || nx == 0 || ny == 0 {
            return Err(Error::Grid(format!("bad grid {nx}x{ny} with cell {cell}")));
        }
        if values.len() != nx * ny || support.len() != nx * ny {
            return Err(Error::Grid(format!("{} values for a {nx}x{ny} grid", values.len())));
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err(Error::OutOfRange(format!("grid value {} at {k} (must lie in [0, 1])", values[k])));
        }
        if let Some(k) = (0..values.len()).find(|&k| !support[k] && values[k] != 0.0) {
            return Err(Error::Grid(format!("non-zero value outside the support at {k}")));
        }
        Ok(Self { origin, cell, nx, ny, values, support, certified: false })
    }

    pub fn from_fn(origin: Point, cell: f64, nx: usize, ny: usize, f: impl Fn(Point) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(origin + Point::new(i as f64, j as f64) * cell));
            }
        }
        Self::new(origin, cell, nx, ny, values)
    }

    /// Square grid with nodes `k * cell`, `|k| <= half`, so the origin is a
    /// node.
    pub fn centered(cell: f64, half: usize, f: impl Fn(Point) -> f64) -> Result<Self> {
        let n = 2 * half + 1;
        let h = half as i64;
        // nodes as exact multiples k * cell
        let mut values = Vec::with_capacity(n * n);
        for j in -h..=h {
            for i in -h..=h {
                values.push(f(Point::new(i as f64 * cell, j as f64 * cell)));
            }
        }
        let o = -(half as f64) * cell;
        Self::new(Point::new(o, o), cell, n, n, values)
    }

    /// Ball extremal `1 - (|x - c| / r)^alpha`, cut off at zero, on a
    /// centered grid.
    pub fn talenti(p: f64, center: Point, r: f64, cell: f64, half: usize) -> Result<Self> {
        if !(p > 2.0) {
            return Err(Error::InvalidRegime { n: 2, p });
        }
        let a = (p - 2.0) / (p - 1.0);
        Self::centered(cell, half, |x| (1.0 - (x.dist(center) / r).powf(a)).max(0.0))
    }

    /// Linear interpolation of a mesh field (clamped into `[0, 1]`; zero
    /// outside the mesh).
    pub fn sample_field(field: &FieldFunction, cell: f64) -> Result<Self> {
        let (lo, hi) = field.mesh.vertices.iter().fold(
            (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
            |(lo, hi), v| (Point::new(lo.x.min(v.x), lo.y.min(v.y)), Point::new(hi.x.max(v.x), hi.y.max(v.y))),
        );
        let i0 = (lo.x / cell).floor() as i64 - 1;
        let j0 = (lo.y / cell).floor() as i64 - 1;
        let nx = ((hi.x / cell).ceil() as i64 + 1 - i0 + 1) as usize;
        let ny = ((hi.y / cell).ceil() as i64 + 1 - j0 + 1) as usize;
        let origin = Point::new(i0 as f64 * cell, j0 as f64 * cell);
        let top = field.sup_norm();
        let loc = field.mesh.locator();
        Self::from_fn(origin, cell, nx, ny, |x| {
            loc.interpolate(&field.values, x).map_or(0.0, |v| (v / top).clamp(0.0, 1.0))
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        self.origin + Point::new(i as f64, j as f64) * self.cell
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Grid node of the largest value (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (k, v);
            }
        }
        (best.0 % self.nx, best.0 / self.nx)
    }

    /// `[origin, cell, nx, ny]` mask grid whose cells are centered on the
    /// nodes.
    pub(crate) fn mask_grid(&self) -> PixelMask {
        PixelMask::empty(self.origin - Point::new(0.5, 0.5) * self.cell, self.cell, self.nx, self.ny)
    }

    /// `true` when every node on the outer frame is zero.
    pub fn vanishes_on_frame(&self) -> bool {
        (0..self.nx).all(|i| self.get(i, 0) == 0.0 && self.get(i, self.ny - 1) == 0.0)
            && (0..self.ny).all(|j| self.get(0, j) == 0.0 && self.get(self.nx - 1, j) == 0.0)
    }

    /// Minkowski combinations of checked inputs are quasiconcave in the
    /// continuum, but their lattice level sets need not pass the lattice
    /// test: `(1 - rho) A + rho B` is sparse on the refined lattice, and
    /// sliver-shaped inputs leave gaps of several cells.
    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub(crate) fn certify(mut self) -> Self {
        self.certified = true;
        self
    }

    /// Checks that every ladder superlevel set is lattice-convex: all grid
    /// nodes in the convex hull of `{u > t_j}` belong to it. Certified grids
    /// pass without the test.
    pub fn check_quasiconcave(&self) -> Result<()> {
        if self.certified {
            return Ok(());
        }
        self.check_quasiconcave_within(0)
    }

    /// Check with an explicit slack (Chebyshev distance in cells).
    pub fn check_quasiconcave_within(&self, slack: usize) -> Result<()> {
        for j in 0..LADDER_LEVELS {
            let t = j as f64 / LADDER_LEVELS as f64;
            if !lattice_convex_within(&superlevel_mask(self, t)?, slack) {
                return Err(Error::NotQuasiconcave { level: t });
            }
        }
        Ok(())
    }

    /// CSV: the header `origin_x,origin_y,cell,nx,ny`, one line with those
    /// numbers, then `ny` rows of `nx` values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["origin_x", "origin_y", "cell", "nx", "ny"])?;
        w.write_record([
            self.origin.x.to_string(),
            self.origin.y.to_string(),
            self.cell.to_string(),
            self.nx.to_string(),
            self.ny.to_string(),
        ])?;
        for row in self.values.chunks(self.nx) {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["origin_x", "origin_y", "cell", "nx", "ny"] {
            return Err(Error::Grid("expected header origin_x,origin_y,cell,nx,ny".into()));
        }
        let mut records = r.records();
        let meta = records.next().ok_or_else(|| Error::Grid("missing grid line".into()))??;
        let num = |k: usize| -> Result<f64> {
            meta.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Grid(format!("bad grid field {k}")))
        };
        let int = |k: usize| -> Result<usize> {
            meta.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Grid(format!("bad grid field {k}")))
        };
        let (origin, cell, nx, ny) = (Point::new(num(0)?, num(1)?), num(2)?, int(3)?, int(4)?);
        let mut values = Vec::with_capacity(nx * ny);
        for rec in records {
            let rec = rec?;
            if rec.len() != nx {
                return Err(Error::Grid(format!("row of {} values, expected {nx}", rec.len())));
            }
            for s in rec.iter() {
                values.push(s.trim().parse().map_err(|_| Error::Grid(format!("bad value {s:?}")))?);
            }
        }
        if values.len() != nx * ny {
            return Err(Error::Grid(format!("{} rows, expected {ny}", values.len() / nx.max(1))));
        }
        Self::new(origin, cell, nx, ny, values)
    }
}

/// `{u > t}` as a mask whose cells are centered on the grid nodes.
pub fn superlevel_mask(u: &GridFunction, t: f64) -> Result<PixelMask> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("level {t}")));
    }
    let mut m = u.mask_grid();
    for j in 0..u.ny {
        for i in 0..u.nx {
            if u.get(i, j) > t {
                m.set(i, j, true);
            }
        }
    }
    Ok(m)
}

/// All lattice points in the convex hull of the occupied cells are
/// occupied, or have an occupied cell within `slack` cells. Integer
/// coordinates keep the orientation tests exact.
fn lattice_convex_within(m: &PixelMask, slack: usize) -> bool {
    let pts: Vec<Point> = m.occupied().map(|(i, j)| Point::new(i as f64, j as f64)).collect();
    if pts.len() <= 1 {
        return true;
    }
    let hull = convex_hull(&pts);
    let coord = |f: fn(&Point) -> f64| pts.iter().map(move |p| f(p) as usize);
    let lo = (coord(|p| p.x).min().unwrap(), coord(|p| p.y).min().unwrap());
    let hi = (coord(|p| p.x).max().unwrap(), coord(|p| p.y).max().unwrap());
    let inside = |q: Point| -> bool {
        match hull.len() {
            2 => {
                let (a, b) = (hull[0], hull[1]);
                (b - a).cross(q - a) == 0.0 && (q - a).dot(q - b) <= 0.0
            }
            _ => (0..hull.len()).all(|k| {
                let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
                (b - a).cross(q - a) >= 0.0
            }),
        }
    };
    let near = |i: usize, j: usize| -> bool {
        let rows = j.saturating_sub(slack)..=(j + slack).min(m.ny - 1);
        rows.into_iter()
            .any(|jj| (i.saturating_sub(slack)..=(i + slack).min(m.nx - 1)).any(|ii| m.get(ii, jj)))
    };
    for j in lo.1..=hi.1 {
        for i in lo.0..=hi.0 {
            if !m.get(i, j) && inside(Point::new(i as f64, j as f64)) && !near(i, j) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn talenti_superlevel_is_a_disk() {
        let cell = 1.0 / 128.0;
        let u = GridFunction::talenti(3.0, Point::ORIGIN, 1.0, cell, 140).unwrap();
        let m = superlevel_mask(&u, 0.5).unwrap();
        // {1 - sqrt(r) > 1/2} = {r < 1/4}
        for (i, j) in m.occupied() {
            assert!(m.cell_center(i, j).norm() < 0.25 + cell);
        }
        let expected = std::f64::consts::PI / 16.0;
        assert!((m.area() - expected).abs() < 2.0 * std::f64::consts::PI * 0.25 * cell);
        assert!(lattice_convex_within(&m, 0));
    }

    #[test]
    fn level_zero_is_support_and_top_is_empty() {
        let u = GridFunction::talenti(4.0, Point::new(0.1, 0.0), 0.6, 0.05, 20).unwrap();
        let m = superlevel_mask(&u, 0.0).unwrap();
        for j in 0..u.ny {
            for i in 0..u.nx {
                assert_eq!(m.get(i, j), u.support()[j * u.nx + i]);
            }
        }
        assert!(superlevel_mask(&u, u.max().min(0.999_999)).unwrap().count() <= 1);
        assert!(superlevel_mask(&u, 1.0).is_err());
    }

    #[test]
    fn quasiconcavity_check() {
        let u = GridFunction::talenti(3.0, Point::ORIGIN, 1.0, 0.1, 12).unwrap();
        u.check_quasiconcave().unwrap();
        // two bumps: the mid levels are disconnected
        let v = GridFunction::centered(0.1, 12, |x| {
            let a = (1.0 - 3.0 * x.dist(Point::new(-0.6, 0.0))).max(0.0);
            let b = (1.0 - 3.0 * x.dist(Point::new(0.6, 0.0))).max(0.0);
            a.max(b)
        })
        .unwrap();
        assert!(matches!(v.check_quasiconcave(), Err(Error::NotQuasiconcave { .. })));
        assert!(v.check_quasiconcave_within(1).is_err());
        // a disk with a single-node hole passes only with slack
        let w = GridFunction::centered(0.1, 8, |x| {
            if x.dist(Point::new(0.1, 0.0)) < 1e-9 { 0.0 } else { (1.0 - x.norm()).max(0.0) }
        })
        .unwrap();
        assert!(w.check_quasiconcave().is_err());
        w.check_quasiconcave_within(1).unwrap();
    }

    #[test]
    fn csv_round_trip() {
        let u = GridFunction::talenti(3.5, Point::new(0.013, -0.2), 0.8, 0.07, 9).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("origin_x,origin_y,cell,nx,ny\n"));
        let v = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(u, v);
        assert!(GridFunction::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn invalid_grids() {
        assert!(GridFunction::new(Point::ORIGIN, 1.0, 2, 2, vec![0.0; 3]).is_err());
        assert!(GridFunction::new(Point::ORIGIN, 1.0, 1, 1, vec![1.5]).is_err());
        assert!(GridFunction::with_support(Point::ORIGIN, 1.0, 1, 1, vec![0.5], vec![false]).is_err());
    }
}

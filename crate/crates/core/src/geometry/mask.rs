use serde::{Deserialize, Serialize};

use super::{DomainSpec, Point};

/// Coordinate axis used to pick the lines of a Steiner symmetrization.
/// `X1` symmetrizes with respect to the x1 axis: every vertical line
/// `{x1 = a}` is replaced by an interval centered on `x2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X1,
    X2,
}

/// Boolean occupancy grid. Cell `(i, j)` covers
/// `origin + [i, i+1) * cell x [j, j+1) * cell`; row-major by `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelMask {
    pub origin: Point,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    data: Vec<bool>,
}

impl PixelMask {
    pub fn empty(origin: Point, cell: f64, nx: usize, ny: usize) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        Self { origin, cell, nx, ny, data: vec![false; nx * ny] }
    }

    pub fn from_fn(
        origin: Point,
        cell: f64,
        nx: usize,
        ny: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        let mut m = Self::empty(origin, cell, nx, ny);
        for j in 0..ny {
            for i in 0..nx {
                m.data[j * nx + i] = f(i, j);
            }
        }
        m
    }

    /// Rasterizes `spec` by sampling cell centers. The grid is placed so
    /// that both coordinate axes run through cell centers.
    pub fn rasterize(spec: &DomainSpec, cell: f64) -> Self {
        let (lo, hi) = spec.bounding_box();
        let k_lo = |v: f64| (v / cell).floor() as i64 - 1;
        let k_hi = |v: f64| (v / cell).ceil() as i64 + 1;
        let (kx0, kx1) = (k_lo(lo.x), k_hi(hi.x));
        let (ky0, ky1) = (k_lo(lo.y), k_hi(hi.y));
        let origin = Point::new((kx0 as f64 - 0.5) * cell, (ky0 as f64 - 0.5) * cell);
        let nx = (kx1 - kx0 + 1) as usize;
        let ny = (ky1 - ky0 + 1) as usize;
        Self::from_fn(origin, cell, nx, ny, |i, j| {
            spec.contains(Point::new(
                (kx0 + i as i64) as f64 * cell,
                (ky0 + j as i64) as f64 * cell,
            ))
        })
    }

    /// Default raster cell: 1/256 of the bounding-box diagonal.
    pub fn default_cell(spec: &DomainSpec) -> f64 {
        spec.diameter_bound() / 256.0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[j * self.nx + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[j * self.nx + i] = v;
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        self.origin + Point::new((i as f64 + 0.5) * self.cell, (j as f64 + 0.5) * self.cell)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.cell * self.cell
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).filter(move |&i| self.get(i, j)).map(move |i| (i, j)))
    }

    /// Occupied-cell count along each symmetrization line: per column for
    /// `X1`, per row for `X2`.
    pub fn line_counts(&self, axis: Axis) -> Vec<usize> {
        match axis {
            Axis::X1 => (0..self.nx).map(|i| (0..self.ny).filter(|&j| self.get(i, j)).count()).collect(),
            Axis::X2 => (0..self.ny).map(|j| (0..self.nx).filter(|&i| self.get(i, j)).count()).collect(),
        }
    }

    /// Steiner symmetrization: each line keeps its occupied-cell count and
    /// becomes a run centered on the axis. The grid grows if a run would not
    /// fit, so counts are always preserved.
    pub fn steiner_symmetrize(&self, axis: Axis) -> PixelMask {
        let counts = self.line_counts(axis);
        let (along_origin, len) = match axis {
            Axis::X1 => (self.origin.y, self.ny),
            Axis::X2 => (self.origin.x, self.nx),
        };
        let frame = AxisFrame::new(along_origin, self.cell);
        let max_count = counts.iter().copied().max().unwrap_or(0);
        let (lo, hi) = frame.run(max_count);
        // grow the grid symmetrically enough to hold the longest run
        let pad_lo = (-lo).max(0) as usize;
        let pad_hi = (hi - len as i64 + 1).max(0) as usize;
        let new_len = len + pad_lo + pad_hi;
        let shift = pad_lo as i64;
        let new_along_origin = along_origin - pad_lo as f64 * self.cell;
        let mut out = match axis {
            Axis::X1 => PixelMask::empty(
                Point::new(self.origin.x, new_along_origin),
                self.cell,
                self.nx,
                new_len,
            ),
            Axis::X2 => PixelMask::empty(
                Point::new(new_along_origin, self.origin.y),
                self.cell,
                new_len,
                self.ny,
            ),
        };
        for (line, &k) in counts.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let (a, b) = frame.run(k);
            for pos in a..=b {
                let pos = (pos + shift) as usize;
                match axis {
                    Axis::X1 => out.set(line, pos, true),
                    Axis::X2 => out.set(pos, line, true),
                }
            }
        }
        out
    }

    /// True when both masks share a grid and agree cellwise.
    pub fn same_cells(&self, other: &PixelMask) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.cell == other.cell
            && self.origin.dist(other.origin) <= 1e-9 * self.cell
            && self.data == other.data
    }

    /// Number of cells where two same-grid masks differ.
    pub fn symmetric_difference(&self, other: &PixelMask) -> usize {
        assert_eq!((self.nx, self.ny), (other.nx, other.ny), "grid mismatch");
        self.data.iter().zip(&other.data).filter(|(a, b)| a != b).count()
    }
}

/// Position of the symmetry axis within a line of cells, in cell units:
/// `axis = origin + (center + 0.5) * cell`.
pub(crate) struct AxisFrame {
    center: f64,
}

impl AxisFrame {
    pub(crate) fn new(origin: f64, cell: f64) -> Self {
        Self { center: -origin / cell - 0.5 }
    }

    /// Inclusive index range of a centered run of `k` cells. When the axis
    /// runs through a cell center, cells are added in the order
    /// 0, -1, +1, -2, +2, ... around it; when it runs along a cell edge the
    /// run straddles it.
    pub(crate) fn run(&self, k: usize) -> (i64, i64) {
        let k = k as i64;
        if k == 0 {
            return (0, -1);
        }
        let c = self.center;
        let frac = c - c.floor();
        if (frac - 0.5).abs() < 1e-9 {
            // axis on the edge between cells floor(c) and floor(c) + 1
            let below = c.floor() as i64;
            let lo = below - (k + 1) / 2 + 1;
            (lo, lo + k - 1)
        } else {
            let r0 = c.round() as i64;
            (r0 - k / 2, r0 + (k - 1) / 2)
        }
    }
}

/// Shorthand used by the shape calculus.
pub fn steiner_symmetrize_mask(mask: &PixelMask, axis: Axis) -> PixelMask {
    mask.steiner_symmetrize(axis)
}

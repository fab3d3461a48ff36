use serde::{Deserialize, Serialize};

use super::GridFunction;
use crate::error::{Error, Result};
use crate::extremal::{find_extremal, ExtremalOptions};
use crate::geometry::{AxisFrame, Axis, DomainSpec, PixelMask, Point};
use crate::plaplace::SolverConfig;

/// Steiner rearrangement: along every symmetrization line the values are
/// sorted in decreasing order and laid out symmetrically about the axis,
/// largest first, in the same cell order the set symmetrization uses. Hence
/// `{u* > t}` is the Steiner symmetrization of `{u > t}` for every `t`. The
/// grid grows when a line does not fit.
pub fn steiner_rearrange(u: &GridFunction, axis: Axis) -> GridFunction {
    let (lines, len, along_origin) = match axis {
        Axis::X1 => (u.nx, u.ny, u.origin.y),
        Axis::X2 => (u.ny, u.nx, u.origin.x),
    };
    let at = |line: usize, pos: usize| match axis {
        Axis::X1 => u.get(line, pos),
        Axis::X2 => u.get(pos, line),
    };
    let sorted: Vec<Vec<f64>> = (0..lines)
        .map(|l| {
            let mut v: Vec<f64> = (0..len).map(|k| at(l, k)).filter(|&x| x > 0.0).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
        .collect();
    let frame = AxisFrame::new(along_origin - 0.5 * u.cell, u.cell);
    let longest = sorted.iter().map(Vec::len).max().unwrap_or(0);
    let (lo, hi) = frame.run(longest);
    let pad_lo = (-lo).max(0) as usize;
    let pad_hi = (hi - len as i64 + 1).max(0) as usize;
    let new_len = len + pad_lo + pad_hi;
    let (nx, ny, origin) = match axis {
        Axis::X1 => (u.nx, new_len, u.origin - Point::new(0.0, pad_lo as f64 * u.cell)),
        Axis::X2 => (new_len, u.ny, u.origin - Point::new(pad_lo as f64 * u.cell, 0.0)),
    };
    let mut values = vec![0.0; nx * ny];
    for (l, vals) in sorted.iter().enumerate() {
        let mut prev = (0i64, -1i64);
        for (m, &v) in vals.iter().enumerate() {
            let next = frame.run(m + 1);
            // the one cell added when the run grows from m to m + 1
            let pos = if m == 0 || next.0 < prev.0 { next.0 } else { next.1 };
            prev = next;
            let pos = (pos + pad_lo as i64) as usize;
            match axis {
                Axis::X1 => values[pos * nx + l] = v,
                Axis::X2 => values[l * nx + pos] = v,
            }
        }
    }
    GridFunction::new(origin, u.cell, nx, ny, values).expect("rearrangement keeps values in [0, 1]")
}

/// `int |Du|^p` of the bilinear interpolant, 2x2 Gauss rule per cell.
pub fn grid_p_energy(u: &GridFunction, p: f64) -> f64 {
    let g = 0.5 / 3f64.sqrt();
    let q = [0.5 - g, 0.5 + g];
    let c = u.cell;
    let mut total = 0.0;
    for j in 0..u.ny.saturating_sub(1) {
        for i in 0..u.nx.saturating_sub(1) {
            let (u00, u10, u01, u11) = (u.get(i, j), u.get(i + 1, j), u.get(i, j + 1), u.get(i + 1, j + 1));
            if u00 == 0.0 && u10 == 0.0 && u01 == 0.0 && u11 == 0.0 {
                continue;
            }
            for &s in &q {
                for &t in &q {
                    let gx = ((1.0 - t) * (u10 - u00) + t * (u11 - u01)) / c;
                    let gy = ((1.0 - s) * (u01 - u00) + s * (u11 - u10)) / c;
                    total += 0.25 * (gx * gx + gy * gy).powf(0.5 * p);
                }
            }
        }
    }
    total * c * c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyaSzegoReport {
    pub energy_before: f64,
    pub energy_after: f64,
    pub passed: bool,
}

/// Energy does not increase under Steiner rearrangement, up to 1 % of the
/// original energy for raster error.
pub fn polya_szego_check(u: &GridFunction, p: f64, axis: Axis) -> Result<PolyaSzegoReport> {
    if !(p > 1.0) {
        return Err(Error::OutOfRange(format!("exponent {p}")));
    }
    if !u.vanishes_on_frame() {
        return Err(Error::Precondition("grid function must vanish on the grid boundary".into()));
    }
    let energy_before = grid_p_energy(u, p);
    let energy_after = grid_p_energy(&steiner_rearrange(u, axis), p);
    Ok(PolyaSzegoReport { energy_before, energy_after, passed: energy_after <= 1.01 * energy_before })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SteinerArgmaxReport {
    pub x0: Point,
    pub h: f64,
    pub lambda_p: f64,
    pub passed: bool,
}

/// For a domain that equals its Steiner symmetrization about both axes
/// (checked on the default raster), the extremal peaks at the origin:
/// `|x0| <= h`.
pub fn steiner_argmax_check(
    spec: &DomainSpec,
    config: &SolverConfig,
    opts: &ExtremalOptions,
) -> Result<SteinerArgmaxReport> {
    let mask = PixelMask::rasterize(spec, PixelMask::default_cell(spec));
    for axis in [Axis::X1, Axis::X2] {
        if !mask.steiner_symmetrize(axis).same_cells(&mask) {
            return Err(Error::Precondition(format!("domain is not Steiner symmetric ({axis:?})")));
        }
    }
    let sol = find_extremal(spec, config, opts)?;
    Ok(SteinerArgmaxReport { x0: sol.x0, h: opts.h, lambda_p: sol.lambda_p, passed: sol.x0.norm() <= opts.h })
}

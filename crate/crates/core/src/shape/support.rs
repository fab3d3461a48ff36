use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{superlevel_mask, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// `h(xi_k, t_j) = max { x . xi_k : u(x) > t_j }` over grid nodes, for the
/// directions `xi_k = (cos theta_k, sin theta_k)`, `theta_k = 2 pi k / K`.
/// Empty levels give `-inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportProfile {
    pub thetas: Vec<f64>,
    pub levels: Vec<f64>,
    /// `values[k][j]`.
    pub values: Vec<Vec<f64>>,
}

impl SupportProfile {
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k][j]
    }

    /// Largest increase of `t -> h(xi, t)` over consecutive levels (`<= 0`
    /// for a non-increasing profile).
    pub fn max_increase(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|row| row.windows(2).map(|w| w[1] - w[0]))
            .filter(|d| d.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Worst violation of `h(xi_a + xi_b) <= h(xi_a) + h(xi_b)` over
    /// direction pairs symmetric about a sampled direction; needs `K` even.
    pub fn sublinearity_violation(&self) -> f64 {
        let k = self.thetas.len();
        let mut worst = f64::NEG_INFINITY;
        for j in 0..self.levels.len() {
            for c in 0..k {
                for d in 1..k / 4 {
                    let (a, b) = ((c + k - d) % k, (c + d) % k);
                    let half = self.thetas[d] - self.thetas[0];
                    let lhs = 2.0 * half.cos() * self.values[c][j];
                    let rhs = self.values[a][j] + self.values[b][j];
                    if lhs.is_finite() && rhs.is_finite() {
                        worst = worst.max(lhs - rhs);
                    }
                }
            }
        }
        worst
    }

    /// CSV `theta,t,h`, one row per (direction, level).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "t", "h"])?;
        for (k, &th) in self.thetas.iter().enumerate() {
            for (j, &t) in self.levels.iter().enumerate() {
                w.write_record([th.to_string(), t.to_string(), self.values[k][j].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Support profile on `K` directions and the `J` levels `t_j = j / (J + 1)`.
/// The input must be quasiconcave (up to its raster slack).
pub fn support_profile(u: &GridFunction, directions: usize, levels: usize) -> Result<SupportProfile> {
    if directions == 0 || levels == 0 {
        return Err(Error::OutOfRange("direction and level counts must be positive".into()));
    }
    u.check_quasiconcave()?;
    let thetas: Vec<f64> = (0..directions).map(|k| TAU * k as f64 / directions as f64).collect();
    let ts: Vec<f64> = (1..=levels).map(|j| j as f64 / (levels + 1) as f64).collect();
    let masks = ts.iter().map(|&t| superlevel_mask(u, t)).collect::<Result<Vec<_>>>()?;
    let values = thetas
        .iter()
        .map(|&th| {
            let xi = Point::new(th.cos(), th.sin());
            masks
                .iter()
                .map(|m| m.occupied().map(|(i, j)| u.node(i, j).dot(xi)).fold(f64::NEG_INFINITY, f64::max))
                .collect()
        })
        .collect();
    Ok(SupportProfile { thetas, levels: ts, values })
}

/// Radial reduction of the level-set support equation: with
/// `R(t) = r (1 - t)^a` the residual is `R'^2 (n - 1) / R - (p - 1) R''`.
pub fn radial_support_ode_residual_with_exponent(p: f64, n: u32, t: f64, r: f64, a: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfRange(format!("level {t}")));
    }
    let s = 1.0 - t;
    let big_r = r * s.powf(a);
    let d1 = -r * a * s.powf(a - 1.0);
    let d2 = r * a * (a - 1.0) * s.powf(a - 2.0);
    Ok(d1 * d1 * (n as f64 - 1.0) / big_r - (p - 1.0) * d2)
}

/// Residual for the ball profile exponent `(p - 1) / (p - n)`; vanishes
/// identically.
pub fn radial_support_ode_residual(p: f64, n: u32, t: f64, r: f64) -> Result<f64> {
    if n == 0 || !(p > n as f64) {
        return Err(Error::InvalidRegime { n, p });
    }
    radial_support_ode_residual_with_exponent(p, n, t, r, (p - 1.0) / (p - n as f64))
}

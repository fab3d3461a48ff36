use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{triangulate, DomainSpec, Isometry, Point};
use crate::plaplace::{solve_potential, PotentialSolution, SolveReport, SolverConfig};

/// One pole of a sweep. Failed solves keep their error message and a NaN
/// energy.
#[derive(Clone, Debug, Serialize)]
pub struct PoleSample {
    pub pole: Point,
    pub lambda: f64,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

impl PoleSample {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// `G(y, y) = lambda(y)^{-1/(p-1)}`.
    pub fn green_diagonal(&self, p: f64) -> f64 {
        self.lambda.powf(-1.0 / (p - 1.0))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleSweepResult {
    pub samples: Vec<PoleSample>,
    pub argmin: usize,
    /// Grid spacing `g`; poles sit at integer multiples of it.
    pub spacing: f64,
    /// Mesh size of every pole solve.
    pub h: f64,
    pub p: f64,
}

/// Lexicographic order on coordinates, for deterministic tie-breaks.
pub(crate) fn lex(a: Point, b: Point) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

/// Index of the minimum of `key` over `items`, ties broken by the smaller
/// point in lexicographic order.
pub(crate) fn argmin_by(items: impl Iterator<Item = (usize, Point, f64)>) -> Option<usize> {
    items
        .filter(|(_, _, v)| v.is_finite())
        .min_by(|a, b| a.2.total_cmp(&b.2).then(lex(a.1, b.1)))
        .map(|(i, _, _)| i)
}

impl PoleSweepResult {
    pub fn best(&self) -> &PoleSample {
        &self.samples[self.argmin]
    }

    pub fn min_lambda(&self) -> f64 {
        self.best().lambda
    }

    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.ok()).count()
    }

    /// Pole maximizing `G(y, y)`, ties broken like the argmin.
    pub fn argmax_green(&self) -> usize {
        let p = self.p;
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.ok())
            .max_by(|(_, a), (_, b)| {
                a.green_diagonal(p)
                    .total_cmp(&b.green_diagonal(p))
                    .then(lex(b.pole, a.pole))
            })
            .map(|(i, _)| i)
            .expect("a sweep has at least one converged pole")
    }

    /// Sample at exactly `pole` (up to round-off in the grid coordinates).
    pub fn sample_at(&self, pole: Point) -> Option<&PoleSample> {
        let tol = 1e-9 * self.spacing;
        self.samples.iter().find(|s| s.pole.dist(pole) <= tol)
    }

    /// Largest `|lambda(y) - lambda(g y)|` over swept poles whose image
    /// under one of `maps` is also swept: the sweep noise floor.
    pub fn orbit_spread(&self, maps: &[Isometry]) -> f64 {
        let mut worst: f64 = 0.0;
        for s in self.samples.iter().filter(|s| s.ok()) {
            for g in maps {
                if let Some(t) = self.sample_at(g.apply(s.pole)).filter(|t| t.ok()) {
                    worst = worst.max((s.lambda - t.lambda).abs());
                }
            }
        }
        worst
    }

    /// CSV with header `y1,y2,lambda,kkt,iters`; failed poles have empty
    /// numeric fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["y1", "y2", "lambda", "kkt", "iters"])?;
        for s in &self.samples {
            let (lam, kkt, iters) = match (&s.report, s.ok()) {
                (Some(r), true) => (format!("{:e}", s.lambda), format!("{:e}", r.kkt), r.iterations.to_string()),
                _ => (String::new(), String::new(), String::new()),
            };
            w.write_record([format!("{:e}", s.pole.x), format!("{:e}", s.pole.y), lam, kkt, iters])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Grid nodes `(i g, j g)` inside `spec` with boundary clearance >= 2h.
pub fn sweep_nodes(spec: &DomainSpec, spacing: f64, h: f64) -> Vec<Point> {
    let (lo, hi) = spec.bounding_box();
    let (i0, i1) = ((lo.x / spacing).floor() as i64, (hi.x / spacing).ceil() as i64);
    let (j0, j1) = ((lo.y / spacing).floor() as i64, (hi.y / spacing).ceil() as i64);
    let mut nodes = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let y = Point::new(i as f64 * spacing, j as f64 * spacing);
            if spec.contains(y) && spec.boundary_distance(y) >= 2.0 * h {
                nodes.push(y);
            }
        }
    }
    nodes
}

/// Meshes `spec` with the pole pinned at `y` and solves for the potential.
pub fn solve_pole(spec: &DomainSpec, config: &SolverConfig, h: f64, y: Point) -> Result<PotentialSolution> {
    let mesh = Arc::new(triangulate(spec, h, Some(y))?);
    solve_potential(mesh, config)
}

/// Pole energy landscape over the sweep grid with spacing `spacing`, each
/// pole solved on its own mesh of size `h`. Poles are solved in parallel;
/// the result does not depend on the completion order.
pub fn pole_sweep(spec: &DomainSpec, config: &SolverConfig, spacing: f64, h: f64) -> Result<PoleSweepResult> {
    config.validate()?;
    if !(spacing > 0.0) || !(h > 0.0) {
        return Err(Error::Config("sweep spacing and mesh size must be positive".into()));
    }
    let nodes = sweep_nodes(spec, spacing, h);
    if nodes.is_empty() {
        return Err(Error::Precondition(format!(
            "no sweep node with clearance {} at spacing {spacing}",
            2.0 * h
        )));
    }
    let samples: Vec<PoleSample> = nodes
        .par_iter()
        .map(|&y| match solve_pole(spec, config, h, y) {
            Ok(sol) => PoleSample { pole: y, lambda: sol.lambda, report: Some(sol.report), error: None },
            Err(e) => {
                log::warn!("pole {y:?} failed: {e}");
                let report = match &e {
                    Error::Convergence { report, .. } => Some(report.clone()),
                    _ => None,
                };
                PoleSample { pole: y, lambda: f64::NAN, report, error: Some(e.to_string()) }
            }
        })
        .collect();
    let argmin = argmin_by(samples.iter().enumerate().map(|(i, s)| (i, s.pole, s.lambda)))
        .ok_or_else(|| Error::Precondition("every pole solve failed".into()))?;
    Ok(PoleSweepResult { samples, argmin, spacing, h, p: config.p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_respect_clearance() {
        let spec = DomainSpec::unit_disk();
        let nodes = sweep_nodes(&spec, 0.2, 0.099);
        assert!(nodes.contains(&Point::ORIGIN));
        assert!(nodes.iter().all(|y| y.norm() <= 0.802));
        // (0.8, 0) has clearance just above 2h
        assert!(nodes.iter().any(|y| (y.x - 0.8).abs() < 1e-12 && y.y == 0.0));
    }

    #[test]
    fn argmin_breaks_ties_lexicographically() {
        let items = vec![
            (0, Point::new(1.0, 0.0), 2.0),
            (1, Point::new(-1.0, 0.0), 2.0),
            (2, Point::new(0.0, 0.0), f64::NAN),
        ];
        assert_eq!(argmin_by(items.into_iter()), Some(1));
    }

    #[test]
    fn disk_sweep_is_radial_with_center_argmin() {
        let spec = DomainSpec::unit_disk();
        let cfg = SolverConfig::with_p(3.0);
        let sweep = pole_sweep(&spec, &cfg, 0.25, 0.08).unwrap();
        assert_eq!(sweep.failures(), 0);
        assert_eq!(sweep.best().pole, Point::ORIGIN);
        assert_eq!(sweep.argmax_green(), sweep.argmin);
        // lambda depends on |y| only
        for s in &sweep.samples {
            for t in &sweep.samples {
                if (s.pole.norm() - t.pole.norm()).abs() < 1e-12 {
                    assert!((s.lambda - t.lambda).abs() < 1e-3 * s.lambda, "{:?} {:?}", s.pole, t.pole);
                }
            }
        }
        let mut buf = Vec::new();
        sweep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("y1,y2,lambda,kkt,iters\n"));
        assert_eq!(text.lines().count(), sweep.samples.len() + 1);
    }
}

use std::sync::Arc;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::{Mat, Side};

use super::assembly::{Elements, FreeSystem};
use super::{FieldFunction, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Potential with its pole energy and solver diagnostics.
#[derive(Clone, Debug)]
pub struct PotentialSolution {
    pub field: FieldFunction,
    /// `int |Dw|^p`, the pole energy.
    pub lambda: f64,
    pub report: SolveReport,
}

impl PotentialSolution {
    /// `G(y, y) = lambda^{-1/(p-1)}`.
    pub fn green_diagonal(&self, p: f64) -> f64 {
        self.lambda.powf(-1.0 / (p - 1.0))
    }
}

struct Problem<'a> {
    config: &'a SolverConfig,
    elements: Elements,
    system: FreeSystem,
    symbolic: SymbolicLlt<usize>,
    values: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(mesh: &Mesh, config: &'a SolverConfig) -> Result<Self> {
        let pole = mesh.pole.ok_or(Error::NoPole)?;
        let mut constrained = mesh.boundary.clone();
        constrained[pole] = true;
        let elements = Elements::new(mesh);
        let system = FreeSystem::new(&elements, &constrained)?;
        let symbolic = SymbolicLlt::try_new(system.symbolic.as_ref(), Side::Lower)
            .map_err(|e| Error::Mesh(format!("symbolic factorization failed: {e:?}")))?;
        Ok(Self { config, elements, system, symbolic, values: Vec::new() })
    }

    fn factor(&self) -> Option<Llt<usize, f64>> {
        Llt::try_new_with_symbolic(
            self.symbolic.clone(),
            self.system.matrix(&self.values),
            Side::Lower,
        )
        .ok()
    }

    fn solve(llt: &Llt<usize, f64>, rhs: &[f64]) -> Vec<f64> {
        let mut b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        llt.solve_in_place(&mut b);
        (0..rhs.len()).map(|i| b[(i, 0)]).collect()
    }

    /// Discrete harmonic (p = 2) field with the same constraints.
    fn laplace_start(&mut self, u: &mut [f64]) -> Result<()> {
        let g = self.elements.gradient(u, 2.0, 0.0);
        let rhs: Vec<f64> = self.system.free.iter().map(|&v| -0.5 * g[v]).collect();
        let mut vals = std::mem::take(&mut self.values);
        self.system.stiffness(&self.elements, &mut vals);
        self.values = vals;
        let llt = self
            .factor()
            .ok_or_else(|| Error::Mesh("stiffness matrix is not positive definite".into()))?;
        let x = Self::solve(&llt, &rhs);
        for (k, &v) in self.system.free.iter().enumerate() {
            u[v] += x[k];
        }
        Ok(())
    }

    fn kkt(&self, grad: &[f64]) -> f64 {
        self.system.free.iter().fold(0.0, |m, &v| m.max(grad[v].abs()))
    }

    /// Damped Newton on the regularized energy until the free gradient drops
    /// below `tol`. Returns the final residual and whether it converged.
    fn newton(&mut self, u: &mut Vec<f64>, eps: f64, tol: f64, report: &mut SolveReport) -> Result<(f64, bool)> {
        let p = self.config.p;
        let mut grad = self.elements.gradient(u, p, eps);
        let mut kkt = self.kkt(&grad);
        let mut energy = self.elements.energy(u, p, eps);
        for _ in 0..self.config.max_iter {
            if kkt <= tol {
                return Ok((kkt, true));
            }
            let mut vals = std::mem::take(&mut self.values);
            self.system.hessian(&self.elements, u, p, eps, &mut vals);
            self.values = vals;
            let Some(llt) = self.factor() else {
                return Err(Error::Convergence { report: report.clone(), best: u.clone() });
            };
            let g_free: Vec<f64> = self.system.free.iter().map(|&v| grad[v]).collect();
            let d: Vec<f64> = Self::solve(&llt, &g_free).into_iter().map(|x| -x).collect();
            let slope: f64 = g_free.iter().zip(&d).map(|(a, b)| a * b).sum();

            let mut t = 1.0;
            let mut trial = u.clone();
            let accepted = loop {
                for (k, &v) in self.system.free.iter().enumerate() {
                    trial[v] = u[v] + t * d[k];
                }
                let e = self.elements.energy(&trial, p, eps);
                if e <= energy + self.config.armijo * t * slope {
                    break Some(e);
                }
                // At round-off level the energy cannot resolve the decrease;
                // accept a full step that reduces the gradient instead.
                if t == 1.0 && -slope <= 1e-13 * energy.abs() {
                    let g_trial = self.elements.gradient(&trial, p, eps);
                    if self.kkt(&g_trial) < kkt {
                        break Some(e.min(energy));
                    }
                }
                t *= self.config.backtrack;
                if t < 1e-12 {
                    break None;
                }
            };
            let Some(e) = accepted else {
                log::warn!("line search failed at eps = {eps:e}, kkt = {kkt:e}");
                return Ok((kkt, false));
            };
            debug_assert!(e <= energy + 1e-12 * energy.abs());
            std::mem::swap(u, &mut trial);
            energy = e;
            report.iterations += 1;
            report.energy_history.push(e);
            grad = self.elements.gradient(u, p, eps);
            kkt = self.kkt(&grad);
        }
        Ok((kkt, kkt <= tol))
    }
}

fn initial_field(mesh: &Mesh) -> Result<Vec<f64>> {
    let pole = mesh.pole.ok_or(Error::NoPole)?;
    let mut u = vec![0.0; mesh.n_vertices()];
    u[pole] = 1.0;
    Ok(u)
}

fn check_maximum_principle(u: &[f64]) -> Result<()> {
    for (node, &value) in u.iter().enumerate() {
        if !(-1e-10..=1.0 + 1e-10).contains(&value) {
            return Err(Error::MaximumPrinciple { node, value });
        }
    }
    Ok(())
}

fn run(mesh: Arc<Mesh>, config: &SolverConfig, warm: Option<&[f64]>) -> Result<PotentialSolution> {
    config.validate()?;
    let start = Instant::now();
    let mut problem = Problem::new(&mesh, config)?;
    let mut u = initial_field(&mesh)?;
    let floor = config.eps_floor();
    let stages: Vec<f64> = match warm {
        Some(w) => {
            if w.len() != u.len() {
                return Err(Error::Mesh("warm start has the wrong length".into()));
            }
            for &v in &problem.system.free {
                u[v] = w[v];
            }
            vec![floor]
        }
        None => {
            problem.laplace_start(&mut u)?;
            config.eps_schedule.clone()
        }
    };
    let mut report = SolveReport { eps_floor: floor, ..SolveReport::default() };
    let mut kkt = f64::INFINITY;
    for (k, &eps) in stages.iter().enumerate() {
        let last = k + 1 == stages.len();
        let tol = if last { config.grad_tol } else { config.stage_tol };
        let (res, ok) = problem.newton(&mut u, eps, tol, &mut report)?;
        kkt = res;
        if !ok && !last {
            log::debug!("stage eps = {eps:e} stopped at kkt = {res:e}");
        }
    }
    report.kkt = kkt;
    report.seconds = start.elapsed().as_secs_f64();
    let field = FieldFunction { mesh, values: u };
    report.energy = super::p_energy(&field, config.p)?;
    if kkt > config.grad_tol {
        return Err(Error::Convergence { report, best: field.values });
    }
    check_maximum_principle(&field.values)?;
    Ok(PotentialSolution { lambda: report.energy, field, report })
}

/// Minimizes the p-energy subject to `w = 0` on the boundary and `w = 1` at
/// the mesh pole, starting from the discrete harmonic field and continuing
/// the regularization down to its floor.
pub fn solve_potential(mesh: Arc<Mesh>, config: &SolverConfig) -> Result<PotentialSolution> {
    run(mesh, config, None)
}

/// Same minimization seeded with `initial`, running only the floor stage.
pub fn solve_potential_from(
    mesh: Arc<Mesh>,
    config: &SolverConfig,
    initial: &[f64],
) -> Result<PotentialSolution> {
    run(mesh, config, Some(initial))
}

/// Green's function with pole at the mesh pole, `G = lambda^{-1/(p-1)} w`,
/// and its diagonal value `G(y, y)`.
pub fn green_function(mesh: Arc<Mesh>, config: &SolverConfig) -> Result<(FieldFunction, f64)> {
    let sol = solve_potential(mesh, config)?;
    let gyy = sol.green_diagonal(config.p);
    Ok((sol.field.scaled(gyy), gyy))
}

/// Green's function from a potential and its energy. Invariant under
/// `(w, lambda) -> (c w, c^p lambda)`.
pub fn green_from_potential(w: &FieldFunction, lambda: f64, p: f64) -> (FieldFunction, f64) {
    let (_, top) = w.argmax();
    let scale = (lambda / top.powf(p)).powf(-1.0 / (p - 1.0)) / top;
    (w.scaled(scale), scale * top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, DomainSpec, Point};
    use crate::plaplace::weak_residual;

    fn disk_mesh(h: f64, pole: Point) -> Arc<Mesh> {
        Arc::new(triangulate(&DomainSpec::unit_disk(), h, Some(pole)).unwrap())
    }

    #[test]
    fn disk_potential_p3() {
        let mesh = disk_mesh(0.05, Point::ORIGIN);
        let cfg = SolverConfig::with_p(3.0);
        let sol = solve_potential(mesh, &cfg).unwrap();
        let exact = std::f64::consts::FRAC_PI_2;
        assert!((sol.lambda - exact).abs() < 0.05 * exact, "{}", sol.lambda);
        assert!(sol.report.kkt <= cfg.grad_tol);
        for w in sol.report.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
        let interior_min = sol
            .field
            .values
            .iter()
            .zip(&sol.field.mesh.boundary)
            .filter(|(_, &b)| !b)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        assert!(interior_min > 0.0);
    }

    #[test]
    fn warm_restart_is_a_fixed_point() {
        let mesh = disk_mesh(0.1, Point::new(0.2, 0.1));
        let cfg = SolverConfig::with_p(4.0);
        let a = solve_potential(mesh.clone(), &cfg).unwrap();
        let b = solve_potential_from(mesh, &cfg, &a.field.values).unwrap();
        assert!(b.report.iterations <= 2);
        assert!((a.lambda - b.lambda).abs() <= 1e-10);
    }

    #[test]
    fn pole_row_carries_the_energy() {
        let mesh = disk_mesh(0.1, Point::ORIGIN);
        let cfg = SolverConfig::with_p(3.0);
        let sol = solve_potential(mesh.clone(), &cfg).unwrap();
        let r = weak_residual(&sol.field, &cfg);
        let pole = mesh.pole.unwrap();
        assert!((r[pole] - sol.lambda).abs() < 1e-6 * sol.lambda, "{} vs {}", r[pole], sol.lambda);
    }

    #[test]
    fn missing_pole_is_reported() {
        let mesh = Arc::new(triangulate(&DomainSpec::unit_disk(), 0.2, None).unwrap());
        assert!(matches!(solve_potential(mesh, &SolverConfig::default()), Err(Error::NoPole)));
    }

    #[test]
    fn green_scaling_is_homogeneous() {
        let mesh = disk_mesh(0.1, Point::ORIGIN);
        let cfg = SolverConfig::with_p(3.0);
        let sol = solve_potential(mesh, &cfg).unwrap();
        let (g1, d1) = green_from_potential(&sol.field, sol.lambda, 3.0);
        let (g2, d2) = green_from_potential(&sol.field.scaled(2.0), 8.0 * sol.lambda, 3.0);
        assert!((d1 - d2).abs() < 1e-12 * d1);
        for (a, b) in g1.values.iter().zip(&g2.values) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((d1 - sol.green_diagonal(3.0)).abs() < 1e-12);
    }

    #[test]
    fn off_center_green_diagonal_is_smaller() {
        let cfg = SolverConfig::with_p(3.0);
        let (_, center) = green_function(disk_mesh(0.1, Point::ORIGIN), &cfg).unwrap();
        let (_, off) = green_function(disk_mesh(0.1, Point::new(0.4, 0.0)), &cfg).unwrap();
        assert!(off < center);
    }
}

//! P1 finite elements for the p-Dirichlet energy: potentials with a pinned
//! pole, Green's functions, and the assembled energy/gradient.

mod assembly;
mod newton;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};

pub use newton::{
    green_from_potential, green_function, solve_potential, solve_potential_from, PotentialSolution,
};

/// Piecewise-linear field given by its nodal values.
#[derive(Clone, Debug)]
pub struct FieldFunction {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

impl FieldFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::Mesh(format!(
                "{} nodal values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Mesh(format!("non-finite nodal value at vertex {k}")));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_vertices();
        Self { mesh, values: vec![0.0; n] }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices.iter().map(|&v| f(v)).collect();
        Self { mesh, values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the largest nodal value (first one on ties).
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    }

    /// `int |Du|^p / ||u||_inf^p`.
    pub fn rayleigh_quotient(&self, p: f64) -> Result<f64> {
        let m = self.sup_norm();
        if m == 0.0 {
            return Err(Error::Precondition("Rayleigh quotient of the zero field".into()));
        }
        Ok(p_energy(self, p)? / m.powf(p))
    }

    /// Values at arbitrary points by linear interpolation; `None` outside.
    pub fn sample(&self, points: &[Point]) -> Vec<Option<f64>> {
        let loc = self.mesh.locator();
        points.iter().map(|&q| loc.interpolate(&self.values, q)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { mesh: self.mesh.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Exponent, must exceed the dimension 2.
    pub p: f64,
    /// Continuation schedule for the regularization `|Du|^2 + eps`; the last
    /// entry is the floor.
    pub eps_schedule: Vec<f64>,
    /// Max-norm of the free-node gradient required at the floor.
    pub grad_tol: f64,
    /// Looser tolerance for the intermediate continuation stages.
    pub stage_tol: f64,
    /// Newton iterations per stage.
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step contraction factor of the backtracking line search.
    pub backtrack: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 3.0,
            eps_schedule: vec![1e-2, 1e-4, 1e-6, 1e-8],
            grad_tol: 1e-9,
            stage_tol: 1e-6,
            max_iter: 60,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn with_p(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    pub fn eps_floor(&self) -> f64 {
        self.eps_schedule.last().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 2.0 && self.p.is_finite()) {
            return Err(Error::InvalidRegime { n: 2, p: self.p });
        }
        if !(self.grad_tol > 0.0) || !(self.stage_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.eps_schedule.is_empty() {
            return Err(Error::Config("eps_schedule must not be empty".into()));
        }
        if self.eps_schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config("eps_schedule entries must be positive".into()));
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eps_schedule must be strictly decreasing".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config("line-search constants out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Unregularized energy of the returned field.
    pub energy: f64,
    /// Free-node gradient max-norm at the floor regularization.
    pub kkt: f64,
    #[serde(rename = "iters")]
    pub iterations: usize,
    pub eps_floor: f64,
    pub seconds: f64,
    /// Regularized energy after every accepted step.
    #[serde(skip)]
    pub energy_history: Vec<f64>,
}

/// `sum_T area(T) |grad u_T|^p`.
pub fn p_energy(u: &FieldFunction, p: f64) -> Result<f64> {
    assembly::check_nondegenerate(&u.mesh)?;
    Ok(assembly::Elements::new(&u.mesh).energy(&u.values, p, 0.0))
}

/// Energy with `|Du|^2` replaced by `|Du|^2 + eps`.
pub fn regularized_energy(u: &FieldFunction, p: f64, eps: f64) -> f64 {
    assembly::Elements::new(&u.mesh).energy(&u.values, p, eps)
}

/// Derivative of the regularized energy (at the config's floor) with respect
/// to every nodal value, constrained nodes included.
pub fn energy_gradient(u: &FieldFunction, config: &SolverConfig) -> Vec<f64> {
    assembly::Elements::new(&u.mesh).gradient(&u.values, config.p, config.eps_floor())
}

/// Assembled weak form `int |Du|^{p-2} Du . D phi_i`, i.e. the energy
/// gradient divided by `p`. For a potential it vanishes at free nodes and
/// equals the pole energy at the pole row.
pub fn weak_residual(u: &FieldFunction, config: &SolverConfig) -> Vec<f64> {
    let mut g = energy_gradient(u, config);
    for v in &mut g {
        *v /= config.p;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, DomainSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_triangle() -> Arc<Mesh> {
        Arc::new(
            Mesh::new(
                vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
                vec![[0, 1, 2]],
                vec![true, true, true],
                None,
                1.0,
            )
            .unwrap(),
        )
    }

    #[test]
    fn energy_of_hand_example() {
        let u = FieldFunction::new(reference_triangle(), vec![0.0, 1.0, 0.0]).unwrap();
        assert!((p_energy(&u, 4.0).unwrap() - 0.5).abs() < 1e-15);
        let z = FieldFunction::zeros(reference_triangle());
        assert_eq!(p_energy(&z, 3.0).unwrap(), 0.0);
        assert!(energy_gradient(&z, &SolverConfig::default()).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn energy_of_interpolated_ball_extremal() {
        let mesh = Arc::new(triangulate(&DomainSpec::unit_disk(), 0.02, Some(Point::ORIGIN)).unwrap());
        let u = FieldFunction::interpolate(mesh, |x| 1.0 - x.norm().sqrt());
        let e = p_energy(&u, 3.0).unwrap();
        let exact = std::f64::consts::FRAC_PI_2;
        assert!((e - exact).abs() < 0.05 * exact, "{e}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let spec = DomainSpec::square(1.0).unwrap();
        let mesh = Arc::new(triangulate(&spec, 0.5, None).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = FieldFunction::new(mesh, values).unwrap();
        let config = SolverConfig { p: 3.5, eps_schedule: vec![1e-6], ..SolverConfig::default() };
        let g = energy_gradient(&u, &config);
        let step = 1e-6;
        for i in 0..u.values.len() {
            let mut plus = u.clone();
            let mut minus = u.clone();
            plus.values[i] += step;
            minus.values[i] -= step;
            let fd = (regularized_energy(&plus, 3.5, 1e-6) - regularized_energy(&minus, 3.5, 1e-6))
                / (2.0 * step);
            assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-3), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(matches!(SolverConfig::with_p(2.0).validate(), Err(Error::InvalidRegime { .. })));
        let bad = SolverConfig { eps_schedule: vec![1e-4, 1e-2], ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        let parsed: SolverConfig = serde_json::from_str(r#"{"p": 4.0, "grad_tol": 1e-8}"#).unwrap();
        assert_eq!(parsed.p, 4.0);
        assert_eq!(parsed.eps_schedule, SolverConfig::default().eps_schedule);
        assert!(serde_json::from_str::<SolverConfig>(r#"{"pp": 4.0}"#).is_err());
    }

    #[test]
    fn report_json_keys() {
        let r = SolveReport { energy: 1.0, kkt: 1e-10, iterations: 7, eps_floor: 1e-8, seconds: 0.1, energy_history: vec![2.0] };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        assert_eq!(keys.len(), 5);
        for k in ["energy", "kkt", "iters", "eps_floor", "seconds"] {
            assert!(keys.contains(&k));
        }
    }
}

//! Extremals and the sharp constant: pole sweeps, simplex refinement of the
//! pole energy landscape, and the verification battery (asymptotics, Hölder
//! sandwich, symmetry and nonuniqueness probes).

pub mod ball;
mod probes;
mod refine;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Point};
use crate::plaplace::{p_energy, FieldFunction, SolveReport, SolverConfig};

pub use ball::{
    asymptotic_coefficient, ball_extremal_value, ball_lambda, holder_exponent, talenti_energy,
    unit_ball_volume, whole_space_constant,
};
pub use probes::{
    asymptotic_fit, bowtie_scan, holder_sandwich_check, orbit, sandwich_radii, symmetry_defects,
    uniqueness_probe, uniqueness_report, AsymptoticFit, BowtieScan, BowtieScanEntry, OrbitEstimate,
    SandwichReport, UniquenessReport,
};
pub use sweep::{pole_sweep, solve_pole, sweep_nodes, PoleSample, PoleSweepResult};

/// Knobs of [`find_extremal`]. Unset values default to the mesh size `h`
/// (sweep mesh), `4 h` (sweep spacing) and `h / 4` (pole tolerance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremalOptions {
    /// Mesh size of the final solve and of the refinement evaluations.
    pub h: f64,
    /// Mesh size of the coarse sweep.
    #[serde(default)]
    pub sweep_h: Option<f64>,
    #[serde(default)]
    pub sweep_spacing: Option<f64>,
    /// Stop refining once the simplex is smaller than this.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Budget of fresh pole solves during refinement.
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
}

fn default_max_evals() -> usize {
    40
}

impl ExtremalOptions {
    pub fn new(h: f64) -> Self {
        Self { h, sweep_h: None, sweep_spacing: None, tol: None, max_evals: default_max_evals() }
    }

    pub fn sweep_h(&self) -> f64 {
        self.sweep_h.unwrap_or(self.h)
    }

    pub fn sweep_spacing(&self) -> f64 {
        self.sweep_spacing.unwrap_or(4.0 * self.sweep_h())
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(self.h / 4.0)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.h) || !pos(self.sweep_h()) || !pos(self.sweep_spacing()) || !pos(self.tol()) {
            return Err(Error::Config("mesh sizes, spacing and tolerance must be positive".into()));
        }
        if self.max_evals == 0 {
            return Err(Error::Config("max_evals must be positive".into()));
        }
        Ok(())
    }
}

/// The computed extremal, normalized so that `u(x0) = ||u||_inf = 1`.
#[derive(Clone, Debug)]
pub struct ExtremalSolution {
    pub field: FieldFunction,
    pub x0: Point,
    pub lambda_p: f64,
    pub p: f64,
    pub report: SolveReport,
    pub rayleigh: f64,
    /// `None` when the mesh has too few nodes in the fit window.
    pub asymptotic: Option<AsymptoticFit>,
    pub sweep: PoleSweepResult,
    /// Fresh pole solves spent in the refinement.
    pub refine_evals: usize,
}

/// Summary suitable for JSON export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSummary {
    pub lambda_p: f64,
    pub x0: Point,
    pub p: f64,
    pub h: f64,
    pub rayleigh: f64,
    pub asymptotic: Option<AsymptoticFit>,
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub sweep_poles: usize,
    pub sweep_failures: usize,
    pub sweep_min_lambda: f64,
    pub refine_evals: usize,
    pub report: SolveReport,
}

impl ExtremalSolution {
    pub fn green_diagonal(&self) -> f64 {
        self.lambda_p.powf(-1.0 / (self.p - 1.0))
    }

    pub fn summary(&self) -> ExtremalSummary {
        ExtremalSummary {
            lambda_p: self.lambda_p,
            x0: self.x0,
            p: self.p,
            h: self.field.mesh.h,
            rayleigh: self.rayleigh,
            asymptotic: self.asymptotic.clone(),
            n_vertices: self.field.mesh.n_vertices(),
            n_triangles: self.field.mesh.triangles.len(),
            sweep_poles: self.sweep.samples.len(),
            sweep_failures: self.sweep.failures(),
            sweep_min_lambda: self.sweep.min_lambda(),
            refine_evals: self.refine_evals,
            report: self.report.clone(),
        }
    }
}

/// Minimizes the pole energy: coarse sweep, then simplex descent started at
/// the sweep argmin, each evaluation re-meshing with the pole pinned.
/// Poles closer than `2h` to the boundary are rejected (a warning is logged
/// and the simplex treats them as `+inf`).
pub fn find_extremal(spec: &DomainSpec, config: &SolverConfig, opts: &ExtremalOptions) -> Result<ExtremalSolution> {
    opts.validate()?;
    let sweep = pole_sweep(spec, config, opts.sweep_spacing(), opts.sweep_h())?;
    refine_from_sweep(spec, config, opts, sweep)
}

/// Refinement stage of [`find_extremal`] for an existing sweep.
pub fn refine_from_sweep(
    spec: &DomainSpec,
    config: &SolverConfig,
    opts: &ExtremalOptions,
    sweep: PoleSweepResult,
) -> Result<ExtremalSolution> {
    opts.validate()?;
    let h = opts.h;
    let mut last_err = None;
    let mut memo = refine::Memo::new(|y: Point| {
        if !spec.contains(y) || spec.boundary_distance(y) < 2.0 * h {
            log::warn!("refinement left the admissible region at {y:?}; rejected");
            return f64::INFINITY;
        }
        match solve_pole(spec, config, h, y) {
            Ok(sol) => sol.lambda,
            Err(e) => {
                log::warn!("pole {y:?} failed during refinement: {e}");
                last_err = Some(e);
                f64::INFINITY
            }
        }
    });
    let start = sweep.best().pole;
    let step = 0.5 * sweep.spacing;
    let res = refine::nelder_mead(&mut memo, start, step, opts.tol(), opts.max_evals);
    let refine_evals = memo.evaluations;
    drop(memo);
    if !res.value.is_finite() {
        return Err(last_err.unwrap_or_else(|| Error::Precondition("no admissible pole found".into())));
    }
    if res.diameter >= opts.tol() {
        log::warn!(
            "refinement stopped after {refine_evals} solves with simplex diameter {:.3e}",
            res.diameter
        );
    }
    let x0 = res.best;
    let sol = solve_pole(spec, config, h, x0)?;
    let p = config.p;
    let lambda_p = p_energy(&sol.field, p)?;
    let rayleigh = sol.field.rayleigh_quotient(p)?;
    let asymptotic = match asymptotic_fit(&sol.field, x0, p) {
        Ok(fit) => Some(fit),
        Err(Error::InsufficientSamples { found, required }) => {
            log::warn!("asymptotic fit skipped: {found} of {required} samples");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(ExtremalSolution {
        field: sol.field,
        x0,
        lambda_p,
        p,
        report: sol.report,
        rayleigh,
        asymptotic,
        sweep,
        refine_evals,
    })
}

//! Python bindings: `import morrey`.
//!
//! Domains are passed as a builtin name (`"unit_disk"`, `"bowtie:0.1"`, ...)
//! or as domain JSON text. Solves release the GIL.

use morrey_core::extremal::{self, ExtremalOptions, ExtremalSolution};
use morrey_core::geometry::{DomainSpec, Point};
use morrey_core::plaplace::{FieldFunction, SolverConfig};
use morrey_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidSpec(_)
        | Error::InvalidRegime { .. }
        | Error::Config(_)
        | Error::OutOfRange(_)
        | Error::MeshResolution(_)
        | Error::PoleTooCloseToBoundary { .. }
        | Error::Precondition(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// JSON text when it looks like an object, a builtin name otherwise.
pub fn parse_domain(domain: &str) -> Result<DomainSpec, Error> {
    if domain.trim_start().starts_with('{') {
        DomainSpec::from_json_str(domain)
    } else {
        DomainSpec::builtin(domain)
    }
}

type Mesh = (Vec<(f64, f64)>, Vec<(usize, usize, usize)>, Vec<f64>);
type PoleResult = (f64, Vec<(f64, f64)>, Vec<(usize, usize, usize)>, Vec<f64>);

fn mesh_lists(f: &FieldFunction) -> Mesh {
    (
        f.mesh.vertices.iter().map(|v| (v.x, v.y)).collect(),
        f.mesh.triangles.iter().map(|t| (t[0], t[1], t[2])).collect(),
        f.values.clone(),
    )
}

/// `lambda_p` of the ball of radius `r` in dimension `n`.
#[pyfunction]
fn ball_lambda(n: u32, p: f64, r: f64) -> PyResult<f64> {
    extremal::ball_lambda(n, p, r).map_err(to_py)
}

/// Sharp constant of the whole-space inequality.
#[pyfunction]
fn whole_space_constant(n: u32, p: f64) -> PyResult<f64> {
    extremal::whole_space_constant(n, p).map_err(to_py)
}

/// Domain JSON of a builtin name (or normalized JSON of a JSON spec).
#[pyfunction]
fn domain_json(domain: &str) -> PyResult<String> {
    Ok(parse_domain(domain).map_err(to_py)?.to_json())
}

/// A computed extremal, normalized to `u(x0) = 1`.
#[pyclass(frozen, module = "morrey")]
struct Extremal {
    sol: ExtremalSolution,
}

#[pymethods]
impl Extremal {
    #[getter]
    fn lambda_p(&self) -> f64 {
        self.sol.lambda_p
    }

    #[getter]
    fn x0(&self) -> (f64, f64) {
        (self.sol.x0.x, self.sol.x0.y)
    }

    #[getter]
    fn green_diagonal(&self) -> f64 {
        self.sol.green_diagonal()
    }

    /// `(vertices, triangles, values)` of the extremal field.
    fn mesh(&self) -> Mesh {
        mesh_lists(&self.sol.field)
    }

    /// The solve summary as JSON text.
    fn summary_json(&self) -> String {
        serde_json::to_string(&self.sol.summary()).expect("summaries serialize")
    }

    /// `(y1, y2, lambda)` per swept pole; failed poles carry NaN.
    fn sweep(&self) -> Vec<(f64, f64, f64)> {
        self.sol.sweep.samples.iter().map(|s| (s.pole.x, s.pole.y, s.lambda)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Extremal(lambda_p={:.6}, x0=({:.4}, {:.4}))", self.sol.lambda_p, self.sol.x0.x, self.sol.x0.y)
    }
}

/// Pole sweep plus simplex refinement; see the CLI `solve` command.
#[pyfunction]
#[pyo3(signature = (domain, p, h, sweep_spacing=None, sweep_h=None))]
fn find_extremal(
    py: Python<'_>,
    domain: &str,
    p: f64,
    h: f64,
    sweep_spacing: Option<f64>,
    sweep_h: Option<f64>,
) -> PyResult<Extremal> {
    let spec = parse_domain(domain).map_err(to_py)?;
    let mut opts = ExtremalOptions::new(h);
    opts.sweep_spacing = sweep_spacing;
    opts.sweep_h = sweep_h;
    let cfg = SolverConfig::with_p(p);
    let sol = py.detach(|| extremal::find_extremal(&spec, &cfg, &opts)).map_err(to_py)?;
    Ok(Extremal { sol })
}

/// Potential with pole `y`: returns `(lambda, vertices, triangles, values)`.
#[pyfunction]
fn solve_pole(
    py: Python<'_>,
    domain: &str,
    p: f64,
    h: f64,
    y: (f64, f64),
) -> PyResult<PoleResult> {
    let spec = parse_domain(domain).map_err(to_py)?;
    let cfg = SolverConfig::with_p(p);
    let sol = py.detach(|| extremal::solve_pole(&spec, &cfg, h, Point::new(y.0, y.1))).map_err(to_py)?;
    let (v, t, u) = mesh_lists(&sol.field);
    Ok((sol.lambda, v, t, u))
}

/// `(y1, y2, lambda)` over the pole grid of spacing `spacing`.
#[pyfunction]
fn pole_sweep(py: Python<'_>, domain: &str, p: f64, spacing: f64, h: f64) -> PyResult<Vec<(f64, f64, f64)>> {
    let spec = parse_domain(domain).map_err(to_py)?;
    let cfg = SolverConfig::with_p(p);
    let sweep = py.detach(|| extremal::pole_sweep(&spec, &cfg, spacing, h)).map_err(to_py)?;
    Ok(sweep.samples.iter().map(|s| (s.pole.x, s.pole.y, s.lambda)).collect())
}

#[pymodule]
fn morrey(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Extremal>()?;
    m.add_function(wrap_pyfunction!(ball_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(whole_space_constant, m)?)?;
    m.add_function(wrap_pyfunction!(domain_json, m)?)?;
    m.add_function(wrap_pyfunction!(find_extremal, m)?)?;
    m.add_function(wrap_pyfunction!(solve_pole, m)?)?;
    m.add_function(wrap_pyfunction!(pole_sweep, m)?)?;
    Ok(())
}

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use morrey_core::extremal::*;
use morrey_core::geometry::{Axis, DomainSpec, Isometry, Point};
use morrey_core::io::{atomic_write, read_vtk, write_vtk};
use morrey_core::plaplace::{FieldFunction, SolverConfig};
use morrey_core::shape::{grid_p_energy, steiner_argmax_check, steiner_rearrange, GridFunction};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Loaded, Tolerances};
use crate::CliError;

/// What a command produced: JSON outputs for the summary, the files it
/// wrote (relative to the output directory) and the names of failed checks.
pub struct Outcome {
    pub domain: Option<DomainSpec>,
    pub outputs: Value,
    pub files: Vec<String>,
    pub failures: Vec<String>,
}

pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir, files: Vec::new() }
    }

    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut dyn Write) -> morrey_core::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        atomic_write(&path, f)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    fn finish(self, domain: Option<DomainSpec>, outputs: Value, failures: Vec<String>) -> Outcome {
        Outcome { domain, outputs, files: self.files, failures }
    }
}

fn symmetry_maps(spec: &DomainSpec) -> Vec<Isometry> {
    spec.symmetries.iter().flat_map(|s| s.elements()).collect()
}

/// Wall-clock timings are logged, not serialized, so that summaries of
/// identical runs are identical.
fn without_seconds(v: &mut Value) {
    if let Some(r) = v.get_mut("report").and_then(Value::as_object_mut) {
        r.remove("seconds");
    }
}

pub fn solve(cfg: &Loaded, mut out: OutputDir) -> Result<Outcome, CliError> {
    let spec = cfg.domain()?;
    let solver = cfg.solver()?;
    let opts = cfg.extremal_options()?;
    let t = Instant::now();
    let sol = find_extremal(&spec, &solver, &opts)?;
    info!("extremal found in {:.2} s", t.elapsed().as_secs_f64());
    out.write("field.vtk", |w| write_vtk(&sol.field, "u", w))?;
    out.write("sweep.csv", |w| sol.sweep.write_csv(w))?;
    let mut outputs = serde_json::to_value(sol.summary()).map_err(morrey_core::Error::from)?;
    without_seconds(&mut outputs);
    outputs["green_diagonal"] = json!(sol.green_diagonal());
    println!("lambda_p = {:.9}  x0 = ({:.6}, {:.6})", sol.lambda_p, sol.x0.x, sol.x0.y);
    Ok(out.finish(Some(spec), outputs, Vec::new()))
}

fn sweep_of(cfg: &Loaded) -> Result<(DomainSpec, SolverConfig, PoleSweepResult), CliError> {
    let spec = cfg.domain()?;
    let solver = cfg.solver()?;
    let opts = cfg.extremal_options()?;
    let t = Instant::now();
    let sweep = pole_sweep(&spec, &solver, opts.sweep_spacing(), opts.sweep_h())?;
    info!("{} poles swept in {:.2} s", sweep.samples.len(), t.elapsed().as_secs_f64());
    Ok((spec, solver, sweep))
}

pub fn sweep(cfg: &Loaded, mut out: OutputDir) -> Result<Outcome, CliError> {
    let (spec, _, sweep) = sweep_of(cfg)?;
    out.write("sweep.csv", |w| sweep.write_csv(w))?;
    let maps = symmetry_maps(&spec);
    let best = sweep.best();
    let spread = (!maps.is_empty()).then(|| sweep.orbit_spread(&maps));
    let outputs = json!({
        "argmin": best.pole,
        "min_lambda": best.lambda,
        "poles": sweep.samples.len(),
        "failures": sweep.failures(),
        "spacing": sweep.spacing,
        "h": sweep.h,
        "orbit_spread": spread,
        "orbit_spread_relative": spread.map(|s| s / best.lambda),
    });
    println!("min lambda = {:.9} at ({:.6}, {:.6}) over {} poles", best.lambda, best.pole.x, best.pole.y, sweep.samples.len());
    Ok(out.finish(Some(spec), outputs, Vec::new()))
}

pub fn green_max(cfg: &Loaded, mut out: OutputDir) -> Result<Outcome, CliError> {
    let (spec, solver, sweep) = sweep_of(cfg)?;
    let p = solver.p;
    out.write("green.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["y1", "y2", "lambda", "green"])?;
        for s in &sweep.samples {
            let (lam, g) = if s.ok() {
                (format!("{:e}", s.lambda), format!("{:e}", s.green_diagonal(p)))
            } else {
                (String::new(), String::new())
            };
            w.write_record([format!("{:e}", s.pole.x), format!("{:e}", s.pole.y), lam, g])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let top = &sweep.samples[sweep.argmax_green()];
    let g = top.green_diagonal(p);
    let dual = sweep.min_lambda().powf(-1.0 / (p - 1.0));
    let outputs = json!({
        "argmax": top.pole,
        "green_max": g,
        "argmin_lambda": sweep.best().pole,
        "min_lambda": sweep.min_lambda(),
        "duality_gap": (g - dual).abs(),
        "poles": sweep.samples.len(),
    });
    println!("max G(y,y) = {:.9} at ({:.6}, {:.6})", g, top.pole.x, top.pole.y);
    Ok(out.finish(Some(spec), outputs, Vec::new()))
}

/// Fails (exit 4) when a convex domain's extremal is not invariant under
/// its declared symmetries.
pub fn symmetry_check(cfg: &Loaded, mut out: OutputDir) -> Result<Outcome, CliError> {
    let spec = cfg.domain()?;
    if spec.symmetries.is_empty() {
        return Err(CliError::Config("at `domain`: the domain declares no symmetry".into()));
    }
    let solver = cfg.solver()?;
    let opts = cfg.extremal_options()?;
    let sol = find_extremal(&spec, &solver, &opts)?;
    let rep = uniqueness_report(&spec, &sol, &solver, cfg.config.symmetry.tol)?;
    out.write("field.vtk", |w| write_vtk(&sol.field, "u", w))?;
    let convex = spec.is_convex();
    let mut outputs = serde_json::to_value(&rep).map_err(morrey_core::Error::from)?;
    outputs["distinct_extremals"] = json!(rep.distinct_extremal_count());
    outputs["convex"] = json!(convex);
    let worst = rep.defects.iter().map(|d| d.1).fold(0.0, f64::max);
    println!(
        "x0 = ({:.6}, {:.6})  worst defect {worst:.3e}  extremals: {}",
        rep.x0.x,
        rep.x0.y,
        rep.distinct_extremal_count()
    );
    let failures = if convex && !rep.symmetry_consistent { vec!["symmetry".to_string()] } else { Vec::new() };
    Ok(out.finish(Some(spec), outputs, failures))
}

/// Writes a field as VTK, node CSV and (optionally) grid CSV, then reloads
/// every file and compares nodal values bit for bit.
pub fn export(cfg: &Loaded, mut out: OutputDir) -> Result<Outcome, CliError> {
    let ex = &cfg.config.export;
    let (field, name, domain) = match &ex.from {
        Some(path) => {
            let path = if path.is_relative() { cfg.base.join(path) } else { path.clone() };
            let f = File::open(&path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
            let (field, name) = read_vtk(BufReader::new(f)).map_err(|e| CliError::Config(e.to_string()))?;
            (field, name, None)
        }
        None => {
            let pole = ex
                .pole
                .ok_or_else(|| CliError::Config("at `export.pole`: required when `export.from` is unset".into()))?;
            let spec = cfg.domain()?;
            let solver = cfg.solver()?;
            let sol = solve_pole(&spec, &solver, cfg.config.h, pole)?;
            (sol.field, "w".to_string(), Some(spec))
        }
    };
    let mut failures = Vec::new();

    let vtk = out.write("field.vtk", |w| write_vtk(&field, &name, w))?;
    let (back, back_name) = read_vtk(BufReader::new(File::open(&vtk).map_err(morrey_core::Error::from)?))?;
    if back_name != name || !same_field(&field, &back) {
        failures.push("vtk_round_trip".to_string());
    }

    let nodes = out.write("nodes.csv", |w| write_nodes_csv(&field, w))?;
    if read_nodes_csv(&nodes)? != node_rows(&field) {
        failures.push("csv_round_trip".to_string());
    }

    let mut grid_shape = None;
    if let Some(cell) = ex.grid_cell {
        if !(cell > 0.0) {
            return Err(CliError::Config("at `export.grid_cell`: must be positive".into()));
        }
        let g = GridFunction::sample_field(&field, cell)?;
        let path = out.write("grid.csv", |w| g.write_csv(w))?;
        let back = GridFunction::read_csv(File::open(&path).map_err(morrey_core::Error::from)?)?;
        if back != g {
            failures.push("grid_round_trip".to_string());
        }
        grid_shape = Some([g.nx, g.ny]);
    }
    let (k, top) = field.argmax();
    let outputs = json!({
        "name": name,
        "n_vertices": field.mesh.n_vertices(),
        "n_triangles": field.mesh.triangles.len(),
        "sup": top,
        "argmax": field.mesh.vertices[k],
        "grid": grid_shape,
        "round_trip_ok": failures.is_empty(),
    });
    println!("exported {} nodes, round trip {}", field.mesh.n_vertices(), if failures.is_empty() { "ok" } else { "FAILED" });
    Ok(out.finish(domain, outputs, failures))
}

fn same_field(a: &FieldFunction, b: &FieldFunction) -> bool {
    node_rows(a) == node_rows(b) && a.mesh.triangles == b.mesh.triangles
}

/// `(x, y, value, boundary)` per node as exact bit patterns.
fn node_rows(f: &FieldFunction) -> Vec<(u64, u64, u64, bool)> {
    f.mesh
        .vertices
        .iter()
        .zip(&f.values)
        .zip(&f.mesh.boundary)
        .map(|((v, u), &b)| (v.x.to_bits(), v.y.to_bits(), u.to_bits(), b))
        .collect()
}

fn write_nodes_csv(f: &FieldFunction, w: &mut dyn Write) -> morrey_core::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["x", "y", "u", "boundary"])?;
    for ((v, u), &b) in f.mesh.vertices.iter().zip(&f.values).zip(&f.mesh.boundary) {
        w.write_record([format!("{:e}", v.x), format!("{:e}", v.y), format!("{u:e}"), u8::from(b).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn read_nodes_csv(path: &Path) -> Result<Vec<(u64, u64, u64, bool)>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(morrey_core::Error::from)?;
    let bad = |line: usize, msg: &str| morrey_core::Error::Parse { format: "node CSV", line, msg: msg.into() };
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(morrey_core::Error::from)?;
        let num = |k: usize| -> Result<u64, morrey_core::Error> {
            rec.get(k).and_then(|s| s.parse::<f64>().ok()).map(f64::to_bits).ok_or_else(|| bad(i + 2, "bad number"))
        };
        let b = match rec.get(3) {
            Some("0") => false,
            Some("1") => true,
            _ => return Err(bad(i + 2, "bad boundary flag").into()),
        };
        rows.push((num(0)?, num(1)?, num(2)?, b));
    }
    Ok(rows)
}

pub const CHECKS: [&str; 7] =
    ["ball_formulas", "ball_solve", "green_duality", "sandwich", "rates", "polya_szego", "steiner_argmax"];

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub passed: bool,
    /// The measured quantity compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn row(name: &'static str, value: f64, tolerance: f64, detail: String) -> CheckRow {
    CheckRow { name, passed: value <= tolerance, value, tolerance, detail }
}

/// Desk-scale battery on fixed problems (unit disk at the configured `p`
/// and `h`, the cross for the Steiner check). Only the configured domain's
/// solver tolerances carry over.
pub fn verify(cfg: &Loaded, mut out: OutputDir) -> Result<Outcome, CliError> {
    let selected: Vec<&'static str> = match &cfg.config.verify.checks {
        None => CHECKS.to_vec(),
        Some(names) => {
            let mut v = Vec::new();
            for n in names {
                let known = CHECKS.iter().find(|c| **c == n.as_str()).ok_or_else(|| {
                    CliError::Config(format!("at `verify.checks`: unknown check `{n}` (known: {})", CHECKS.join(", ")))
                })?;
                v.push(*known);
            }
            v
        }
    };
    let tol = &cfg.config.verify.tolerances;
    let solver = cfg.solver()?;
    let h = cfg.config.h;
    let disk = DomainSpec::unit_disk();

    let mut disk_solution: Option<ExtremalSolution> = None;
    let mut rows = Vec::new();
    for name in selected {
        let t = Instant::now();
        let needs_disk = matches!(name, "ball_solve" | "green_duality" | "sandwich" | "rates");
        if needs_disk && disk_solution.is_none() {
            let mut o = cfg.extremal_options()?;
            o.sweep_spacing = o.sweep_spacing.or(Some(0.25));
            disk_solution = Some(find_extremal(&disk, &solver, &o)?);
        }
        let r = match name {
            "ball_formulas" => ball_formulas(tol)?,
            "polya_szego" => polya_szego(&disk, &solver, h, tol)?,
            "steiner_argmax" => {
                let mut o = ExtremalOptions::new(0.1);
                o.sweep_spacing = Some(0.2);
                let rep = steiner_argmax_check(&DomainSpec::cross(), &solver, &o)?;
                let v = rep.x0.norm() / rep.h;
                row(name, v, tol.steiner_argmax, format!("cross: x0 = ({:.3e}, {:.3e}), h = {}", rep.x0.x, rep.x0.y, rep.h))
            }
            _ => disk_check(name, disk_solution.as_ref().expect("solved above"), tol)?,
        };
        info!("{name}: {:.2} s", t.elapsed().as_secs_f64());
        rows.push(r);
    }

    println!("{:<16}{:<8}{:>12}{:>12}  detail", "check", "result", "value", "tolerance");
    for r in &rows {
        println!(
            "{:<16}{:<8}{:>12.3e}{:>12.3e}  {}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.value,
            r.tolerance,
            r.detail
        );
    }
    let failures: Vec<String> = rows.iter().filter(|r| !r.passed).map(|r| r.name.to_string()).collect();
    let table = serde_json::to_value(&rows).map_err(morrey_core::Error::from)?;
    out.write("verify.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &table)?;
        writeln!(w)?;
        Ok(())
    })?;
    let outputs = json!({ "checks": table, "failed": failures });
    Ok(out.finish(None, outputs, failures))
}

fn ball_formulas(tol: &Tolerances) -> Result<CheckRow, CliError> {
    use std::f64::consts::PI;
    let cases = [(3.0, 1.0, PI / 2.0), (4.0, 1.0, 16.0 * PI / 27.0), (3.0, 2.0, PI / 4.0)];
    let mut worst: f64 = 0.0;
    for (p, r, want) in cases {
        worst = worst.max((ball_lambda(2, p, r)? - want).abs());
    }
    Ok(row("ball_formulas", worst, tol.ball_formulas, format!("{} closed forms", cases.len())))
}

fn disk_check(name: &'static str, sol: &ExtremalSolution, tol: &Tolerances) -> Result<CheckRow, CliError> {
    let p = sol.p;
    Ok(match name {
        "ball_solve" => {
            let want = ball_lambda(2, p, 1.0)?;
            let err = (sol.lambda_p - want).abs() / want;
            row(name, err, tol.ball_solve, format!("lambda_p = {:.6} vs {want:.6}", sol.lambda_p))
        }
        "green_duality" => {
            let sw = &sol.sweep;
            let top = &sw.samples[sw.argmax_green()];
            let g = top.green_diagonal(p);
            let gap = (g - sw.min_lambda().powf(-1.0 / (p - 1.0))).abs() / g;
            let same = top.pole == sw.best().pole;
            let mut r = row(name, gap, tol.green_duality, format!("G max = {g:.9} at ({:.3}, {:.3})", top.pole.x, top.pole.y));
            if !same {
                r.passed = false;
                r.detail.push_str(", argmax G differs from argmin lambda");
            }
            r
        }
        "sandwich" => {
            let (r, big_r) = sandwich_radii(&sol.field, sol.x0);
            let rep = holder_sandwich_check(&sol.field, sol.x0, r, big_r, p, tol.sandwich)?;
            row(name, rep.worst_violation, tol.sandwich, format!("r = {r:.4}, R = {big_r:.4}, worst node {}", rep.worst_node))
        }
        "rates" => {
            let want = holder_exponent(2, p);
            match &sol.asymptotic {
                Some(fit) => row(
                    name,
                    (fit.exponent - want).abs() / want,
                    tol.rates,
                    format!("exponent {:.4} vs {want:.4} ({} nodes)", fit.exponent, fit.samples),
                ),
                None => row(name, f64::INFINITY, tol.rates, "too few nodes in the fit window".into()),
            }
        }
        _ => unreachable!("not a disk check: {name}"),
    })
}

/// Steiner rearrangement of an off-center pole potential must not raise
/// the grid energy, in either direction.
fn polya_szego(disk: &DomainSpec, solver: &SolverConfig, h: f64, tol: &Tolerances) -> Result<CheckRow, CliError> {
    let sol = solve_pole(disk, solver, h, Point::new(0.4, 0.2))?;
    let g = GridFunction::sample_field(&sol.field, h)?;
    let before = grid_p_energy(&g, solver.p);
    let mut worst = f64::NEG_INFINITY;
    for axis in [Axis::X1, Axis::X2] {
        let after = grid_p_energy(&steiner_rearrange(&g, axis), solver.p);
        worst = worst.max(after / before - 1.0);
    }
    Ok(row("polya_szego", worst, tol.polya_szego, format!("energy {before:.6}, worst relative change {worst:+.4}")))
}

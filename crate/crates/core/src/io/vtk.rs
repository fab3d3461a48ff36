//! Legacy ASCII VTK unstructured grids carrying one P1 field.
//!
//! Values are printed with Rust's shortest round-trip formatting, so reading
//! a written file restores every coordinate and nodal value bit for bit.
//! Boundary flags travel as a second point array; the pole index and mesh
//! size live in the title line.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use crate::plaplace::FieldFunction;

const VTK_TRIANGLE: u32 = 5;

pub fn write_vtk<W: Write>(u: &FieldFunction, name: &str, mut w: W) -> Result<()> {
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::Config(format!("invalid VTK array name {name:?}")));
    }
    let m = &u.mesh;
    let pole = m.pole.map_or("none".to_string(), |p| p.to_string());
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "morrey field h={} pole={}", m.h, pole)?;
    writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", m.n_vertices())?;
    for v in &m.vertices {
        writeln!(w, "{} {} 0", v.x, v.y)?;
    }
    writeln!(w, "CELLS {} {}", m.triangles.len(), 4 * m.triangles.len())?;
    for t in &m.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {}", m.triangles.len())?;
    for _ in &m.triangles {
        writeln!(w, "{VTK_TRIANGLE}")?;
    }
    writeln!(w, "POINT_DATA {}", m.n_vertices())?;
    writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
    for v in &u.values {
        writeln!(w, "{v}")?;
    }
    writeln!(w, "SCALARS boundary int 1\nLOOKUP_TABLE default")?;
    for &b in &m.boundary {
        writeln!(w, "{}", b as u8)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { format: "VTK", line: self.line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(l.trim().to_string());
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn header(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.next()?;
        let mut parts = l.split_whitespace().map(str::to_string);
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect()),
            _ => Err(self.err(format!("expected {key}, found {l:?}"))),
        }
    }

    fn numbers<T: std::str::FromStr>(&mut self, count: usize) -> Result<Vec<T>> {
        let l = self.next()?;
        let v: Vec<T> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| self.err(format!("bad number {s:?}"))))
            .collect::<Result<_>>()?;
        if v.len() != count {
            return Err(self.err(format!("expected {count} numbers, found {}", v.len())));
        }
        Ok(v)
    }
}

fn count(lines: &Lines<impl BufRead>, args: &[String], i: usize) -> Result<usize> {
    args.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| lines.err("missing count"))
}

/// Reads a file produced by [`write_vtk`]; returns the field and its array name.
pub fn read_vtk<R: BufRead>(r: R) -> Result<(FieldFunction, String)> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    if !lines.next()?.starts_with("# vtk DataFile") {
        return Err(lines.err("missing VTK signature"));
    }
    let title = lines.next()?;
    let mut h = None;
    let mut pole = None;
    for tok in title.split_whitespace() {
        if let Some(v) = tok.strip_prefix("h=") {
            h = v.parse::<f64>().ok();
        } else if let Some(v) = tok.strip_prefix("pole=") {
            pole = Some(if v == "none" { None } else { Some(v.parse::<usize>().map_err(|_| lines.err("bad pole"))?) });
        }
    }
    let (Some(h), Some(pole)) = (h, pole) else {
        return Err(lines.err("title must carry h= and pole="));
    };
    if lines.next()? != "ASCII" {
        return Err(lines.err("only ASCII files are supported"));
    }
    if lines.next()? != "DATASET UNSTRUCTURED_GRID" {
        return Err(lines.err("expected an unstructured grid"));
    }
    let args = lines.header("POINTS")?;
    let n = count(&lines, &args, 0)?;
    let mut vertices = Vec::with_capacity(n);
    for _ in 0..n {
        let c: Vec<f64> = lines.numbers(3)?;
        vertices.push(Point::new(c[0], c[1]));
    }
    let args = lines.header("CELLS")?;
    let m = count(&lines, &args, 0)?;
    let mut triangles = Vec::with_capacity(m);
    for _ in 0..m {
        let c: Vec<usize> = lines.numbers(4)?;
        if c[0] != 3 {
            return Err(lines.err("only triangles are supported"));
        }
        triangles.push([c[1], c[2], c[3]]);
    }
    lines.header("CELL_TYPES")?;
    for _ in 0..m {
        if lines.numbers::<u32>(1)?[0] != VTK_TRIANGLE {
            return Err(lines.err("only triangles are supported"));
        }
    }
    let args = lines.header("POINT_DATA")?;
    if count(&lines, &args, 0)? != n {
        return Err(lines.err("POINT_DATA count differs from POINTS"));
    }
    let args = lines.header("SCALARS")?;
    let name = args.first().cloned().ok_or_else(|| lines.err("unnamed scalar array"))?;
    lines.header("LOOKUP_TABLE")?;
    let values = (0..n).map(|_| Ok(lines.numbers::<f64>(1)?[0])).collect::<Result<Vec<_>>>()?;
    let args = lines.header("SCALARS")?;
    if args.first().map(String::as_str) != Some("boundary") {
        return Err(lines.err("expected the boundary array"));
    }
    lines.header("LOOKUP_TABLE")?;
    let boundary = (0..n).map(|_| Ok(lines.numbers::<u8>(1)?[0] != 0)).collect::<Result<Vec<_>>>()?;
    let mesh = Mesh::new(vertices, triangles, boundary, pole, h)?;
    Ok((FieldFunction::new(Arc::new(mesh), values)?, name))
}

use std::f64::consts::TAU;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{segment_distance, DomainSpec, Point};
use crate::error::{Error, Result};

/// Conforming P1 triangulation. Triangles are counter-clockwise.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    pub pole: Option<usize>,
    /// Target edge length the mesh was generated with.
    pub h: f64,
}

impl Mesh {
    /// Builds a mesh from raw parts, checking orientation and indices.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        pole: Option<usize>,
        h: f64,
    ) -> Result<Self> {
        if boundary.len() != vertices.len() {
            return Err(Error::Mesh("boundary flags do not match vertex count".into()));
        }
        let mesh = Self { vertices, triangles, boundary, pole, h };
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= mesh.vertices.len()) {
                return Err(Error::Mesh(format!("triangle {t} has an invalid vertex index")));
            }
            if mesh.triangle_area(t) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {t} has non-positive area")));
            }
        }
        if let Some(p) = pole {
            if p >= mesh.vertices.len() || mesh.boundary[p] {
                return Err(Error::Mesh("pole must be an interior vertex".into()));
            }
        }
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_interior(&self) -> usize {
        self.boundary.iter().filter(|&&b| !b).count()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Gradients of the three barycentric hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.corners(t);
        let two_a = (b - a).cross(c - a);
        let perp = |e: Point| Point::new(-e.y, e.x) * (1.0 / two_a);
        [perp(c - b), perp(a - c), perp(b - a)]
    }

    pub fn max_edge(&self) -> f64 {
        let mut m: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            m = m.max(a.dist(b)).max(b.dist(c)).max(c.dist(a));
        }
        m
    }

    /// Unique undirected edges, sorted.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [[a, b], [b, c], [c, a]])
            .map(|[u, v]| [u.min(v), u.max(v)])
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Edges that belong to exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [[a, b], [b, c], [c, a]])
            .map(|[u, v]| [u.min(v), u.max(v)])
            .collect();
        e.sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < e.len() {
            let mut j = i + 1;
            while j < e.len() && e[j] == e[i] {
                j += 1;
            }
            if j - i == 1 {
                out.push(e[i]);
            }
            i = j;
        }
        out
    }

    pub fn pole_point(&self) -> Option<Point> {
        self.pole.map(|p| self.vertices[p])
    }

    pub fn locator(&self) -> PointLocator<'_> {
        PointLocator::new(self)
    }
}

/// Uniform bucket grid over triangle bounding boxes for point location.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &mesh.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let n_tri = mesh.triangles.len().max(1) as f64;
        let span = hi - lo;
        let cell = ((span.x * span.y / n_tri).sqrt() * 1.5).max(1e-12 * span.norm().max(1.0));
        let nx = ((span.x / cell).ceil() as usize).max(1);
        let ny = ((span.y / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let idx = |v: f64, o: f64, n: usize| (((v - o) / cell).floor().max(0.0) as usize).min(n - 1);
        for t in 0..mesh.triangles.len() {
            let c = mesh.corners(t);
            let (x0, x1) = (c.iter().map(|p| p.x).fold(f64::INFINITY, f64::min), c.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (c.iter().map(|p| p.y).fold(f64::INFINITY, f64::min), c.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max));
            for j in idx(y0, lo.y, ny)..=idx(y1, lo.y, ny) {
                for i in idx(x0, lo.x, nx)..=idx(x1, lo.x, nx) {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        Self { mesh, origin: lo, cell, nx, ny, buckets }
    }

    /// Triangle containing `p` (closed, with a small relative tolerance) and
    /// its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let fi = (p.x - self.origin.x) / self.cell;
        let fj = (p.y - self.origin.y) / self.cell;
        if fi < -1e-9 || fj < -1e-9 || fi > self.nx as f64 + 1e-9 || fj > self.ny as f64 + 1e-9 {
            return None;
        }
        let i = (fi.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fj.floor().max(0.0) as usize).min(self.ny - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let t = t as usize;
            let [a, b, c] = self.mesh.corners(t);
            let det = (b - a).cross(c - a);
            let l1 = (p - a).cross(c - a) / det;
            let l2 = (b - a).cross(p - a) / det;
            let l0 = 1.0 - l1 - l2;
            let worst = l0.min(l1).min(l2);
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((t, [l0, l1, l2], worst));
            }
        }
        best.filter(|b| b.2 >= -1e-10).map(|(t, l, _)| (t, l))
    }

    /// Linear interpolation of nodal `values`; `None` outside the mesh.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        self.locate(p).map(|(t, l)| {
            let tri = self.mesh.triangles[t];
            l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
        })
    }
}

/// Bucketed boundary segments for near-boundary queries during meshing.
struct SegmentIndex {
    segs: Vec<(Point, Point)>,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl SegmentIndex {
    fn new(loops: &[Vec<Point>], cell: f64) -> Self {
        let mut segs = Vec::new();
        for lp in loops {
            for i in 0..lp.len() {
                segs.push((lp[i], lp[(i + 1) % lp.len()]));
            }
        }
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(a, _) in &segs {
            lo = Point::new(lo.x.min(a.x), lo.y.min(a.y));
            hi = Point::new(hi.x.max(a.x), hi.y.max(a.y));
        }
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut idx = Self { segs, origin: lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for s in 0..idx.segs.len() {
            let (a, b) = idx.segs[s];
            let (i0, j0) = idx.bucket_clamped(Point::new(a.x.min(b.x), a.y.min(b.y)));
            let (i1, j1) = idx.bucket_clamped(Point::new(a.x.max(b.x), a.y.max(b.y)));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    idx.buckets[j * idx.nx + i].push(s as u32);
                }
            }
        }
        idx
    }

    fn bucket_clamped(&self, p: Point) -> (usize, usize) {
        let f = |v: f64, o: f64, n: usize| (((v - o) / self.cell).floor().max(0.0) as usize).min(n - 1);
        (f(p.x, self.origin.x, self.nx), f(p.y, self.origin.y, self.ny))
    }

    /// True when some segment lies within distance `r` of `p`.
    fn within(&self, p: Point, r: f64) -> bool {
        let (i0, j0) = self.bucket_clamped(p - Point::new(r, r));
        let (i1, j1) = self.bucket_clamped(p + Point::new(r, r));
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &s in &self.buckets[j * self.nx + i] {
                    let (a, b) = self.segs[s as usize];
                    if segment_distance(p, a, b) < r {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Radius of the innermost ring around the pole.
const POLE_CORE: f64 = 1.0 / 256.0;
/// Ring spacing relative to the radius in the geometric core.
const POLE_RATIO: f64 = 0.35;

/// Local spacing of the graded patch around the pole: geometric
/// (`0.35 r`) up to `h/4`, then `h/4` out to `2h`, then linear up to `h`
/// at `8h`.
fn pole_spacing(r: f64, h: f64) -> f64 {
    if r <= 2.0 * h {
        (POLE_RATIO * r).min(0.25 * h)
    } else {
        (0.25 * h + 0.75 * h * (r - 2.0 * h) / (6.0 * h)).min(h)
    }
}

/// Constrained Delaunay triangulation of `spec` with target edge length `h`.
///
/// Vertices: the boundary sampled at spacing `h`, a hexagonal background
/// lattice anchored at the origin (so meshes of symmetric domains are
/// symmetric), and — if a pole is given — concentric rings around it,
/// geometrically refined from `h/4` down to radius `h/256`, uniform `h/4`
/// within `2h` and coarsening to `h` at radius `8h`. The pole itself is a
/// vertex.
pub fn triangulate(spec: &DomainSpec, h: f64, pole: Option<Point>) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::MeshResolution(format!("mesh size must be positive, got {h}")));
    }
    if let Some(w) = spec.neck_width() {
        if h > w / 6.0 {
            return Err(Error::MeshResolution(format!(
                "mesh size {h} does not resolve the neck of width {w} (need h <= {})",
                w / 6.0
            )));
        }
    }
    if let Some(y) = pole {
        let d = if spec.contains(y) { spec.boundary_distance(y) } else { 0.0 };
        if d < 2.0 * h {
            return Err(Error::PoleTooCloseToBoundary { distance: d, required: 2.0 * h });
        }
    }

    let loops = spec.boundary_loops(h);
    let index = SegmentIndex::new(&loops, h);

    let mut points: Vec<Point> = Vec::new();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    for lp in &loops {
        let start = points.len();
        let n = lp.len();
        points.extend_from_slice(lp);
        for k in 0..n {
            edges.push([start + k, start + (k + 1) % n]);
        }
    }
    let n_boundary = points.len();

    let mut pole_index = None;
    let mut patch_radius = f64::NEG_INFINITY;
    if let Some(y) = pole {
        pole_index = Some(points.len());
        points.push(y);
        let mut r = 0.0;
        let mut ring = 0usize;
        loop {
            let r_next = if r == 0.0 { POLE_CORE * h } else { r + pole_spacing(r, h) };
            if r_next > 8.0 * h {
                break;
            }
            r = r_next;
            let s = pole_spacing(r, h);
            let n = (((TAU * r / s).ceil() as usize).div_ceil(2) * 2).max(6);
            let offset = if ring % 2 == 1 { TAU / (2 * n) as f64 } else { 0.0 };
            for k in 0..n {
                let q = y + Point::polar(r, offset + TAU * k as f64 / n as f64);
                if spec.contains(q) && !index.within(q, 0.5 * s) {
                    points.push(q);
                }
            }
            patch_radius = r;
            ring += 1;
        }
    }

    let (lo, hi) = spec.bounding_box();
    let dy = h * 3f64.sqrt() / 2.0;
    let (j0, j1) = ((lo.y / dy).floor() as i64, (hi.y / dy).ceil() as i64);
    let (i0, i1) = ((lo.x / h).floor() as i64 - 1, (hi.x / h).ceil() as i64 + 1);
    for j in j0..=j1 {
        let shift = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
        for i in i0..=i1 {
            let q = Point::new((i as f64 + shift) * h, j as f64 * dy);
            if let Some(y) = pole {
                if q.dist(y) < patch_radius + 0.55 * h {
                    continue;
                }
            }
            if spec.contains(q) && !index.within(q, 0.55 * h) {
                points.push(q);
            }
        }
    }

    let spade_pts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(spade_pts, edges)
        .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != points.len() {
        return Err(Error::Mesh("duplicate mesh vertices".into()));
    }

    // Faces are inside when reaching them from the outer face crosses an
    // odd number of constraint edges (0-1 breadth-first search).
    let mut depth = vec![usize::MAX; cdt.num_all_faces()];
    let mut queue = std::collections::VecDeque::new();
    depth[0] = 0;
    for face in cdt.inner_faces() {
        for e in face.adjacent_edges() {
            if e.rev().face().is_outer() {
                let d = usize::from(e.is_constraint_edge());
                let k = face.fix().index();
                if d < depth[k] {
                    depth[k] = d;
                    if d == 0 {
                        queue.push_front(k);
                    } else {
                        queue.push_back(k);
                    }
                }
            }
        }
    }
    let faces: Vec<_> = cdt.inner_faces().collect();
    let mut by_index = vec![usize::MAX; cdt.num_all_faces()];
    for (k, f) in faces.iter().enumerate() {
        by_index[f.fix().index()] = k;
    }
    while let Some(k) = queue.pop_front() {
        let face = faces[by_index[k]];
        for e in face.adjacent_edges() {
            let Some(nb) = e.rev().face().as_inner() else { continue };
            let j = nb.fix().index();
            let d = depth[k] + usize::from(e.is_constraint_edge());
            if d < depth[j] {
                depth[j] = d;
                if d == depth[k] {
                    queue.push_front(j);
                } else {
                    queue.push_back(j);
                }
            }
        }
    }

    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in &faces {
        if depth[face.fix().index()] % 2 == 0 {
            continue;
        }
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let area2 = (points[b] - points[a]).cross(points[c] - points[a]);
        if area2.abs() <= 1e-10 * h * h {
            return Err(Error::Mesh("near-degenerate triangle".into()));
        }
        triangles.push(if area2 > 0.0 { [a, b, c] } else { [a, c, b] });
    }

    // Drop vertices not referenced by any kept triangle, keeping order.
    let mut used = vec![false; points.len()];
    for t in &triangles {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; points.len()];
    let mut vertices = Vec::with_capacity(points.len());
    let mut boundary = Vec::with_capacity(points.len());
    for (k, p) in points.iter().enumerate() {
        if used[k] {
            remap[k] = vertices.len();
            vertices.push(*p);
            boundary.push(k < n_boundary);
        }
    }
    for t in &mut triangles {
        for v in t.iter_mut() {
            *v = remap[*v];
        }
    }
    let pole = match pole_index {
        Some(k) if used[k] => Some(remap[k]),
        Some(_) => return Err(Error::NoPole),
        None => None,
    };

    let mesh = Mesh::new(vertices, triangles, boundary, pole, h)?;
    if mesh.n_interior() < 3 {
        return Err(Error::MeshResolution(format!(
            "only {} interior vertices at h = {h}",
            mesh.n_interior()
        )));
    }
    let max_edge = mesh.max_edge();
    if max_edge > 2.0 * h {
        return Err(Error::MeshResolution(format!(
            "longest edge {max_edge:.3e} exceeds 2h = {:.3e}",
            2.0 * h
        )));
    }
    log::debug!(
        "triangulated {:?}: {} vertices, {} triangles, h = {h}",
        spec.shape,
        mesh.n_vertices(),
        mesh.triangles.len()
    );
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    #[test]
    fn disk_pole_is_pinned_exactly() {
        let m = triangulate(&DomainSpec::unit_disk(), 0.5, Some(Point::ORIGIN)).unwrap();
        assert_eq!(m.pole_point(), Some(Point::ORIGIN));
        assert!(!m.boundary[m.pole.unwrap()]);
    }

    #[test]
    fn coarse_bowtie_is_rejected() {
        let r = triangulate(&DomainSpec::bowtie(0.1).unwrap(), 0.5, None);
        assert!(matches!(r, Err(Error::MeshResolution(_))));
    }

    #[test]
    fn pole_near_boundary_is_rejected() {
        let r = triangulate(&DomainSpec::unit_disk(), 0.1, Some(Point::new(0.85, 0.0)));
        assert!(matches!(r, Err(Error::PoleTooCloseToBoundary { .. })));
    }

    #[test]
    fn square_boundary_vertices_are_on_the_boundary() {
        let m = triangulate(&DomainSpec::square(1.0).unwrap(), 0.1, None).unwrap();
        for (v, &b) in m.vertices.iter().zip(&m.boundary) {
            let linf = v.x.abs().max(v.y.abs());
            if b {
                assert!((linf - 1.0).abs() < 1e-12, "{v:?}");
            } else {
                assert!(linf < 1.0);
            }
        }
        assert!((m.area() - 4.0).abs() < 1e-12);
        assert!(m.max_edge() <= 0.2);
    }

    #[test]
    fn disk_area_converges_monotonically() {
        let errs: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let m = triangulate(&DomainSpec::unit_disk(), h, Some(Point::ORIGIN)).unwrap();
                (m.area() - std::f64::consts::PI).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
    }

    #[test]
    fn meshes_of_every_kind_are_valid() {
        let specs = [
            (DomainSpec::annulus(1.0, 2.0).unwrap(), 0.1, Some(Point::new(1.5, 0.0))),
            (DomainSpec::bowtie(0.3).unwrap(), 0.05, Some(Point::ORIGIN)),
            (DomainSpec::dumbbell(0.3).unwrap(), 0.05, Some(Point::new(-5.0, 0.0))),
            (DomainSpec::cross(), 0.2, Some(Point::ORIGIN)),
            (DomainSpec::starfish(), 0.03, Some(Point::ORIGIN)),
            (DomainSpec::wobbly_disk(), 0.5, Some(Point::ORIGIN)),
        ];
        for (spec, h, pole) in specs {
            let m = triangulate(&spec, h, pole).unwrap();
            assert!((m.area() - spec.area()).abs() < 0.02 * spec.area(), "{:?}", spec.shape);
            assert!(m.max_edge() <= 2.0 * h);
            for (v, &b) in m.vertices.iter().zip(&m.boundary) {
                if !b {
                    assert!(spec.contains(*v), "{:?}: {v:?}", spec.shape);
                }
            }
            assert_eq!(m.pole_point(), pole);
        }
    }

    #[test]
    fn symmetric_domain_gives_symmetric_vertex_set() {
        let m = triangulate(&DomainSpec::square(1.0).unwrap(), 0.1, Some(Point::ORIGIN)).unwrap();
        let loc = m.locator();
        for v in &m.vertices {
            for g in [Point::new(-v.x, v.y), Point::new(v.x, -v.y)] {
                let (t, _) = loc.locate(g).unwrap();
                let nearest = m.triangles[t]
                    .iter()
                    .map(|&k| m.vertices[k].dist(g))
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest < 1e-9, "{v:?}");
            }
        }
    }

    #[test]
    fn locator_interpolates_linear_fields_exactly() {
        let spec = DomainSpec::new(
            Shape::Polygon {
                vertices: vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 1.0)],
            },
            vec![],
        )
        .unwrap();
        let m = triangulate(&spec, 0.1, None).unwrap();
        let vals: Vec<f64> = m.vertices.iter().map(|v| 3.0 * v.x - v.y + 0.5).collect();
        let loc = m.locator();
        for q in [Point::new(0.3, 0.2), Point::new(1.0, 0.4), Point::new(0.0, 0.0)] {
            let f = loc.interpolate(&vals, q).unwrap();
            assert!((f - (3.0 * q.x - q.y + 0.5)).abs() < 1e-12);
        }
        assert!(loc.interpolate(&vals, Point::new(1.5, 0.9)).is_none());
    }
}

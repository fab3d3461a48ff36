use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::polygon::{is_convex_ccw, is_simple, signed_area};
use super::{loops_contain, loops_distance, segment_distance, Loops, Point};
use crate::error::{Error, Result};

/// Axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

/// The geometric part of a domain description. Serialized adjacently tagged:
/// `{"kind": "disk", "params": {"center": [0, 0], "radius": 1}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk {
        #[serde(default)]
        center: Point,
        radius: f64,
    },
    /// `{r1 < |x| < r2}` centered at the origin.
    Annulus { r1: f64, r2: f64 },
    /// Simple polygon, counter-clockwise.
    Polygon { vertices: Vec<Point> },
    /// `{|x2| < |x1| + epsilon, |x1| < 1}`.
    Bowtie { epsilon: f64 },
    /// `B_1(-5,0) U [-5,5]x[-delta,delta] U B_1(5,0)`.
    Dumbbell { delta: f64 },
    /// Star-shaped region `|x| < r(theta)` with
    /// `r(theta) = radius + sum_k a_k cos(k theta) + sum_k b_k sin(k theta)`;
    /// terms are `[k, coefficient]` pairs.
    PolarCurve {
        radius: f64,
        #[serde(default)]
        cos_terms: Vec<(u32, f64)>,
        #[serde(default)]
        sin_terms: Vec<(u32, f64)>,
    },
    /// Interior of a union of closed axis-aligned rectangles.
    RectUnion { rects: Vec<Rect> },
}

/// Isometries a domain may declare. `ReflectX1` maps `(x1, x2)` to
/// `(-x1, x2)`, i.e. it reflects across the hyperplane `{x1 = 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    ReflectX1,
    ReflectX2,
    /// Rotation by `2 pi / k` about the origin.
    Rotation(u32),
    /// Invariance under every rotation about the origin.
    RotationContinuous,
}

impl Symmetry {
    /// Representative group elements. Continuous rotations are sampled at a
    /// few irrational-looking angles.
    pub fn elements(&self) -> Vec<Isometry> {
        match *self {
            Symmetry::ReflectX1 => vec![Isometry::ReflectX1],
            Symmetry::ReflectX2 => vec![Isometry::ReflectX2],
            Symmetry::Rotation(k) => vec![Isometry::Rotate(TAU / k.max(1) as f64)],
            Symmetry::RotationContinuous => [0.37, 1.3, 2.9, 4.4]
                .into_iter()
                .map(Isometry::Rotate)
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Isometry {
    ReflectX1,
    ReflectX2,
    Rotate(f64),
}

impl Isometry {
    pub fn apply(&self, p: Point) -> Point {
        match *self {
            Isometry::ReflectX1 => Point::new(-p.x, p.y),
            Isometry::ReflectX2 => Point::new(p.x, -p.y),
            Isometry::Rotate(a) => p.rotate(a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default)]
    pub symmetries: Vec<Symmetry>,
}

fn finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{what} must be finite")))
    }
}

impl DomainSpec {
    pub fn new(shape: Shape, symmetries: Vec<Symmetry>) -> Result<Self> {
        let spec = Self { shape, symmetries };
        spec.validate()?;
        Ok(spec)
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        let symmetries = if center == Point::ORIGIN {
            vec![Symmetry::ReflectX1, Symmetry::ReflectX2, Symmetry::RotationContinuous]
        } else {
            vec![]
        };
        Self::new(Shape::Disk { center, radius }, symmetries)
    }

    pub fn unit_disk() -> Self {
        Self::disk(Point::ORIGIN, 1.0).expect("unit disk is valid")
    }

    pub fn annulus(r1: f64, r2: f64) -> Result<Self> {
        Self::new(
            Shape::Annulus { r1, r2 },
            vec![Symmetry::ReflectX1, Symmetry::ReflectX2, Symmetry::RotationContinuous],
        )
    }

    /// The square `[-half, half]^2`.
    pub fn square(half: f64) -> Result<Self> {
        Self::new(
            Shape::Polygon {
                vertices: vec![
                    Point::new(-half, -half),
                    Point::new(half, -half),
                    Point::new(half, half),
                    Point::new(-half, half),
                ],
            },
            vec![Symmetry::ReflectX1, Symmetry::ReflectX2, Symmetry::Rotation(4)],
        )
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Self::new(Shape::Polygon { vertices }, vec![])
    }

    pub fn bowtie(epsilon: f64) -> Result<Self> {
        Self::new(
            Shape::Bowtie { epsilon },
            vec![Symmetry::ReflectX1, Symmetry::ReflectX2],
        )
    }

    pub fn dumbbell(delta: f64) -> Result<Self> {
        Self::new(
            Shape::Dumbbell { delta },
            vec![Symmetry::ReflectX1, Symmetry::ReflectX2],
        )
    }

    /// `{|x1| + 2|x2| < 1, 2|x1| + |x2| < 1}`.
    pub fn starfish() -> Self {
        let v = |x, y| Point::new(x, y);
        let t = 1.0 / 3.0;
        Self::new(
            Shape::Polygon {
                vertices: vec![
                    v(0.5, 0.0),
                    v(t, t),
                    v(0.0, 0.5),
                    v(-t, t),
                    v(-0.5, 0.0),
                    v(-t, -t),
                    v(0.0, -0.5),
                    v(t, -t),
                ],
            },
            vec![Symmetry::ReflectX1, Symmetry::ReflectX2, Symmetry::Rotation(4)],
        )
        .expect("starfish is valid")
    }

    /// `([-3,3] x [-1,1]) U ([-1,1] x [-3,3])`.
    pub fn cross() -> Self {
        Self::new(
            Shape::RectUnion {
                rects: vec![
                    Rect { min: Point::new(-3.0, -1.0), max: Point::new(3.0, 1.0) },
                    Rect { min: Point::new(-1.0, -3.0), max: Point::new(1.0, 3.0) },
                ],
            },
            vec![Symmetry::ReflectX1, Symmetry::ReflectX2, Symmetry::Rotation(4)],
        )
        .expect("cross is valid")
    }

    /// The region bounded by `r = 10 + 0.65 cos(8 theta)`.
    pub fn wobbly_disk() -> Self {
        Self::new(
            Shape::PolarCurve { radius: 10.0, cos_terms: vec![(8, 0.65)], sin_terms: vec![] },
            vec![Symmetry::ReflectX1, Symmetry::ReflectX2, Symmetry::Rotation(8)],
        )
        .expect("polar curve is valid")
    }

    /// Named test domains: `unit_disk`, `square`, `annulus` (radii 1, 2),
    /// `starfish`, `cross`, `wobbly_disk`, `bowtie:<eps>`, `dumbbell:<delta>`.
    pub fn builtin(name: &str) -> Result<Self> {
        let (base, arg) = match name.split_once(':') {
            Some((b, a)) => {
                let v: f64 = a.parse().map_err(|_| Error::InvalidSpec(format!("bad parameter `{a}` in `{name}`")))?;
                (b, Some(v))
            }
            None => (name, None),
        };
        match (base, arg) {
            ("unit_disk", None) => Ok(Self::unit_disk()),
            ("square", None) => Self::square(1.0),
            ("annulus", None) => Self::annulus(1.0, 2.0),
            ("starfish", None) => Ok(Self::starfish()),
            ("cross", None) => Ok(Self::cross()),
            ("wobbly_disk", None) => Ok(Self::wobbly_disk()),
            ("bowtie", Some(e)) => Self::bowtie(e),
            ("dumbbell", Some(d)) => Self::dumbbell(d),
            _ => Err(Error::InvalidSpec(format!("unknown builtin domain `{name}`"))),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::InvalidSpec(format!("at `{}`: {}", e.path(), e.inner())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("domain specs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::Disk { center, radius } => {
                finite(center.x + center.y + radius, "disk parameters")?;
                if *radius <= 0.0 {
                    return Err(Error::InvalidSpec("disk radius must be positive".into()));
                }
            }
            Shape::Annulus { r1, r2 } => {
                finite(r1 + r2, "annulus radii")?;
                if !(*r1 > 0.0 && r1 < r2) {
                    return Err(Error::InvalidSpec(format!(
                        "annulus needs 0 < r1 < r2, got r1 = {r1}, r2 = {r2}"
                    )));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidSpec("polygon needs at least 3 vertices".into()));
                }
                if vertices.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
                    return Err(Error::InvalidSpec("polygon vertex is not finite".into()));
                }
                if !is_simple(vertices) {
                    return Err(Error::InvalidSpec("polygon is self-intersecting".into()));
                }
                if signed_area(vertices) <= 0.0 {
                    return Err(Error::InvalidSpec(
                        "polygon vertices must be counter-clockwise".into(),
                    ));
                }
            }
            Shape::Bowtie { epsilon } => {
                if !(*epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidSpec("bowtie epsilon must be positive".into()));
                }
            }
            Shape::Dumbbell { delta } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(Error::InvalidSpec("dumbbell delta must lie in (0, 1)".into()));
                }
            }
            Shape::PolarCurve { radius, cos_terms, sin_terms } => {
                finite(*radius, "polar radius")?;
                if cos_terms.iter().chain(sin_terms).any(|&(k, c)| k == 0 || !c.is_finite()) {
                    return Err(Error::InvalidSpec(
                        "polar terms need k >= 1 and finite coefficients".into(),
                    ));
                }
                let min_r = (0..4096)
                    .map(|i| self.polar_radius(TAU * i as f64 / 4096.0))
                    .fold(f64::INFINITY, f64::min);
                if min_r <= 0.0 {
                    return Err(Error::InvalidSpec("polar curve radius must stay positive".into()));
                }
            }
            Shape::RectUnion { rects } => {
                if rects.is_empty() {
                    return Err(Error::InvalidSpec("rect_union needs at least one rect".into()));
                }
                for r in rects {
                    finite(r.min.x + r.min.y + r.max.x + r.max.y, "rect corners")?;
                    if !(r.min.x < r.max.x && r.min.y < r.max.y) {
                        return Err(Error::InvalidSpec("rect needs min < max".into()));
                    }
                }
            }
        }
        self.check_symmetries(2000)
    }

    /// Samples points in the bounding box and verifies `contains(x) ==
    /// contains(g x)` for every declared symmetry `g`.
    pub fn check_symmetries(&self, samples: usize) -> Result<()> {
        if self.symmetries.is_empty() {
            return Ok(());
        }
        let (lo, hi) = self.bounding_box();
        let span = (hi - lo) * 1.2;
        let c = lo.lerp(hi, 0.5);
        // Halton sequence keeps this deterministic without an RNG.
        let halton = |mut i: usize, b: usize| {
            let (mut f, mut r) = (1.0, 0.0);
            while i > 0 {
                f /= b as f64;
                r += f * (i % b) as f64;
                i /= b;
            }
            r
        };
        for g in self.symmetries.iter().flat_map(|s| s.elements()) {
            for i in 1..=samples {
                let x = Point::new(
                    c.x + span.x * (halton(i, 2) - 0.5),
                    c.y + span.y * (halton(i, 3) - 0.5),
                );
                if self.contains(x) != self.contains(g.apply(x)) {
                    let near_boundary = self.boundary_distance_estimate(x) < 1e-9;
                    if !near_boundary {
                        return Err(Error::InvalidSpec(format!(
                            "declared symmetry {g:?} does not hold at {x:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn boundary_distance_estimate(&self, x: Point) -> f64 {
        let (lo, hi) = self.bounding_box();
        let h = (hi - lo).norm() / 2000.0;
        loops_distance(&self.boundary_loops(h), x)
    }

    /// Polar radius function for `PolarCurve`; evaluated through Chebyshev
    /// recurrences so that it is exactly even under `x1 -> -x1` for pure
    /// cosine series of even order.
    fn polar_radius_cs(&self, c: f64, s: f64) -> f64 {
        let Shape::PolarCurve { radius, cos_terms, sin_terms } = &self.shape else {
            return 0.0;
        };
        let kmax = cos_terms.iter().chain(sin_terms).map(|t| t.0).max().unwrap_or(0) as usize;
        // t[k] = cos(k theta), u[k] = U_k(cos theta)
        let mut t = vec![0.0; kmax + 2];
        let mut u = vec![0.0; kmax + 2];
        t[0] = 1.0;
        u[0] = 1.0;
        if kmax >= 1 {
            t[1] = c;
            u[1] = 2.0 * c;
        }
        for k in 1..kmax {
            t[k + 1] = 2.0 * c * t[k] - t[k - 1];
            u[k + 1] = 2.0 * c * u[k] - u[k - 1];
        }
        let mut r = *radius;
        for &(k, a) in cos_terms {
            r += a * t[k as usize];
        }
        for &(k, b) in sin_terms {
            r += b * s * u[k as usize - 1];
        }
        r
    }

    fn polar_radius(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.polar_radius_cs(c, s)
    }

    /// Membership in the open region.
    pub fn contains(&self, p: Point) -> bool {
        match &self.shape {
            Shape::Disk { center, radius } => (p - *center).norm_sq() < radius * radius,
            Shape::Annulus { r1, r2 } => {
                let d = p.norm_sq();
                r1 * r1 < d && d < r2 * r2
            }
            Shape::Polygon { vertices } => {
                let lp = std::slice::from_ref(vertices);
                loops_contain(lp, p) && loops_distance(lp, p) > 0.0
            }
            Shape::Bowtie { epsilon } => p.y.abs() < p.x.abs() + epsilon && p.x.abs() < 1.0,
            Shape::Dumbbell { delta } => {
                (p - Point::new(-5.0, 0.0)).norm_sq() < 1.0
                    || (p - Point::new(5.0, 0.0)).norm_sq() < 1.0
                    || (p.x.abs() <= 5.0 && p.y.abs() < *delta)
            }
            Shape::PolarCurve { .. } => {
                let r = p.norm();
                if r == 0.0 {
                    return true;
                }
                r < self.polar_radius_cs(p.x / r, p.y / r)
            }
            Shape::RectUnion { rects } => RectGrid::new(rects).interior_contains(p),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.shape {
            Shape::Disk { center, radius } => (
                *center - Point::new(*radius, *radius),
                *center + Point::new(*radius, *radius),
            ),
            Shape::Annulus { r2, .. } => (Point::new(-r2, -r2), Point::new(*r2, *r2)),
            Shape::Polygon { vertices } => bbox(vertices.iter().copied()),
            Shape::Bowtie { epsilon } => (Point::new(-1.0, -1.0 - epsilon), Point::new(1.0, 1.0 + epsilon)),
            Shape::Dumbbell { .. } => (Point::new(-6.0, -1.0), Point::new(6.0, 1.0)),
            Shape::PolarCurve { .. } => {
                let rmax = (0..4096)
                    .map(|i| self.polar_radius(TAU * i as f64 / 4096.0))
                    .fold(0.0, f64::max)
                    * 1.001;
                (Point::new(-rmax, -rmax), Point::new(rmax, rmax))
            }
            Shape::RectUnion { rects } => bbox(rects.iter().flat_map(|r| [r.min, r.max])),
        }
    }

    pub fn diameter_bound(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Annulus { r1, r2 } => PI * (r2 * r2 - r1 * r1),
            Shape::Polygon { vertices } => signed_area(vertices),
            Shape::Bowtie { epsilon } => 2.0 + 4.0 * epsilon,
            Shape::Dumbbell { delta } => {
                let cap = delta * (1.0 - delta * delta).sqrt() + delta.asin();
                2.0 * PI + 20.0 * delta - 2.0 * cap
            }
            Shape::PolarCurve { radius, cos_terms, sin_terms } => {
                // 1/2 int r^2; orthogonality of the Fourier modes.
                let mut sq = 0.0;
                let mut modes = std::collections::BTreeMap::<(u32, bool), f64>::new();
                for &(k, a) in cos_terms {
                    *modes.entry((k, true)).or_default() += a;
                }
                for &(k, b) in sin_terms {
                    *modes.entry((k, false)).or_default() += b;
                }
                for c in modes.values() {
                    sq += c * c;
                }
                PI * radius * radius + 0.5 * PI * sq
            }
            Shape::RectUnion { rects } => RectGrid::new(rects).area(),
        }
    }

    pub fn is_convex(&self) -> bool {
        match &self.shape {
            Shape::Disk { .. } => true,
            Shape::Annulus { .. } | Shape::Bowtie { .. } | Shape::Dumbbell { .. } => false,
            Shape::Polygon { vertices } => is_convex_ccw(vertices),
            Shape::PolarCurve { .. } | Shape::RectUnion { .. } => {
                let h = self.diameter_bound() / 2000.0;
                let loops = self.boundary_loops(h);
                loops.len() == 1 && is_convex_ccw(&loops[0])
            }
        }
    }

    /// Width of the narrowest part of the domain that a mesh must resolve,
    /// when the shape has one.
    pub fn neck_width(&self) -> Option<f64> {
        match &self.shape {
            Shape::Bowtie { epsilon } => Some(2.0 * epsilon),
            Shape::Dumbbell { delta } => Some(2.0 * delta),
            Shape::Annulus { r1, r2 } => Some(r2 - r1),
            _ => None,
        }
    }

    /// Boundary polylines with vertices on the boundary and edge lengths at
    /// most `h`. Outer loops are counter-clockwise, holes clockwise.
    pub fn boundary_loops(&self, h: f64) -> Loops {
        match &self.shape {
            Shape::Disk { center, radius } => vec![circle(*center, *radius, h, false)],
            Shape::Annulus { r1, r2 } => vec![
                circle(Point::ORIGIN, *r2, h, false),
                circle(Point::ORIGIN, *r1, h, true),
            ],
            Shape::Polygon { vertices } => vec![subdivide(vertices, h)],
            Shape::Bowtie { epsilon: e } => {
                let corners = [
                    Point::new(0.0, -e),
                    Point::new(1.0, -1.0 - e),
                    Point::new(1.0, 1.0 + e),
                    Point::new(0.0, *e),
                    Point::new(-1.0, 1.0 + e),
                    Point::new(-1.0, -1.0 - e),
                ];
                vec![subdivide(&corners, h)]
            }
            Shape::Dumbbell { delta } => vec![dumbbell_loop(*delta, h)],
            Shape::PolarCurve { .. } => {
                let n_probe = 4096;
                let mut max_speed: f64 = 0.0;
                let mut prev = Point::polar(self.polar_radius(0.0), 0.0);
                for i in 1..=n_probe {
                    let th = TAU * i as f64 / n_probe as f64;
                    let cur = Point::polar(self.polar_radius(th), th);
                    max_speed = max_speed.max(cur.dist(prev) * n_probe as f64 / TAU);
                    prev = cur;
                }
                let n = ((TAU * max_speed * 1.01 / h).ceil() as usize).div_ceil(16).max(1) * 16;
                vec![(0..n)
                    .map(|i| {
                        let th = TAU * i as f64 / n as f64;
                        let (s, c) = th.sin_cos();
                        Point::new(c, s) * self.polar_radius_cs(c, s)
                    })
                    .collect()]
            }
            Shape::RectUnion { rects } => RectGrid::new(rects)
                .trace_loops()
                .iter()
                .map(|lp| subdivide(lp, h))
                .collect(),
        }
    }

    /// Distance to the boundary, measured against a fine polygonalization.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => (radius - p.dist(*center)).abs(),
            Shape::Annulus { r1, r2 } => {
                let r = p.norm();
                (r - r1).abs().min((r2 - r).abs())
            }
            Shape::Polygon { vertices } => loops_distance(std::slice::from_ref(vertices), p),
            // polygonal boundaries: the corner loops are exact
            Shape::Bowtie { .. } | Shape::RectUnion { .. } => {
                loops_distance(&self.boundary_loops(f64::INFINITY), p)
            }
            _ => self.boundary_distance_estimate(p),
        }
    }

    /// Largest distance from `p` to a boundary point.
    pub fn farthest_boundary_distance(&self, p: Point) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => radius + p.dist(*center),
            _ => {
                let h = self.diameter_bound() / 4000.0;
                self.boundary_loops(h)
                    .iter()
                    .flatten()
                    .map(|v| v.dist(p))
                    .fold(0.0, f64::max)
            }
        }
    }
}

fn bbox(points: impl Iterator<Item = Point>) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Circle sampled at a multiple of four equally spaced angles starting at 0.
fn circle(center: Point, r: f64, h: f64, clockwise: bool) -> Vec<Point> {
    let n = (((TAU * r / h).ceil() as usize).div_ceil(4) * 4).max(8);
    let sign = if clockwise { -1.0 } else { 1.0 };
    (0..n)
        .map(|i| {
            let th = sign * TAU * i as f64 / n as f64;
            center + Point::new(r * th.cos(), r * th.sin())
        })
        .collect()
}

/// Splits every edge of a closed polyline into equal pieces of length <= h.
fn subdivide(corners: &[Point], h: f64) -> Vec<Point> {
    let n = corners.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (corners[i], corners[(i + 1) % n]);
        let pieces = ((a.dist(b) / h).ceil() as usize).max(1);
        for k in 0..pieces {
            out.push(a.lerp(b, k as f64 / pieces as f64));
        }
    }
    out
}

fn arc(center: Point, r: f64, from: f64, to: f64, h: f64) -> Vec<Point> {
    let pieces = (((to - from).abs() * r / h).ceil() as usize).max(1);
    (0..pieces)
        .map(|k| {
            let th = from + (to - from) * k as f64 / pieces as f64;
            center + Point::new(r * th.cos(), r * th.sin())
        })
        .collect()
}

fn dumbbell_loop(delta: f64, h: f64) -> Vec<Point> {
    let c = (1.0 - delta * delta).sqrt();
    let a = delta.asin();
    let left = Point::new(-5.0, 0.0);
    let right = Point::new(5.0, 0.0);
    let mut out = Vec::new();
    // bottom bar, right bulb, top bar, left bulb
    out.extend(subdivide_open(Point::new(-5.0 + c, -delta), Point::new(5.0 - c, -delta), h));
    out.extend(arc(right, 1.0, PI + a, 3.0 * PI - a, h));
    out.extend(subdivide_open(Point::new(5.0 - c, delta), Point::new(-5.0 + c, delta), h));
    out.extend(arc(left, 1.0, a, TAU - a, h));
    out
}

fn subdivide_open(a: Point, b: Point, h: f64) -> Vec<Point> {
    let pieces = ((a.dist(b) / h).ceil() as usize).max(1);
    (0..pieces).map(|k| a.lerp(b, k as f64 / pieces as f64)).collect()
}

/// Compressed-coordinate occupancy grid of a rectangle union.
struct RectGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    occupied: Vec<bool>,
}

impl RectGrid {
    fn new(rects: &[Rect]) -> Self {
        let mut xs: Vec<f64> = rects.iter().flat_map(|r| [r.min.x, r.max.x]).collect();
        let mut ys: Vec<f64> = rects.iter().flat_map(|r| [r.min.y, r.max.y]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let (nx, ny) = (xs.len() - 1, ys.len() - 1);
        let mut occupied = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let cx = 0.5 * (xs[i] + xs[i + 1]);
                let cy = 0.5 * (ys[j] + ys[j + 1]);
                occupied[j * nx + i] = rects
                    .iter()
                    .any(|r| r.min.x <= cx && cx <= r.max.x && r.min.y <= cy && cy <= r.max.y);
            }
        }
        Self { xs, ys, occupied }
    }

    fn nx(&self) -> usize {
        self.xs.len() - 1
    }

    fn ny(&self) -> usize {
        self.ys.len() - 1
    }

    fn cell(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i as usize >= self.nx() || j as usize >= self.ny() {
            return false;
        }
        self.occupied[j as usize * self.nx() + i as usize]
    }

    /// Cell indices whose closure contains coordinate `v`.
    fn touching(coords: &[f64], v: f64) -> Option<(isize, isize)> {
        if v < coords[0] || v > coords[coords.len() - 1] {
            return None;
        }
        match coords.binary_search_by(|c| c.total_cmp(&v)) {
            Ok(k) => Some((k as isize - 1, k as isize)),
            Err(k) => Some((k as isize - 1, k as isize - 1)),
        }
    }

    fn interior_contains(&self, p: Point) -> bool {
        let (Some((i0, i1)), Some((j0, j1))) =
            (Self::touching(&self.xs, p.x), Self::touching(&self.ys, p.y))
        else {
            return false;
        };
        [(i0, j0), (i0, j1), (i1, j0), (i1, j1)]
            .into_iter()
            .all(|(i, j)| self.cell(i, j))
    }

    fn area(&self) -> f64 {
        let mut a = 0.0;
        for j in 0..self.ny() {
            for i in 0..self.nx() {
                if self.occupied[j * self.nx() + i] {
                    a += (self.xs[i + 1] - self.xs[i]) * (self.ys[j + 1] - self.ys[j]);
                }
            }
        }
        a
    }

    /// Boundary loops with the interior on the left, collinear corners merged.
    fn trace_loops(&self) -> Vec<Vec<Point>> {
        use std::collections::BTreeMap;
        // Directed edges between lattice corners (i, j) of the compressed grid.
        let mut next: BTreeMap<(isize, isize), Vec<(isize, isize)>> = BTreeMap::new();
        for j in 0..self.ny() as isize {
            for i in 0..self.nx() as isize {
                if !self.cell(i, j) {
                    continue;
                }
                if !self.cell(i, j - 1) {
                    next.entry((i, j)).or_default().push((i + 1, j));
                }
                if !self.cell(i + 1, j) {
                    next.entry((i + 1, j)).or_default().push((i + 1, j + 1));
                }
                if !self.cell(i, j + 1) {
                    next.entry((i + 1, j + 1)).or_default().push((i, j + 1));
                }
                if !self.cell(i - 1, j) {
                    next.entry((i, j + 1)).or_default().push((i, j));
                }
            }
        }
        let mut loops = Vec::new();
        while let Some((&start, _)) = next.iter().find(|(_, v)| !v.is_empty()) {
            let mut corners = vec![start];
            let mut cur = start;
            loop {
                let outs = next.get_mut(&cur).expect("boundary edges form closed loops");
                let to = outs.pop().expect("boundary edges form closed loops");
                if to == start {
                    break;
                }
                corners.push(to);
                cur = to;
            }
            let pts: Vec<Point> = corners
                .iter()
                .map(|&(i, j)| Point::new(self.xs[i as usize], self.ys[j as usize]))
                .collect();
            let n = pts.len();
            let merged: Vec<Point> = (0..n)
                .filter(|&k| {
                    let a = pts[(k + n - 1) % n];
                    let b = pts[k];
                    let c = pts[(k + 1) % n];
                    (b - a).cross(c - b) != 0.0
                })
                .map(|k| pts[k])
                .collect();
            loops.push(merged);
        }
        loops
    }
}

/// Distance from `p` to the segment chain, exposed for the mesh generator.
#[allow(dead_code)]
pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    segment_distance(p, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn containment_examples() {
        let bt = DomainSpec::bowtie(0.1).unwrap();
        assert!(!bt.contains(Point::new(0.0, 0.2)));
        assert!(bt.contains(Point::new(0.0, 0.0)));
        let star = DomainSpec::starfish();
        assert!(star.contains(Point::new(0.4, 0.1)));
        assert!(!star.contains(Point::new(0.45, 0.2)));
        let wob = DomainSpec::wobbly_disk();
        assert!(wob.contains(Point::new(10.0, 0.0)));
        assert!(!wob.contains(Point::new(10.7, 0.0)));
        let ann = DomainSpec::annulus(1.0, 2.0).unwrap();
        assert!(!ann.contains(Point::ORIGIN));
        assert!(ann.contains(Point::new(1.5, 0.0)));
    }

    #[test]
    fn cross_interior_and_boundary() {
        let cross = DomainSpec::cross();
        assert!(cross.contains(Point::new(1.0, 0.5)));
        assert!(!cross.contains(Point::new(2.0, 1.0)));
        assert!(!cross.contains(Point::new(3.0, 0.0)));
        assert!(cross.contains(Point::new(0.0, 2.9)));
        assert!((cross.area() - 20.0).abs() < 1e-12);
        let loops = cross.boundary_loops(10.0);
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 12);
        assert!(signed_area(&loops[0]) > 0.0);
    }

    #[test]
    fn shared_edge_between_rects_is_interior() {
        let spec = DomainSpec::new(
            Shape::RectUnion {
                rects: vec![
                    Rect { min: Point::new(0.0, 0.0), max: Point::new(1.0, 1.0) },
                    Rect { min: Point::new(1.0, 0.0), max: Point::new(2.0, 1.0) },
                ],
            },
            vec![],
        )
        .unwrap();
        assert!(spec.contains(Point::new(1.0, 0.5)));
        assert!(!spec.contains(Point::new(1.0, 1.0)));
        assert_eq!(spec.boundary_loops(5.0)[0].len(), 4);
        assert!(spec.is_convex());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(DomainSpec::annulus(2.0, 1.0).is_err());
        assert!(DomainSpec::annulus(1.0, 1.0).is_err());
        let bow = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(DomainSpec::polygon(bow).is_err());
        let cw = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)];
        assert!(DomainSpec::polygon(cw).is_err());
        assert!(DomainSpec::dumbbell(1.5).is_err());
        // a disk off the origin cannot claim reflection symmetry
        let bad = DomainSpec::new(
            Shape::Disk { center: Point::new(0.5, 0.0), radius: 1.0 },
            vec![Symmetry::ReflectX1],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn builtin_names() {
        assert_eq!(DomainSpec::builtin("bowtie:0.2").unwrap(), DomainSpec::bowtie(0.2).unwrap());
        assert_eq!(DomainSpec::builtin("unit_disk").unwrap(), DomainSpec::unit_disk());
        for bad in ["bowtie", "square:2", "nope", "dumbbell:x"] {
            assert!(matches!(DomainSpec::builtin(bad), Err(Error::InvalidSpec(_))), "{bad}");
        }
    }

    #[test]
    fn json_format() {
        let text = r#"{"kind": "annulus", "params": {"r1": 1.0, "r2": 2.0},
                       "symmetries": ["reflect_x1", {"rotation": 4}, "rotation_continuous"]}"#;
        let spec = DomainSpec::from_json_str(text).unwrap();
        assert_eq!(spec.shape, Shape::Annulus { r1: 1.0, r2: 2.0 });
        assert_eq!(spec.symmetries[1], Symmetry::Rotation(4));
        let back = DomainSpec::from_json_str(&spec.to_json()).unwrap();
        assert_eq!(back, spec);

        let typo = r#"{"kind": "disk", "params": {"radus": 1.0}}"#;
        let err = DomainSpec::from_json_str(typo).unwrap_err().to_string();
        assert!(err.contains("radus"), "{err}");
    }

    #[test]
    fn areas_match_polygonal_approximations() {
        for spec in [
            DomainSpec::dumbbell(0.2).unwrap(),
            DomainSpec::wobbly_disk(),
            DomainSpec::bowtie(0.3).unwrap(),
            DomainSpec::annulus(1.0, 2.0).unwrap(),
        ] {
            let loops = spec.boundary_loops(spec.diameter_bound() / 5000.0);
            let a: f64 = loops.iter().map(|l| signed_area(l)).sum();
            assert!((a - spec.area()).abs() < 1e-4 * spec.area(), "{:?}", spec.shape);
        }
    }

    #[test]
    fn convexity_flags() {
        assert!(DomainSpec::unit_disk().is_convex());
        assert!(DomainSpec::square(1.0).unwrap().is_convex());
        assert!(DomainSpec::starfish().is_convex());
        assert!(!DomainSpec::cross().is_convex());
        assert!(!DomainSpec::wobbly_disk().is_convex());
        assert!(!DomainSpec::bowtie(0.1).unwrap().is_convex());
    }
}

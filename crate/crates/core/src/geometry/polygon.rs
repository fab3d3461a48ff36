//! Convex polygon utilities. Polygons are vertex lists in counter-clockwise
//! order without a repeated closing vertex.

use super::Point;
use crate::error::{Error, Result};

pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * acc
}

/// True if every turn is a left turn or straight and the polygon has positive
/// area.
pub fn is_convex_ccw(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 || signed_area(poly) <= 0.0 {
        return false;
    }
    let scale = poly.iter().map(|p| p.norm_sq()).fold(0.0, f64::max).max(1e-300);
    let mut winding = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        if (b - a).cross(c - b) < -1e-12 * scale {
            return false;
        }
        winding += (b - a).cross(c - b).atan2((b - a).dot(c - b));
    }
    // Rules out star polygons whose turns are all left but wind twice.
    (winding - std::f64::consts::TAU).abs() < 1e-6
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| (q - p).cross(r - p);
    let on_segment = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// O(n^2) check that no two non-adjacent edges touch.
pub fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Andrew's monotone chain. Returns the hull in CCW order with collinear
/// points removed; fewer than three points come back unchanged (deduplicated).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b - a).cross(p - b) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// h_P(xi) = max over the vertices of x . xi.
pub fn support_function_polygon(poly: &[Point], direction: Point) -> Result<f64> {
    if direction.x == 0.0 && direction.y == 0.0 {
        return Err(Error::ZeroDirection);
    }
    if poly.is_empty() {
        return Err(Error::InvalidSpec("empty polygon".into()));
    }
    Ok(poly
        .iter()
        .map(|v| v.dot(direction))
        .fold(f64::NEG_INFINITY, f64::max))
}

fn drop_collinear(poly: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(poly.len());
    for &p in poly {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    let mut changed = true;
    while changed && out.len() >= 3 {
        changed = false;
        let n = out.len();
        for i in 0..n {
            let a = out[(i + n - 1) % n];
            let b = out[i];
            let c = out[(i + 1) % n];
            let scale = (b - a).norm() * (c - b).norm();
            if (b - a).cross(c - b).abs() <= 1e-14 * scale && (b - a).dot(c - b) >= 0.0 {
                out.remove(i);
                changed = true;
                break;
            }
        }
    }
    out
}

fn rotate_to_lowest(poly: &mut [Point]) {
    let lowest = (0..poly.len())
        .min_by(|&i, &j| {
            poly[i]
                .y
                .total_cmp(&poly[j].y)
                .then(poly[i].x.total_cmp(&poly[j].x))
        })
        .unwrap_or(0);
    poly.rotate_left(lowest);
}

/// (1 - rho) P + rho Q for convex CCW polygons, by merging the edge
/// sequences of both polygons in order of edge direction.
pub fn minkowski_combine_polygons(p: &[Point], q: &[Point], rho: f64) -> Result<Vec<Point>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::OutOfRange(format!("combination weight {rho}")));
    }
    if !is_convex_ccw(p) || !is_convex_ccw(q) {
        return Err(Error::NotConvex);
    }
    if rho == 0.0 {
        return Ok(drop_collinear(p));
    }
    if rho == 1.0 {
        return Ok(drop_collinear(q));
    }
    let mut a: Vec<Point> = drop_collinear(p).into_iter().map(|v| v * (1.0 - rho)).collect();
    let mut b: Vec<Point> = drop_collinear(q).into_iter().map(|v| v * rho).collect();
    rotate_to_lowest(&mut a);
    rotate_to_lowest(&mut b);
    let (n, m) = (a.len(), b.len());
    a.push(a[0]);
    a.push(a[1]);
    b.push(b[0]);
    b.push(b[1]);

    let mut out = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        out.push(a[i] + b[j]);
        let turn = (a[i + 1] - a[i]).cross(b[j + 1] - b[j]);
        if turn >= 0.0 && i < n {
            i += 1;
        }
        if turn <= 0.0 && j < m {
            j += 1;
        }
    }
    Ok(drop_collinear(&out))
}

/// Vertex-pair brute force: hull of all (1 - rho) p_i + rho q_j.
pub fn minkowski_combine_brute(p: &[Point], q: &[Point], rho: f64) -> Vec<Point> {
    let mut cloud = Vec::with_capacity(p.len() * q.len());
    for &a in p {
        for &b in q {
            cloud.push(a * (1.0 - rho) + b * rho);
        }
    }
    convex_hull(&cloud)
}

//! Derivative-free descent on the pole energy landscape.

use std::collections::HashMap;

use crate::geometry::Point;

/// Outcome of a simplex descent.
#[derive(Clone, Debug)]
pub(crate) struct SimplexResult {
    pub best: Point,
    pub value: f64,
    /// Diameter of the final simplex.
    pub diameter: f64,
}

/// Memoizes an expensive objective on exact coordinates so that repeated
/// vertices (shrinks, restarts) are free.
pub(crate) struct Memo<F> {
    f: F,
    cache: HashMap<(u64, u64), f64>,
    pub evaluations: usize,
}

impl<F: FnMut(Point) -> f64> Memo<F> {
    pub fn new(f: F) -> Self {
        Self { f, cache: HashMap::new(), evaluations: 0 }
    }

    pub fn eval(&mut self, y: Point) -> f64 {
        let key = (y.x.to_bits(), y.y.to_bits());
        if let Some(&v) = self.cache.get(&key) {
            return v;
        }
        self.evaluations += 1;
        let v = (self.f)(y);
        self.cache.insert(key, v);
        v
    }
}

fn diameter(s: &[(Point, f64); 3]) -> f64 {
    s[0].0.dist(s[1].0).max(s[0].0.dist(s[2].0)).max(s[1].0.dist(s[2].0))
}

/// Order by value, ties by coordinates, so the descent is deterministic.
fn sort(s: &mut [(Point, f64); 3]) {
    s.sort_by(|a, b| a.1.total_cmp(&b.1).then(super::sweep::lex(a.0, b.0)));
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2) in the plane. Infeasible points should evaluate to `+inf`;
/// they simply lose every comparison. Stops when the simplex diameter falls
/// below `tol` or after `max_evals` fresh evaluations.
pub(crate) fn nelder_mead<F: FnMut(Point) -> f64>(
    memo: &mut Memo<F>,
    start: Point,
    step: f64,
    tol: f64,
    max_evals: usize,
) -> SimplexResult {
    let mut s = [start, start + Point::new(step, 0.0), start + Point::new(0.0, step)]
        .map(|y| (y, memo.eval(y)));
    sort(&mut s);
    while diameter(&s) >= tol && memo.evaluations < max_evals {
        let centroid = (s[0].0 + s[1].0) * 0.5;
        let worst = s[2];
        let at = |t: f64| centroid + (centroid - worst.0) * t;
        let xr = at(1.0);
        let fr = memo.eval(xr);
        if fr < s[0].1 {
            let xe = at(2.0);
            let fe = memo.eval(xe);
            s[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < s[1].1 {
            s[2] = (xr, fr);
        } else {
            // contract towards the better of the worst vertex and its reflection
            let (xc, fc) = if fr < worst.1 {
                let xc = at(0.5);
                (xc, memo.eval(xc))
            } else {
                let xc = at(-0.5);
                (xc, memo.eval(xc))
            };
            if fc < worst.1.min(fr) {
                s[2] = (xc, fc);
            } else {
                let b = s[0].0;
                for k in 1..3 {
                    let y = b.lerp(s[k].0, 0.5);
                    s[k] = (y, memo.eval(y));
                }
            }
        }
        sort(&mut s);
    }
    SimplexResult { best: s[0].0, value: s[0].1, diameter: diameter(&s) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let target = Point::new(0.3, -0.2);
        let mut memo = Memo::new(|y: Point| {
            let d = y - target;
            2.0 * d.x * d.x + d.y * d.y + 0.5 * d.x * d.y + 1.0
        });
        let r = nelder_mead(&mut memo, Point::ORIGIN, 0.1, 1e-6, 500);
        assert!(r.best.dist(target) < 1e-5, "{:?}", r.best);
        assert!(r.diameter < 1e-6);
    }

    #[test]
    fn respects_infeasible_region() {
        // minimum of the unconstrained bowl lies outside x > 0
        let mut memo = Memo::new(|y: Point| {
            if y.x < 0.0 {
                f64::INFINITY
            } else {
                (y.x + 1.0).powi(2) + y.y * y.y
            }
        });
        let r = nelder_mead(&mut memo, Point::new(0.5, 0.3), 0.2, 1e-6, 500);
        assert!(r.best.x >= 0.0 && r.best.x < 1e-4, "{:?}", r.best);
        assert!(r.value.is_finite());
    }

    #[test]
    fn memo_counts_fresh_evaluations_only() {
        let mut calls = 0;
        let mut memo = Memo::new(|y: Point| {
            calls += 1;
            y.norm()
        });
        memo.eval(Point::new(1.0, 0.0));
        memo.eval(Point::new(1.0, 0.0));
        assert_eq!(memo.evaluations, 1);
        drop(memo);
        assert_eq!(calls, 1);
    }
}

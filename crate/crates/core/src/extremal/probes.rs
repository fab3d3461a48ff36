use serde::{Deserialize, Serialize};

use super::ball::holder_exponent;
use super::sweep::pole_sweep;
use super::{find_extremal, solve_pole, ExtremalOptions, ExtremalSolution};
use crate::error::{Error, Result};
use crate::geometry::{segment_distance, DomainSpec, Isometry, Point, Symmetry};
use crate::plaplace::{FieldFunction, SolverConfig};

const FIT_MIN_SAMPLES: usize = 8;

/// Power law `||u||_inf - u(x) ~ c |x - x0|^alpha` fitted near the maximizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub samples: usize,
}

/// Least-squares fit of `log(||u|| - u)` against `log|x - x0|` over the
/// nodes with `2h <= |x - x0| <= 10h`.
pub fn asymptotic_fit(u: &FieldFunction, x0: Point, p: f64) -> Result<AsymptoticFit> {
    if !(p > 2.0) {
        return Err(Error::InvalidRegime { n: 2, p });
    }
    let h = u.mesh.h;
    let top = u.sup_norm();
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for (v, &val) in u.mesh.vertices.iter().zip(&u.values) {
        let d = v.dist(x0);
        let gap = top - val;
        if d < 2.0 * h || d > 10.0 * h || !(gap > 0.0) {
            continue;
        }
        let (x, y) = (d.ln(), gap.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1;
    }
    if n < FIT_MIN_SAMPLES {
        return Err(Error::InsufficientSamples { found: n, required: FIT_MIN_SAMPLES });
    }
    let nf = n as f64;
    let denom = nf * sxx - sx * sx;
    if !(denom > 0.0) {
        return Err(Error::InsufficientSamples { found: n, required: FIT_MIN_SAMPLES });
    }
    let slope = (nf * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / nf;
    Ok(AsymptoticFit { exponent: slope, coefficient: intercept.exp(), samples: n })
}

/// Largest `r` and smallest `R` with `B_r(x0) ⊂ mesh ⊂ B_R(x0)`, measured on
/// the mesh boundary.
pub fn sandwich_radii(u: &FieldFunction, x0: Point) -> (f64, f64) {
    let m = &u.mesh;
    let mut r = f64::INFINITY;
    let mut big: f64 = 0.0;
    for [a, b] in m.boundary_edges() {
        r = r.min(segment_distance(x0, m.vertices[a], m.vertices[b]));
        big = big.max(x0.dist(m.vertices[a])).max(x0.dist(m.vertices[b]));
    }
    (r, big)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub passed: bool,
    /// Node with the largest violation (or smallest margin if none).
    pub worst_node: usize,
    pub worst_point: Point,
    /// Amount by which the worst node leaves the band; `<= slack` passes.
    pub worst_violation: f64,
    pub r: f64,
    pub big_r: f64,
}

/// Two-sided cusp bound
/// `(M / R^a) d^a <= M - u(x) <= (M / r^a) d^a`, `d = |x - x0|`,
/// `M = ||u||_inf`, `a = (p-2)/(p-1)`, checked at every node up to `slack`.
/// The radii must satisfy `B_r(x0) ⊂ Ω ⊂ B_R(x0)` on the mesh, up to a
/// hundredth of the mesh size.
pub fn holder_sandwich_check(
    u: &FieldFunction,
    x0: Point,
    r: f64,
    big_r: f64,
    p: f64,
    slack: f64,
) -> Result<SandwichReport> {
    if !(p > 2.0) {
        return Err(Error::InvalidRegime { n: 2, p });
    }
    let (r_in, r_out) = sandwich_radii(u, x0);
    let tol = 0.01 * u.mesh.h;
    if !(r > 0.0) || r > r_in + tol || big_r < r_out - tol {
        return Err(Error::Precondition(format!(
            "need B_r(x0) ⊂ Ω ⊂ B_R(x0): r = {r} vs inner {r_in}, R = {big_r} vs outer {r_out}"
        )));
    }
    let a = holder_exponent(2, p);
    let top = u.sup_norm();
    let (lo_c, hi_c) = (top / big_r.powf(a), top / r.powf(a));
    let mut worst = (0usize, f64::NEG_INFINITY);
    for (k, (v, &val)) in u.mesh.vertices.iter().zip(&u.values).enumerate() {
        let da = v.dist(x0).powf(a);
        let gap = top - val;
        let violation = (lo_c * da - gap).max(gap - hi_c * da);
        if violation > worst.1 {
            worst = (k, violation);
        }
    }
    Ok(SandwichReport {
        passed: worst.1 <= slack,
        worst_node: worst.0,
        worst_point: u.mesh.vertices[worst.0],
        worst_violation: worst.1,
        r,
        big_r,
    })
}

/// `max_v |u(g v) - u(v)|` for every declared group element; images that
/// fall outside the mesh count as zero (they lie within a chord sagitta of
/// the boundary).
pub fn symmetry_defects(u: &FieldFunction, symmetries: &[Symmetry]) -> Vec<(Isometry, f64)> {
    let loc = u.mesh.locator();
    symmetries
        .iter()
        .flat_map(|s| s.elements())
        .map(|g| {
            let d = u
                .mesh
                .vertices
                .iter()
                .zip(&u.values)
                .map(|(&v, &val)| (loc.interpolate(&u.values, g.apply(v)).unwrap_or(0.0) - val).abs())
                .fold(0.0, f64::max);
            (g, d)
        })
        .collect()
}

/// Size of the orbit of the maximizer under the declared symmetries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitEstimate {
    Finite(usize),
    /// A full rotational orbit: a continuum of extremals.
    Continuum,
}

/// Orbit of `x0` under the group generated by `symmetries`; points closer
/// than `tol` are identified.
pub fn orbit(x0: Point, symmetries: &[Symmetry], tol: f64) -> (OrbitEstimate, Vec<Point>) {
    if symmetries.contains(&Symmetry::RotationContinuous) && x0.norm() > tol {
        return (OrbitEstimate::Continuum, vec![x0]);
    }
    let gens: Vec<Isometry> = symmetries
        .iter()
        .filter(|s| **s != Symmetry::RotationContinuous)
        .flat_map(|s| s.elements())
        .collect();
    let mut pts = vec![x0];
    let mut k = 0;
    while k < pts.len() && pts.len() < 1024 {
        let y = pts[k];
        for g in &gens {
            let z = g.apply(y);
            if pts.iter().all(|q| q.dist(z) > tol) {
                pts.push(z);
            }
        }
        k += 1;
    }
    (OrbitEstimate::Finite(pts.len()), pts)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub x0: Point,
    pub lambda_p: f64,
    /// `(element, max |u∘g - u|)` per declared group element.
    pub defects: Vec<(String, f64)>,
    pub symmetry_consistent: bool,
    pub orbit: OrbitEstimate,
    /// Orbit points at which the pole energy was re-evaluated.
    pub orbit_points: Vec<Point>,
    /// Largest relative deviation of `lambda` along the orbit from
    /// `lambda(x0)`; absent for a trivial orbit.
    pub orbit_lambda_spread: Option<f64>,
}

impl UniquenessReport {
    pub fn distinct_extremal_count(&self) -> String {
        match self.orbit {
            OrbitEstimate::Finite(n) => n.to_string(),
            OrbitEstimate::Continuum => "continuum (rotational orbit)".into(),
        }
    }
}

/// Symmetry and orbit analysis of a computed extremal. For a continuous
/// rotation group the pole energy is re-evaluated at `x0` rotated by the
/// sample angles; for a finite orbit at every orbit point.
pub fn uniqueness_report(
    spec: &DomainSpec,
    sol: &ExtremalSolution,
    config: &SolverConfig,
    tol: f64,
) -> Result<UniquenessReport> {
    let h = sol.field.mesh.h;
    let defects: Vec<(String, f64)> = symmetry_defects(&sol.field, &spec.symmetries)
        .into_iter()
        .map(|(g, d)| (format!("{g:?}"), d))
        .collect();
    let symmetry_consistent = defects.iter().all(|(_, d)| *d <= tol);
    let (orbit_kind, mut pts) = orbit(sol.x0, &spec.symmetries, h);
    if orbit_kind == OrbitEstimate::Continuum {
        pts.extend(Symmetry::RotationContinuous.elements().iter().map(|g| g.apply(sol.x0)));
    }
    let orbit_lambda_spread = if pts.len() > 1 {
        let base = solve_pole(spec, config, h, sol.x0)?.lambda;
        let mut spread: f64 = 0.0;
        for &y in &pts[1..] {
            let lam = solve_pole(spec, config, h, y)?.lambda;
            spread = spread.max((lam - base).abs() / base);
        }
        Some(spread)
    } else {
        None
    };
    Ok(UniquenessReport {
        x0: sol.x0,
        lambda_p: sol.lambda_p,
        defects,
        symmetry_consistent,
        orbit: orbit_kind,
        orbit_points: pts,
        orbit_lambda_spread,
    })
}

/// [`find_extremal`] followed by [`uniqueness_report`].
pub fn uniqueness_probe(
    spec: &DomainSpec,
    config: &SolverConfig,
    opts: &ExtremalOptions,
    tol: f64,
) -> Result<UniquenessReport> {
    if spec.symmetries.is_empty() {
        return Err(Error::Precondition("the domain declares no symmetry".into()));
    }
    let sol = find_extremal(spec, config, opts)?;
    uniqueness_report(spec, &sol, config, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowtieScanEntry {
    pub epsilon: f64,
    pub h: f64,
    pub spacing: f64,
    pub lambda_origin: f64,
    pub min_lambda: f64,
    pub argmin: Point,
    /// Largest energy spread over mirror pairs of swept poles.
    pub noise_floor: f64,
    /// Symmetry broken: the argmin is off the origin and
    /// `lambda(0) - min lambda > 5 * noise_floor`.
    pub broken: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowtieScan {
    pub entries: Vec<BowtieScanEntry>,
    /// Consecutive `epsilon` values between which the argmin returns to the
    /// origin, if that happens within the scan.
    pub crossover: Option<(f64, f64)>,
}

/// Pole sweeps of the bow tie for each `epsilon` (ascending). `resolution`
/// maps `epsilon` to the `(h, spacing)` of its sweep; the sweep grid always
/// contains the origin.
pub fn bowtie_scan(
    epsilons: &[f64],
    config: &SolverConfig,
    resolution: impl Fn(f64) -> (f64, f64),
) -> Result<BowtieScan> {
    let mut entries = Vec::new();
    for &eps in epsilons {
        let spec = DomainSpec::bowtie(eps)?;
        let (h, spacing) = resolution(eps);
        let sweep = pole_sweep(&spec, config, spacing, h)?;
        let lambda_origin = match sweep.sample_at(Point::ORIGIN).filter(|s| s.ok()) {
            Some(s) => s.lambda,
            None => solve_pole(&spec, config, h, Point::ORIGIN)?.lambda,
        };
        let maps: Vec<Isometry> = spec.symmetries.iter().flat_map(|s| s.elements()).collect();
        let noise_floor = sweep.orbit_spread(&maps);
        let best = sweep.best();
        let gap = lambda_origin - best.lambda;
        let broken = best.pole.norm() > 0.5 * spacing && gap > 5.0 * noise_floor;
        entries.push(BowtieScanEntry {
            epsilon: eps,
            h,
            spacing,
            lambda_origin,
            min_lambda: best.lambda,
            argmin: best.pole,
            noise_floor,
            broken,
        });
    }
    let crossover = entries
        .windows(2)
        .find(|w| w[0].broken && !w[1].broken)
        .map(|w| (w[0].epsilon, w[1].epsilon));
    Ok(BowtieScan { entries, crossover })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::triangulate;
    use approx::assert_relative_eq;

    fn talenti(h: f64, p: f64) -> FieldFunction {
        let mesh = Arc::new(triangulate(&DomainSpec::unit_disk(), h, Some(Point::ORIGIN)).unwrap());
        let a = holder_exponent(2, p);
        FieldFunction::interpolate(mesh, |x| (1.0 - x.norm().powf(a)).max(0.0))
    }

    #[test]
    fn exact_talenti_fit() {
        let u = talenti(0.04, 3.0);
        let fit = asymptotic_fit(&u, Point::ORIGIN, 3.0).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-3, "{fit:?}");
        assert!((fit.coefficient - 1.0).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn fit_needs_samples() {
        // no node within 10h of a far-away point
        let u = talenti(0.05, 3.0);
        assert!(matches!(
            asymptotic_fit(&u, Point::new(5.0, 5.0), 3.0),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn talenti_sandwich_is_tight() {
        let u = talenti(0.05, 4.0);
        let rep = holder_sandwich_check(&u, Point::ORIGIN, 1.0, 1.0, 4.0, 1e-12).unwrap();
        assert!(rep.passed, "{rep:?}");
        // equality: lower and upper bands coincide
        let rep = holder_sandwich_check(&u, Point::ORIGIN, 1.0, 1.0, 4.0, 0.0).unwrap();
        assert!(rep.worst_violation.abs() < 1e-12);
    }

    #[test]
    fn corrupted_node_is_reported() {
        let mut u = talenti(0.05, 4.0);
        let k = u
            .mesh
            .vertices
            .iter()
            .position(|v| (v.norm() - 0.5).abs() < 0.05)
            .unwrap();
        u.values[k] = 1.0;
        let rep = holder_sandwich_check(&u, Point::ORIGIN, 1.0, 1.0, 4.0, 2e-2).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.worst_node, k);
    }

    #[test]
    fn sandwich_radii_are_checked() {
        let u = talenti(0.05, 3.0);
        let (r, big) = sandwich_radii(&u, Point::ORIGIN);
        assert!(r <= 1.0 && r > 0.999);
        assert_relative_eq!(big, 1.0, max_relative = 1e-12);
        assert!(holder_sandwich_check(&u, Point::ORIGIN, 1.1, 1.1, 3.0, 0.02).is_err());
    }

    #[test]
    fn orbits() {
        let refl = [Symmetry::ReflectX1, Symmetry::ReflectX2];
        assert_eq!(orbit(Point::ORIGIN, &refl, 1e-6).0, OrbitEstimate::Finite(1));
        assert_eq!(orbit(Point::new(0.4, 0.0), &refl, 1e-6).0, OrbitEstimate::Finite(2));
        assert_eq!(orbit(Point::new(0.4, 0.1), &refl, 1e-6).0, OrbitEstimate::Finite(4));
        let sq = [Symmetry::ReflectX1, Symmetry::ReflectX2, Symmetry::Rotation(4)];
        assert_eq!(orbit(Point::new(0.4, 0.1), &sq, 1e-6).0, OrbitEstimate::Finite(8));
        let rot = [Symmetry::RotationContinuous];
        assert_eq!(orbit(Point::new(1.5, 0.0), &rot, 1e-6).0, OrbitEstimate::Continuum);
        assert_eq!(orbit(Point::ORIGIN, &rot, 1e-6).0, OrbitEstimate::Finite(1));
    }

    #[test]
    fn radial_field_has_no_defects() {
        let u = talenti(0.05, 3.0);
        let spec = DomainSpec::unit_disk();
        for (g, d) in symmetry_defects(&u, &spec.symmetries) {
            assert!(d < 2e-2, "{g:?}: {d}");
        }
    }
}

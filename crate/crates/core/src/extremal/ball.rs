//! Closed forms on balls and on the whole space, in any dimension `n`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_regime(n: u32, p: f64) -> Result<()> {
    if n == 0 || !(p > n as f64) || !p.is_finite() {
        return Err(Error::InvalidRegime { n, p });
    }
    Ok(())
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: u32) -> f64 {
    // omega_n = 2 pi / n * omega_{n-2}
    let (mut w, start) = if n.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

/// Cusp exponent `(p - n) / (p - 1)`.
pub fn holder_exponent(n: u32, p: f64) -> f64 {
    (p - n as f64) / (p - 1.0)
}

/// Sharp constant of the ball of radius `r`:
/// `((p-n)/(p-1))^{p-1} r^{n-p} n omega_n`.
pub fn ball_lambda(n: u32, p: f64, r: f64) -> Result<f64> {
    check_regime(n, p)?;
    if !(r > 0.0) {
        return Err(Error::OutOfRange(format!("radius {r}")));
    }
    let nf = n as f64;
    Ok(holder_exponent(n, p).powf(p - 1.0) * r.powf(nf - p) * nf * unit_ball_volume(n))
}

/// `a (r^alpha - |x - x0|^alpha)` inside the ball, 0 outside.
pub fn ball_extremal_value(n: u32, p: f64, r: f64, a: f64, x: &[f64], x0: &[f64]) -> Result<f64> {
    check_regime(n, p)?;
    if x.len() != n as usize || x0.len() != n as usize {
        return Err(Error::OutOfRange(format!("points must have {n} coordinates")));
    }
    let d = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if d >= r {
        return Ok(0.0);
    }
    let alpha = holder_exponent(n, p);
    Ok(a * (r.powf(alpha) - d.powf(alpha)))
}

/// `int |Du|^p` of the ball extremal with amplitude `a` and radius `r`,
/// integrated in polar coordinates: `a^p alpha^{p-1} n omega_n r^{alpha}`
/// times `alpha^{...}` collapses to this form since
/// `|Du| = a alpha s^{alpha - 1}`.
pub fn talenti_energy(n: u32, p: f64, r: f64, a: f64) -> Result<f64> {
    check_regime(n, p)?;
    let nf = n as f64;
    let alpha = holder_exponent(n, p);
    // int_0^r (a alpha s^{alpha-1})^p n omega_n s^{n-1} ds, and
    // p(alpha - 1) + n - 1 = alpha - 1.
    Ok(a.abs().powf(p) * alpha.powf(p) * nf * unit_ball_volume(n) * r.powf(alpha) / alpha)
}

/// Whole-space constant in `||u||_inf^p <= C |supp u|^{p/n - 1} int |Du|^p`:
/// `((p-1)/(p-n))^{p-1} n^{-1} omega_n^{-p/n}`.
pub fn whole_space_constant(n: u32, p: f64) -> Result<f64> {
    check_regime(n, p)?;
    let nf = n as f64;
    Ok(holder_exponent(n, p).powf(1.0 - p) / nf * unit_ball_volume(n).powf(-p / nf))
}

/// Limit of `(||u||_inf - u(x)) / |x - x0|^alpha` at the maximizer:
/// `sup ((p-1)/(p-n)) (lambda / (n omega_n))^{1/(p-1)}`.
pub fn asymptotic_coefficient(n: u32, p: f64, lambda: f64, sup: f64) -> Result<f64> {
    check_regime(n, p)?;
    let nf = n as f64;
    Ok(sup / holder_exponent(n, p) * (lambda / (nf * unit_ball_volume(n))).powf(1.0 / (p - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0);
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-15);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(unit_ball_volume(4), PI * PI / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn ball_lambda_values() {
        assert_relative_eq!(ball_lambda(2, 3.0, 1.0).unwrap(), PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(ball_lambda(2, 4.0, 1.0).unwrap(), 16.0 * PI / 27.0, max_relative = 1e-14);
        assert_relative_eq!(ball_lambda(3, 4.0, 1.0).unwrap(), 4.0 * PI / 27.0, max_relative = 1e-14);
        let ratio = ball_lambda(2, 3.7, 2.0).unwrap() / ball_lambda(2, 3.7, 1.0).unwrap();
        assert_relative_eq!(ratio, 2f64.powf(2.0 - 3.7), max_relative = 1e-14);
        assert!(matches!(ball_lambda(2, 2.0, 1.0), Err(Error::InvalidRegime { .. })));
    }

    #[test]
    fn extremal_values() {
        let v = ball_extremal_value(2, 4.0, 1.0, 1.0, &[0.5, 0.0], &[0.0, 0.0]).unwrap();
        assert_relative_eq!(v, 1.0 - 0.5f64.powf(2.0 / 3.0), max_relative = 1e-14);
        let v = ball_extremal_value(2, 3.0, 1.0, 1.0, &[0.0, 0.25], &[0.0, 0.0]).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-14);
        assert_eq!(ball_extremal_value(2, 3.0, 1.0, 1.0, &[0.6, 0.8], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn talenti_energy_matches_quadrature() {
        // midpoint rule in the radius, substituting s = r t^2 to tame the cusp
        for (n, p, r, a) in [(2u32, 3.0, 1.0, 1.0), (2, 4.5, 0.7, 2.0), (3, 5.0, 1.3, 0.4)] {
            let alpha = holder_exponent(n, p);
            let m = 200_000;
            let mut acc = 0.0;
            for k in 0..m {
                let t = (k as f64 + 0.5) / m as f64;
                let s = r * t * t;
                let ds = 2.0 * r * t / m as f64;
                let grad = a * alpha * s.powf(alpha - 1.0);
                acc += grad.powf(p) * n as f64 * unit_ball_volume(n) * s.powi(n as i32 - 1) * ds;
            }
            assert_relative_eq!(talenti_energy(n, p, r, a).unwrap(), acc, max_relative = 1e-4);
        }
    }

    #[test]
    fn whole_space_value() {
        assert_relative_eq!(
            whole_space_constant(2, 4.0).unwrap(),
            27.0 / (16.0 * PI * PI),
            max_relative = 1e-14
        );
    }

    #[test]
    fn unit_ball_coefficient_is_one() {
        for p in [3.0, 4.0, 7.5] {
            let lam = ball_lambda(2, p, 1.0).unwrap();
            assert_relative_eq!(asymptotic_coefficient(2, p, lam, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        }
    }
}

//! Boundary-collar cutoff profiles built from the quintic smoothstep.

use crate::error::{Error, Result};
use crate::fields::ScalarField;

/// Interior threshold of the tangential families; the smoothing length must
/// not exceed half of it.
pub const D0: f64 = 0.5;

/// Quintic smoothstep clamped to [0, 1]; returns value, first and second derivative.
pub fn smoothstep(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let v = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
        let d = 30.0 * x * x * (1.0 - x) * (1.0 - x);
        let dd = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
        (v, d, dd)
    }
}

/// Regularized distance: `rho = d` for `d <= 1/4`, `rho = 1/2` for `d >= 3/4`,
/// monotone and C^2 in between. Returns `(rho, d rho / d d)`.
pub fn rho_profile(d: f64) -> (f64, f64) {
    if d <= 0.25 {
        return (d, 1.0);
    }
    if d >= 0.75 {
        return (0.5, 0.0);
    }
    let t = 2.0 * (d - 0.25);
    let (s, _, _) = smoothstep(t);
    let integral = t.powi(4) * (2.5 - 3.0 * t + t * t);
    (d - 0.5 * integral, 1.0 - s)
}

/// Collar cutoff in the scaled variable: 0 below 1/4, 1 above 3/4.
/// Returns `(chi, chi')`.
pub fn chi_profile(s: f64) -> (f64, f64) {
    let (v, d, _) = smoothstep(2.0 * s - 0.5);
    (v, 2.0 * d)
}

/// `chi_eps(rho) = chi(rho / eps)` and its derivative in `rho`.
pub fn chi_eps(rho: f64, eps: f64) -> (f64, f64) {
    let (v, d) = chi_profile(rho / eps);
    (v, d / eps)
}

pub fn check_eps(eps: f64) -> Result<()> {
    let max = 0.5 * D0;
    if !(eps > 0.0 && eps <= max) {
        return Err(Error::EpsOutOfRange { eps, max });
    }
    Ok(())
}

/// Evaluates `rho(d)`, `chi_eps(rho)` and `chi_eps'(rho)` node by node.
pub fn cutoff_profiles(
    d: &ScalarField,
    eps: f64,
) -> Result<(ScalarField, ScalarField, ScalarField)> {
    check_eps(eps)?;
    let rho = d.map(|v| rho_profile(v).0);
    let chi = rho.map(|v| chi_eps(v, eps).0);
    let chi_prime = rho.map(|v| chi_eps(v, eps).1);
    Ok((rho, chi, chi_prime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn rho_examples() {
        assert_eq!(rho_profile(0.1).0, 0.1);
        assert_eq!(rho_profile(0.9).0, 0.5);
        assert!((rho_profile(0.75 - 1e-12).0 - 0.5).abs() < 1e-10);
    }

    #[test]
    fn rho_is_monotone_and_consistent() {
        let mut prev = 0.0;
        for i in 1..=1000 {
            let d = i as f64 / 1000.0;
            let (r, dr) = rho_profile(d);
            assert!(r >= prev);
            assert!(dr >= 0.0);
            let h = 1e-6;
            let fd = (rho_profile(d + h).0 - rho_profile(d - h).0) / (2.0 * h);
            assert!((fd - dr).abs() < 1e-6, "d={d}");
            prev = r;
        }
    }

    #[test]
    fn chi_examples_and_derivative() {
        assert_eq!(chi_eps(0.2, 0.2).0, 1.0);
        assert_eq!(chi_profile(0.2).0, 0.0);
        for i in 0..200 {
            let s = i as f64 / 200.0;
            let h = 1e-6;
            let fd = (chi_profile(s + h).0 - chi_profile(s - h).0) / (2.0 * h);
            assert!((fd - chi_profile(s).1).abs() < 1e-6);
            assert!(chi_profile(s).1 >= 0.0);
        }
    }

    #[test]
    fn eps_range_enforced() {
        let g = build_grid(4, 8).unwrap();
        let d = ScalarField::from_values(&g, g.boundary_distance());
        assert!(cutoff_profiles(&d, 0.0).is_err());
        assert!(cutoff_profiles(&d, 0.3).is_err());
        assert!(cutoff_profiles(&d, 0.25).is_ok());
    }
}

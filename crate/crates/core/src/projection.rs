//! Orthogonal projection onto divergence-free fields with a Dirichlet potential.

use crate::background::BackgroundJet;
use crate::calculus::{grad_dirichlet_raw, raise};
use crate::elliptic::{solve_dirichlet, weighted_div, SolverOptions};
use crate::error::Result;
use crate::fields::{OneForm, ScalarField, VectorField};
use crate::grid::Grid;

/// `PU = U - g^-1 grad q` where `q` solves the Dirichlet problem with data
/// `div U`. Returns the projected field together with `q`.
pub fn project(grid: &Grid, u: &VectorField, b: &BackgroundJet) -> Result<(VectorField, ScalarField)> {
    project_with(grid, u, b, SolverOptions::default())
}

pub fn project_with(
    grid: &Grid,
    u: &VectorField,
    b: &BackgroundJet,
    opts: SolverOptions,
) -> Result<(VectorField, ScalarField)> {
    grid.check_same(u.n_r, u.n_theta)?;
    let rhs = weighted_div(grid, &u.radial, &u.angular, &b.kappa);
    let q = solve_dirichlet(grid, &rhs, &b.g_inv, &b.kappa, opts)?;
    let (gr, ga) = grad_dirichlet_raw(grid, &q.values);
    let gq = OneForm::from_parts(grid, gr, ga);
    let correction = if b.is_flat() {
        gq.retag()
    } else {
        raise(grid, &gq, &b.g_inv)?
    };
    Ok((u - &correction, q))
}

/// Quadrature norm of `kappa^-1 d_a(kappa W^a)`.
pub fn divergence_defect(grid: &Grid, w: &VectorField, b: &BackgroundJet) -> Result<f64> {
    grid.check_same(w.n_r, w.n_theta)?;
    Ok(weighted_div(grid, &w.radial, &w.angular, &b.kappa).norm(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{rigid_rotation_background, Background};
    use crate::grid::build_grid;

    #[test]
    fn gradient_of_dirichlet_potential_is_annihilated() {
        let g = build_grid(64, 64).unwrap();
        let b = rigid_rotation_background(1.0).jet(0.0, &g).unwrap();
        let u = VectorField::from_cartesian(&g, |x, y| (x / 2.0, y / 2.0));
        let (pu, _) = project(&g, &u, &b).unwrap();
        assert!(pu.max_abs() < 1e-4, "{}", pu.max_abs());
    }

    #[test]
    fn rotation_field_is_fixed() {
        let g = build_grid(32, 32).unwrap();
        let b = rigid_rotation_background(1.0).jet(0.0, &g).unwrap();
        let u = VectorField::from_cartesian(&g, |x, y| (-y, x));
        let (pu, q) = project(&g, &u, &b).unwrap();
        assert!((&pu - &u).max_abs() < 1e-10);
        assert!(q.max_abs() < 1e-10);
    }

    #[test]
    fn linear_field_closed_form() {
        let g = build_grid(64, 64).unwrap();
        let b = rigid_rotation_background(1.0).jet(0.0, &g).unwrap();
        let u = VectorField::from_cartesian(&g, |x, _| (x, 0.0));
        let (pu, _) = project(&g, &u, &b).unwrap();
        let want = VectorField::from_cartesian(&g, |x, y| (x / 2.0, -y / 2.0));
        assert!((&pu - &want).max_abs() < 1e-3);
    }

    #[test]
    fn defects() {
        let g = build_grid(64, 64).unwrap();
        let b = rigid_rotation_background(1.0).jet(0.0, &g).unwrap();
        let rot = VectorField::from_cartesian(&g, |x, y| (-y, x));
        assert!(divergence_defect(&g, &rot, &b).unwrap() < 1e-10);
        let lin = VectorField::from_cartesian(&g, |x, _| (x, 0.0));
        let d = divergence_defect(&g, &lin, &b).unwrap();
        assert!((d - std::f64::consts::PI.sqrt()).abs() < 1e-3);
        assert_eq!(divergence_defect(&g, &VectorField::zeros(&g), &b).unwrap(), 0.0);
    }
}

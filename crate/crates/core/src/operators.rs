//! Normal operators `A_f`, their smoothed versions `A_f^eps`, and projected
//! multiplication operators.
//!
//! `A_f W = P(-g^-1 grad((d_c f) W^c))`. The potential `phi = (d f).W` is
//! differenced against its boundary value `(d_N f) W_N` on the last face, so
//! for exactly divergence-free `U`,
//! `<U, A_f W> = sum_k dtheta (-d_N f) U_N W_N`, the boundary quadratic form.

use crate::background::BackgroundJet;
use crate::calculus::{
    contract_symmetric, contract_two_form, lower, normal_derivative_dirichlet, raise,
    scalar_partials,
};
use crate::error::{Error, Result};
use crate::families::{lie_derive, Member, VectorFamily};
use crate::fields::{random_vector_field, OneForm, ScalarField, SymmetricTensorField, Tensor, TwoForm, VectorField};
use crate::grid::{Grid, Location};
use crate::profiles::{check_eps, chi_eps, rho_profile};
use crate::projection::project;

/// Smoothing length of the regularized operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationParams {
    pub eps: f64,
}

impl RegularizationParams {
    pub fn new(eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(RegularizationParams { eps })
    }
}

/// Rejects scalars whose extrapolated boundary trace is not zero.
pub fn check_trace(grid: &Grid, f: &ScalarField) -> Result<()> {
    grid.check_same(f.n_r, f.n_theta)?;
    let trace = f
        .boundary_trace(grid)
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if trace > 1e-8 * f.max_abs().max(1.0) {
        return Err(Error::NonzeroTrace { trace });
    }
    Ok(())
}

fn to_vector(grid: &Grid, w: OneForm, b: &BackgroundJet) -> Result<VectorField> {
    if b.is_flat() {
        Ok(w.retag())
    } else {
        raise(grid, &w, &b.g_inv)
    }
}

/// `-grad((d f).W)` with the boundary value of the potential taken from the
/// normal derivative of `f`.
pub fn af_unprojected(grid: &Grid, f: &ScalarField, w: &VectorField) -> Result<OneForm> {
    check_trace(grid, f)?;
    grid.check_same(w.n_r, w.n_theta)?;
    let n = grid.n_theta;
    let nr = grid.n_r;
    let (df_r, df_t) = scalar_partials(grid, &f.values);
    let ur_c = grid.stencils().f2c_val.apply(&w.radial, n, -1.0);
    let phi: Vec<f64> = (0..grid.len())
        .map(|i| df_r[i] * ur_c[i] + df_t[i] * w.angular[i])
        .collect();
    let dn = normal_derivative_dirichlet(grid, f);
    let mut radial = vec![0.0; grid.len()];
    for j in 0..nr {
        for k in 0..n {
            let i = j * n + k;
            radial[i] = if j + 1 < nr {
                -(phi[i + n] - phi[i]) / grid.dr
            } else {
                let phi_b = dn[k] * w.radial[i];
                -2.0 * (phi_b - phi[i]) / grid.dr
            };
        }
    }
    let mut angular = grid.d_theta(&phi);
    for (j, ring) in angular.chunks_mut(n).enumerate() {
        let inv = -1.0 / grid.r[j];
        ring.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(OneForm::from_parts(grid, radial, angular))
}

/// `A_f W`.
pub fn apply_af(grid: &Grid, f: &ScalarField, w: &VectorField, b: &BackgroundJet) -> Result<VectorField> {
    let y = af_unprojected(grid, f, w)?;
    Ok(project(grid, &to_vector(grid, y, b)?, b)?.0)
}

/// `int_{r=1} (-d_N f) U_N W_N kappa dS` from the stored boundary normal components.
pub fn boundary_quadratic_form(
    grid: &Grid,
    u: &VectorField,
    w: &VectorField,
    f: &ScalarField,
    b: &BackgroundJet,
) -> Result<f64> {
    grid.check_same(u.n_r, u.n_theta)?;
    grid.check_same(w.n_r, w.n_theta)?;
    let dn = normal_derivative_dirichlet(grid, f);
    let kb = b.kappa.boundary_trace(grid);
    let (un, wn) = (u.boundary_normal(), w.boundary_normal());
    let terms: Vec<f64> = (0..grid.n_theta)
        .map(|k| -dn[k] * un[k] * wn[k] * kb[k])
        .collect();
    Ok(grid.dtheta * crate::grid::pairwise_sum(&terms))
}

/// Face weight `chi_eps'(rho) rho'^2 f / rho` of the smoothed operator.
fn eps_face_weight(grid: &Grid, f: &ScalarField, reg: RegularizationParams) -> Vec<f64> {
    let n = grid.n_theta;
    let f_face = grid.stencils().c2f_val_dir.apply(&f.values, n, 1.0);
    let mut out = vec![0.0; grid.len()];
    for j in 0..grid.n_r {
        let d = 1.0 - grid.r_face[j];
        let (rho, drho) = rho_profile(d);
        let (_, dchi) = chi_eps(rho, reg.eps);
        if rho <= 0.0 || dchi == 0.0 {
            continue;
        }
        let coef = dchi * drho * drho / rho;
        for k in 0..n {
            out[j * n + k] = coef * f_face[j * n + k];
        }
    }
    out
}

/// Pre-projection one-form `chi_eps'(rho) f rho^-1 (W.d rho) d rho`.
pub fn af_eps_unprojected(
    grid: &Grid,
    f: &ScalarField,
    w: &VectorField,
    reg: RegularizationParams,
) -> Result<OneForm> {
    check_eps(reg.eps)?;
    check_trace(grid, f)?;
    grid.check_same(w.n_r, w.n_theta)?;
    let wt = eps_face_weight(grid, f, reg);
    let radial: Vec<f64> = wt.iter().zip(&w.radial).map(|(a, b)| a * b).collect();
    Ok(OneForm::from_parts(grid, radial, vec![0.0; grid.len()]))
}

/// `A_f^eps W`.
pub fn apply_af_eps(
    grid: &Grid,
    f: &ScalarField,
    w: &VectorField,
    reg: RegularizationParams,
    b: &BackgroundJet,
) -> Result<VectorField> {
    let y = af_eps_unprojected(grid, f, w, reg)?;
    Ok(project(grid, &to_vector(grid, y, b)?, b)?.0)
}

/// `int f rho^-1 chi_eps'(rho) (U.d rho)(W.d rho) dy` by face quadrature.
pub fn eps_quadratic_form(
    grid: &Grid,
    u: &VectorField,
    w: &VectorField,
    f: &ScalarField,
    reg: RegularizationParams,
) -> Result<f64> {
    check_eps(reg.eps)?;
    let wt = eps_face_weight(grid, f, reg);
    let p: Vec<f64> = (0..grid.len())
        .map(|i| wt[i] * u.radial[i] * w.radial[i])
        .collect();
    Ok(grid.quadrature(Location::Face, &p))
}

/// Tensor multiplying the field in [`apply_mult`].
#[derive(Clone, Copy, Debug)]
pub enum Multiplier<'a> {
    TwoForm(&'a TwoForm),
    Symmetric(&'a SymmetricTensorField),
}

/// Unprojected contraction `alpha . W` as a one-form.
pub fn contract(grid: &Grid, alpha: Multiplier<'_>, w: &VectorField) -> Result<OneForm> {
    match alpha {
        Multiplier::TwoForm(beta) => contract_two_form(grid, beta, w),
        Multiplier::Symmetric(s) => contract_symmetric(grid, s, w),
    }
}

/// `M_alpha W = P(g^-1 alpha W)`.
pub fn apply_mult(
    grid: &Grid,
    alpha: Multiplier<'_>,
    w: &VectorField,
    b: &BackgroundJet,
) -> Result<VectorField> {
    let y = contract(grid, alpha, w)?;
    Ok(project(grid, &to_vector(grid, y, b)?, b)?.0)
}

/// Which normal operator a computation uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormalMode {
    Direct,
    Regularized(RegularizationParams),
}

pub fn apply_normal(
    grid: &Grid,
    f: &ScalarField,
    w: &VectorField,
    mode: NormalMode,
    b: &BackgroundJet,
) -> Result<VectorField> {
    match mode {
        NormalMode::Direct => apply_af(grid, f, w, b),
        NormalMode::Regularized(reg) => apply_af_eps(grid, f, w, reg, b),
    }
}

/// Pre-projection one-form of the active normal operator.
pub fn normal_unprojected(grid: &Grid, f: &ScalarField, w: &VectorField, mode: NormalMode) -> Result<OneForm> {
    match mode {
        NormalMode::Direct => af_unprojected(grid, f, w),
        NormalMode::Regularized(reg) => af_eps_unprojected(grid, f, w, reg),
    }
}

/// Raises a one-form and projects it: `P(g^-1 y)`.
pub fn project_one_form(grid: &Grid, y: OneForm, b: &BackgroundJet) -> Result<VectorField> {
    Ok(project(grid, &to_vector(grid, y, b)?, b)?.0)
}

/// `A W + Gdot Wdot - C Wdot` with a single projection; the spatial part of `L_1`.
pub fn linear_force(
    grid: &Grid,
    w: &VectorField,
    wdot: &VectorField,
    mode: NormalMode,
    b: &BackgroundJet,
) -> Result<VectorField> {
    let mut y = normal_unprojected(grid, &b.p, w, mode)?;
    y = y.axpy(1.0, &contract_symmetric(grid, &b.g_dot, wdot)?);
    y = y.axpy(-1.0, &contract_two_form(grid, &b.omega, wdot)?);
    project_one_form(grid, y, b)
}

/// Quadratic form `<U, A_f W>` of the active operator without an elliptic
/// solve: boundary sum for the direct operator, collar integral otherwise.
pub fn normal_form(
    grid: &Grid,
    u: &VectorField,
    w: &VectorField,
    f: &ScalarField,
    mode: NormalMode,
    b: &BackgroundJet,
) -> Result<f64> {
    match mode {
        NormalMode::Direct => boundary_quadratic_form(grid, u, w, f, b),
        NormalMode::Regularized(reg) => eps_quadratic_form(grid, u, w, f, reg),
    }
}

/// Norm of the commutator defect
/// `P(L_T (A_f W)_lowered) - A_f(L_T W) - A_{T f} W`.
pub fn commutator_residual(
    grid: &Grid,
    fam: &VectorFamily,
    member: Member,
    f: &ScalarField,
    w: &VectorField,
    eps: Option<RegularizationParams>,
    b: &BackgroundJet,
) -> Result<f64> {
    if !member.is_static() {
        return Err(Error::Invalid(
            "the time-derivative commutator needs a background provider, not a single jet".into(),
        ));
    }
    if !member.is_tangential() || fam.boundary_normal(grid, member) > 1e-12 {
        return Err(Error::NotTangential(member.to_string()));
    }
    let mode = match eps {
        Some(r) => NormalMode::Regularized(r),
        None => NormalMode::Direct,
    };
    let aw = apply_normal(grid, f, w, mode, b)?;
    let aw_low = lower(grid, &aw, &b.g)?;
    let Tensor::OneForm(l_aw) = lie_derive(grid, fam, member, &Tensor::OneForm(aw_low), None)? else {
        unreachable!("Lie derivative preserves the tensor kind")
    };
    let first = project(grid, &to_vector(grid, l_aw, b)?, b)?.0;
    let Tensor::Vector(lw) = lie_derive(grid, fam, member, &Tensor::Vector(w.clone()), None)? else {
        unreachable!()
    };
    let second = apply_normal(grid, f, &lw, mode, b)?;
    let Tensor::Scalar(tf) = lie_derive(grid, fam, member, &Tensor::Scalar(f.clone()), None)? else {
        unreachable!()
    };
    let third = apply_normal(grid, &tf, w, mode, b)?;
    let defect = &(&first - &second) - &third;
    Ok(crate::calculus::inner_product(grid, &defect, &defect, &b.g)?
        .max(0.0)
        .sqrt())
}

/// Largest eigenvalue of a symmetric positive operator by power iteration
/// from a fixed projected random start.
pub fn power_iteration(
    grid: &Grid,
    b: &BackgroundJet,
    steps: usize,
    op: impl Fn(&VectorField) -> Result<VectorField>,
) -> Result<f64> {
    let start = random_vector_field(grid, 0x5eed, 4);
    let (mut v, _) = project(grid, &start, b)?;
    let nv = v.norm(grid);
    if nv == 0.0 {
        return Ok(0.0);
    }
    v = v.scale(1.0 / nv);
    let mut lambda = 0.0;
    for _ in 0..steps {
        let av = op(&v)?;
        lambda = v.dot(&av, grid);
        let n = av.norm(grid);
        if n == 0.0 {
            return Ok(0.0);
        }
        v = av.scale(1.0 / n);
    }
    Ok(lambda.abs())
}

/// Default number of power-iteration steps.
pub const POWER_STEPS: usize = 50;

/// Estimate of the largest eigenvalue of the active normal operator with `f = p`.
pub fn normal_operator_norm(grid: &Grid, mode: NormalMode, b: &BackgroundJet) -> Result<f64> {
    power_iteration(grid, b, POWER_STEPS, |v| apply_normal(grid, &b.p, v, mode, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{rigid_rotation_background, Background};
    use crate::calculus::curl;
    use crate::grid::build_grid;

    fn setup(n: usize) -> (Grid, BackgroundJet) {
        let g = build_grid(n, n).unwrap();
        let b = rigid_rotation_background(1.0).jet(0.0, &g).unwrap();
        (g, b)
    }

    #[test]
    fn zero_f_gives_zero() {
        let (g, b) = setup(16);
        let w = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let out = apply_af(&g, &ScalarField::zeros(&g), &w, &b).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn rejects_nonzero_trace() {
        let (g, b) = setup(16);
        let w = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let f = ScalarField::constant(&g, 1.0);
        assert!(matches!(apply_af(&g, &f, &w, &b), Err(Error::NonzeroTrace { .. })));
    }

    #[test]
    fn e1_is_an_eigenvector() {
        let (g, b) = setup(64);
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let out = apply_af(&g, &b.p, &e1, &b).unwrap();
        assert!((&out - &e1).max_abs() < 1e-3);
    }

    #[test]
    fn rotation_is_in_the_kernel() {
        let (g, b) = setup(64);
        let rot = VectorField::from_cartesian(&g, |x, y| (-y, x));
        assert!(apply_af(&g, &b.p, &rot, &b).unwrap().max_abs() < 1e-3);
    }

    #[test]
    fn boundary_form_examples() {
        let (g, b) = setup(64);
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let e2 = VectorField::from_cartesian(&g, |_, _| (0.0, 1.0));
        let rot = VectorField::from_cartesian(&g, |x, y| (-y, x));
        let pi = std::f64::consts::PI;
        assert!((boundary_quadratic_form(&g, &e1, &e1, &b.p, &b).unwrap() - pi).abs() < 1e-3);
        assert!(boundary_quadratic_form(&g, &rot, &rot, &b.p, &b).unwrap().abs() < 1e-6);
        assert!(boundary_quadratic_form(&g, &e1, &e2, &b.p, &b).unwrap().abs() < 1e-6);
    }

    #[test]
    fn coriolis_multiplication() {
        let (g, b) = setup(32);
        let e1 = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        let e2 = VectorField::from_cartesian(&g, |_, _| (0.0, 1.0));
        let out = apply_mult(&g, Multiplier::TwoForm(&b.omega), &e1, &b).unwrap();
        assert!((&out + &e2.scale(2.0)).max_abs() < 1e-10);
        let zero = TwoForm::zeros(&g);
        assert_eq!(apply_mult(&g, Multiplier::TwoForm(&zero), &e1, &b).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn smoothed_operator_vanishes_away_from_the_collar() {
        let (g, b) = setup(64);
        let reg = RegularizationParams::new(0.1).unwrap();
        // Supported where d >= 0.3.
        let w = VectorField::from_cartesian(&g, |x, y| {
            let r2 = x * x + y * y;
            let bump = if r2 < 0.49 { (0.49 - r2).powi(3) } else { 0.0 };
            (-y * bump, x * bump)
        });
        let out = apply_af_eps(&g, &b.p, &w, reg, &b).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn smoothed_output_is_curl_free_inside() {
        let (g, b) = setup(64);
        let reg = RegularizationParams::new(0.1).unwrap();
        let w = project(&g, &random_vector_field(&g, 3, 3), &b).unwrap().0;
        let y = af_eps_unprojected(&g, &b.p, &w, reg).unwrap();
        let c = curl(&g, &y).unwrap();
        for j in 0..g.n_r {
            if 1.0 - g.r[j] >= reg.eps {
                for k in 0..g.n_theta {
                    assert!(c.beta12.get(j, k).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn non_tangential_member_rejected() {
        let (g, b) = setup(16);
        let fam = VectorFamily::default();
        let w = VectorField::from_cartesian(&g, |_, _| (1.0, 0.0));
        assert!(matches!(
            commutator_residual(&g, &fam, Member::Radial, &b.p, &w, None, &b),
            Err(Error::NotTangential(_))
        ));
    }
}

//! Discrete differential operators on the staggered polar layout.
//!
//! The divergence `div` and the Dirichlet gradient [`grad_dirichlet`] are
//! exact negative adjoints of each other in the quadrature inner products, so
//! the projection built from them is exactly orthogonal. The curl of a one-form
//! is evaluated at centers; `curl(grad q)` vanishes to round-off.
//! The two-form orientation is fixed by `beta_12 = d_1 v_2 - d_2 v_1`.

use crate::error::{Error, Result};
use crate::fields::{OneForm, ScalarField, Staggered, SymmetricTensorField, TwoForm, VectorField};
use crate::grid::{Grid, Location};

fn check<K>(grid: &Grid, w: &Staggered<K>) -> Result<()> {
    grid.check_same(w.n_r, w.n_theta)
}

fn check_scalar(grid: &Grid, s: &ScalarField) -> Result<()> {
    grid.check_same(s.n_r, s.n_theta)
}

/// Flux-form divergence at centers.
pub fn div(grid: &Grid, w: &VectorField) -> Result<ScalarField> {
    check(grid, w)?;
    Ok(ScalarField::from_values(grid, div_raw(grid, &w.radial, &w.angular)))
}

pub(crate) fn div_raw(grid: &Grid, radial: &[f64], angular: &[f64]) -> Vec<f64> {
    let n = grid.n_theta;
    let mut out = grid.d_theta(angular);
    for j in 0..grid.n_r {
        let inv = 1.0 / (grid.r[j] * grid.dr);
        let inv_r = 1.0 / grid.r[j];
        for k in 0..n {
            let outer = grid.r_face[j] * radial[j * n + k];
            let inner = if j == 0 {
                0.0
            } else {
                grid.r_face[j - 1] * radial[(j - 1) * n + k]
            };
            let i = j * n + k;
            out[i] = (outer - inner) * inv + out[i] * inv_r;
        }
    }
    out
}

/// Gradient of a potential that vanishes on the boundary circle. The boundary
/// face uses the zero boundary value half a cell outside the last center.
pub fn grad_dirichlet(grid: &Grid, q: &ScalarField) -> Result<OneForm> {
    check_scalar(grid, q)?;
    let (radial, angular) = grad_dirichlet_raw(grid, &q.values);
    Ok(OneForm::from_parts(grid, radial, angular))
}

pub(crate) fn grad_dirichlet_raw(grid: &Grid, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_theta;
    let nr = grid.n_r;
    let mut radial = vec![0.0; grid.len()];
    for j in 0..nr {
        for k in 0..n {
            radial[j * n + k] = if j + 1 < nr {
                (q[(j + 1) * n + k] - q[j * n + k]) / grid.dr
            } else {
                -2.0 * q[j * n + k] / grid.dr
            };
        }
    }
    let mut angular = grid.d_theta(q);
    scale_by_inverse_radius(grid, &mut angular);
    (radial, angular)
}

fn scale_by_inverse_radius(grid: &Grid, v: &mut [f64]) {
    for (j, ring) in v.chunks_mut(grid.n_theta).enumerate() {
        let inv = 1.0 / grid.r[j];
        ring.iter_mut().for_each(|x| *x *= inv);
    }
}

/// Gradient of an arbitrary scalar. Interior faces use the compact two-point
/// difference (so `curl(grad q) = 0` exactly); the boundary face uses a
/// one-sided cubic fit.
pub fn grad(grid: &Grid, q: &ScalarField) -> Result<OneForm> {
    check_scalar(grid, q)?;
    let n = grid.n_theta;
    let nr = grid.n_r;
    let mut radial = vec![0.0; grid.len()];
    for j in 0..nr.saturating_sub(1) {
        for k in 0..n {
            radial[j * n + k] = (q.values[(j + 1) * n + k] - q.values[j * n + k]) / grid.dr;
        }
    }
    let last = grid
        .stencils()
        .c2f_der
        .apply_row(nr - 1, &q.values, n, 1.0);
    radial[(nr - 1) * n..].copy_from_slice(&last);
    let mut angular = grid.d_theta(&q.values);
    scale_by_inverse_radius(grid, &mut angular);
    Ok(OneForm::from_parts(grid, radial, angular))
}

/// Exterior derivative of a one-form, `beta_12 = d_1 w_2 - d_2 w_1`, at centers.
pub fn curl(grid: &Grid, w: &OneForm) -> Result<TwoForm> {
    check(grid, w)?;
    Ok(TwoForm {
        beta12: ScalarField::from_values(grid, curl_raw(grid, &w.radial, &w.angular)),
    })
}

pub(crate) fn curl_raw(grid: &Grid, radial: &[f64], angular: &[f64]) -> Vec<f64> {
    let n = grid.n_theta;
    let nr = grid.n_r;
    let mut out = vec![0.0; grid.len()];
    if nr == 1 {
        // A single ring carries no radial difference; keep only the angular part.
        let dtr = grid.d_theta(radial);
        for k in 0..n {
            out[k] = (angular[k] - dtr[k]) / grid.r[0];
        }
        return out;
    }
    // Circulation density on interior faces, F_j = d_r(r w_theta) - d_theta w_r.
    let dtr = grid.d_theta(&radial[..(nr - 1) * n]);
    let mut face = vec![0.0; (nr - 1) * n];
    for j in 0..nr - 1 {
        for k in 0..n {
            let outer = grid.r[j + 1] * angular[(j + 1) * n + k];
            let inner = grid.r[j] * angular[j * n + k];
            face[j * n + k] = (outer - inner) / grid.dr - dtr[j * n + k];
        }
    }
    for j in 0..nr {
        for k in 0..n {
            let f = |jj: usize| face[jj * n + k];
            let v = if j == 0 {
                f(0) / grid.dr
            } else if j + 1 < nr {
                0.5 * (f(j - 1) + f(j)) / grid.r[j]
            } else if nr >= 3 {
                (f(j - 1) + 0.5 * (f(j - 1) - f(j - 2))) / grid.r[j]
            } else {
                f(j - 1) / grid.r[j]
            };
            out[j * n + k] = v;
        }
    }
    out
}

/// Averages center rings onto faces; the boundary face copies the last ring.
pub(crate) fn center_to_face_avg(grid: &Grid, c: &[f64]) -> Vec<f64> {
    let n = grid.n_theta;
    let nr = grid.n_r;
    let mut out = vec![0.0; grid.len()];
    for j in 0..nr {
        for k in 0..n {
            out[j * n + k] = if j + 1 < nr {
                0.5 * (c[j * n + k] + c[(j + 1) * n + k])
            } else {
                c[j * n + k]
            };
        }
    }
    out
}

/// Weighted adjoint of [`center_to_face_avg`]; preserves ring-constant data.
pub(crate) fn face_to_center_adj(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let n = grid.n_theta;
    let nr = grid.n_r;
    let mut out = vec![0.0; grid.len()];
    for j in 0..nr {
        let wc = grid.w_center[j];
        for k in 0..n {
            let own = if j + 1 < nr {
                0.5 * grid.w_face[j] * f[j * n + k]
            } else {
                grid.w_face[j] * f[j * n + k]
            };
            let below = if j == 0 {
                0.0
            } else {
                0.5 * grid.w_face[j - 1] * f[(j - 1) * n + k]
            };
            out[j * n + k] = (own + below) / wc;
        }
    }
    out
}

/// Orthonormal polar components (rr, r-theta, theta-theta) of a Cartesian
/// symmetric tensor, sampled at the given location.
pub(crate) fn polar_components(
    grid: &Grid,
    g: &SymmetricTensorField,
    loc: Location,
) -> [Vec<f64>; 3] {
    let n = grid.n_theta;
    let pick = |s: &ScalarField| match loc {
        Location::Center => s.values.clone(),
        Location::Face => grid.stencils().c2f_val.apply(&s.values, n, 1.0),
    };
    let (a, b, c) = (pick(&g.g11), pick(&g.g12), pick(&g.g22));
    let mut rr = vec![0.0; grid.len()];
    let mut rt = vec![0.0; grid.len()];
    let mut tt = vec![0.0; grid.len()];
    for j in 0..grid.n_r {
        for k in 0..n {
            let i = j * n + k;
            let (co, si) = (grid.cos_t[k], grid.sin_t[k]);
            rr[i] = co * co * a[i] + 2.0 * co * si * b[i] + si * si * c[i];
            tt[i] = si * si * a[i] - 2.0 * co * si * b[i] + co * co * c[i];
            rt[i] = -co * si * a[i] + (co * co - si * si) * b[i] + co * si * c[i];
        }
    }
    [rr, rt, tt]
}

/// Staggered contraction with a symmetric tensor, `(alpha W)_a = alpha_ab W^b`.
/// The cross terms are mirrored so the discrete operator is symmetric in the
/// quadrature inner product.
pub fn contract_symmetric<K, L>(
    grid: &Grid,
    alpha: &SymmetricTensorField,
    w: &Staggered<K>,
) -> Result<Staggered<L>> {
    check(grid, w)?;
    let [rr_f, rt_f, _] = polar_components(grid, alpha, Location::Face);
    let [_, _, tt_c] = polar_components(grid, alpha, Location::Center);
    let ut_f = center_to_face_avg(grid, &w.angular);
    let radial: Vec<f64> = (0..grid.len())
        .map(|i| rr_f[i] * w.radial[i] + rt_f[i] * ut_f[i])
        .collect();
    let cross: Vec<f64> = (0..grid.len()).map(|i| rt_f[i] * w.radial[i]).collect();
    let cross_c = face_to_center_adj(grid, &cross);
    let angular: Vec<f64> = (0..grid.len())
        .map(|i| tt_c[i] * w.angular[i] + cross_c[i])
        .collect();
    Ok(Staggered::from_parts(grid, radial, angular))
}

/// Contraction with a two-form, `(beta W)_1 = beta_12 W^2`, `(beta W)_2 = -beta_12 W^1`.
/// Exactly antisymmetric in the quadrature inner product.
pub fn contract_two_form<K>(grid: &Grid, beta: &TwoForm, w: &Staggered<K>) -> Result<OneForm> {
    check(grid, w)?;
    check_scalar(grid, &beta.beta12)?;
    let bf = grid
        .stencils()
        .c2f_val
        .apply(&beta.beta12.values, grid.n_theta, 1.0);
    let ut_f = center_to_face_avg(grid, &w.angular);
    let radial: Vec<f64> = (0..grid.len()).map(|i| bf[i] * ut_f[i]).collect();
    let prod: Vec<f64> = (0..grid.len()).map(|i| bf[i] * w.radial[i]).collect();
    let angular: Vec<f64> = face_to_center_adj(grid, &prod).iter().map(|v| -v).collect();
    Ok(OneForm::from_parts(grid, radial, angular))
}

/// `w_a = g_ab W^b`.
pub fn lower(grid: &Grid, w: &VectorField, g: &SymmetricTensorField) -> Result<OneForm> {
    g.inverse()?;
    if g.identity_defect() == 0.0 {
        check(grid, w)?;
        return Ok(w.clone().retag());
    }
    contract_symmetric(grid, g, w)
}

/// Inverse of [`lower`] for the metric whose inverse is `g_inv`, solved by
/// conjugate gradients on the staggered contraction.
pub fn raise(grid: &Grid, w: &OneForm, g_inv: &SymmetricTensorField) -> Result<VectorField> {
    check(grid, w)?;
    let g = g_inv.inverse()?;
    if g.identity_defect() == 0.0 {
        return Ok(w.clone().retag());
    }
    // Pointwise g^-1 is a good first guess and a fine preconditioner.
    let precond = |v: &OneForm| -> Result<VectorField> { contract_symmetric(grid, g_inv, v) };
    let apply = |v: &VectorField| -> Result<OneForm> { contract_symmetric(grid, &g, v) };
    let rhs_norm = w.norm(grid);
    if rhs_norm == 0.0 {
        return Ok(VectorField::zeros(grid));
    }
    let mut x = precond(w)?;
    let mut res: OneForm = w - &apply(&x)?;
    let mut z = precond(&res)?;
    let mut p = z.clone();
    let mut rz = res.dot(&z.clone().retag(), grid);
    let max_iter = 10 * grid.len();
    for it in 0..max_iter {
        if res.norm(grid) <= 1e-14 * rhs_norm {
            return Ok(x);
        }
        let ap = apply(&p)?;
        let pap = p.dot(&ap.clone().retag(), grid);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite { node: it });
        }
        let a = rz / pap;
        x = x.axpy(a, &p);
        res = res.axpy(-a, &ap);
        z = precond(&res)?;
        let rz_new = res.dot(&z.clone().retag(), grid);
        p = z.axpy(rz_new / rz, &p);
        rz = rz_new;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res.norm(grid) / rhs_norm,
    })
}

/// `<X, Z>_g`: quadrature of `g_ab X^a Z^b`.
pub fn inner_product(
    grid: &Grid,
    x: &VectorField,
    z: &VectorField,
    g: &SymmetricTensorField,
) -> Result<f64> {
    check(grid, x)?;
    let gz = lower(grid, z, g)?;
    Ok(x.dot(&gz.retag(), grid))
}

/// Normal derivative at r = 1 of a scalar that vanishes there, one value per angle.
pub fn normal_derivative_dirichlet(grid: &Grid, f: &ScalarField) -> Vec<f64> {
    grid.stencils()
        .c2b_der_dir
        .apply_row(0, &f.values, grid.n_theta, 1.0)
}

/// Radial and (1/r) angular derivatives of a scalar at centers.
pub(crate) fn scalar_partials(grid: &Grid, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dr = grid.stencils().c2c_der.apply(f, grid.n_theta, 1.0);
    let mut dt = grid.d_theta(f);
    scale_by_inverse_radius(grid, &mut dt);
    (dr, dt)
}

/// Polar components of a staggered field and their radial and angular
/// derivatives, all sampled at one location.
pub(crate) struct PolarJet {
    pub ur: Vec<f64>,
    pub ut: Vec<f64>,
    pub dr_ur: Vec<f64>,
    pub dr_ut: Vec<f64>,
    pub dt_ur: Vec<f64>,
    pub dt_ut: Vec<f64>,
}

pub(crate) fn polar_jet<K>(grid: &Grid, w: &Staggered<K>, loc: Location) -> PolarJet {
    let n = grid.n_theta;
    let st = grid.stencils();
    let (ur, ut, dr_ur, dr_ut) = match loc {
        Location::Face => (
            w.radial.clone(),
            st.c2f_val.apply(&w.angular, n, -1.0),
            st.f2f_der.apply(&w.radial, n, -1.0),
            st.c2f_der.apply(&w.angular, n, -1.0),
        ),
        Location::Center => (
            st.f2c_val.apply(&w.radial, n, -1.0),
            w.angular.clone(),
            st.f2c_der.apply(&w.radial, n, -1.0),
            st.c2c_der.apply(&w.angular, n, -1.0),
        ),
    };
    let dt_ur = grid.d_theta(&ur);
    let dt_ut = grid.d_theta(&ut);
    PolarJet {
        ur,
        ut,
        dr_ur,
        dr_ut,
        dt_ur,
        dt_ut,
    }
}

/// Frobenius norm of the Cartesian Jacobian of a vector field at centers.
pub fn jacobian_norm(grid: &Grid, w: &VectorField) -> Result<ScalarField> {
    check(grid, w)?;
    let jet = polar_jet(grid, w, Location::Center);
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..grid.n_r {
        let inv = 1.0 / grid.r[j];
        for k in 0..grid.n_theta {
            let i = grid.idx(j, k);
            let a = jet.dr_ur[i];
            let b = jet.dr_ut[i];
            let c = (jet.dt_ur[i] - jet.ut[i]) * inv;
            let d = (jet.dt_ut[i] + jet.ur[i]) * inv;
            out.push((a * a + b * b + c * c + d * d).sqrt());
        }
    }
    Ok(ScalarField::from_values(grid, out))
}

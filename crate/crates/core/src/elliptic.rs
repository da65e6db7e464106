//! Dirichlet problem `kappa^-1 d_a(kappa g^ab d_b q) = f`, `q = 0` on r = 1.
//!
//! The operator is `D R G0` with the flux-form divergence `D`, the Dirichlet
//! gradient `G0` and `R` the raising map. For the flat metric every Fourier
//! mode decouples into a symmetric tridiagonal radial system; otherwise
//! preconditioned conjugate gradients run with the flat solve as preconditioner.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::calculus::{div_raw, grad_dirichlet_raw, raise};
use crate::error::{Error, Result};
use crate::fields::{OneForm, ScalarField, SymmetricTensorField};
use crate::grid::{Grid, Location};

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Relative residual target in the quadrature norm.
    pub tol: f64,
    /// Defaults to `10 * n_r * n_theta`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

/// Exact flat-metric solve, mode by mode.
pub fn solve_flat(grid: &Grid, rhs: &[f64]) -> Vec<f64> {
    let n = grid.n_theta;
    let nr = grid.n_r;
    let hat = grid.rings_fft(rhs);
    // Transpose to mode-major so each radial system is contiguous.
    let mut modes: Vec<Vec<Complex64>> = (0..n)
        .map(|k| (0..nr).map(|j| hat[j * n + k]).collect())
        .collect();
    let work = |(k, col): (usize, &mut Vec<Complex64>)| {
        let m = grid.wavenumber(k);
        thomas(grid, m * m, col);
    };
    if grid.len() >= 8192 {
        modes.par_iter_mut().enumerate().for_each(work);
    } else {
        modes.iter_mut().enumerate().for_each(work);
    }
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (k, col) in modes.iter().enumerate() {
        for j in 0..nr {
            out[j * n + k] = col[j];
        }
    }
    grid.rings_ifft(out)
}

/// Radial tridiagonal system of mode `m^2`, solved in place.
fn thomas(grid: &Grid, m2: f64, x: &mut [Complex64]) {
    let nr = grid.n_r;
    let h2 = grid.dr * grid.dr;
    let mut lower = vec![0.0; nr];
    let mut diag = vec![0.0; nr];
    let mut upper = vec![0.0; nr];
    for j in 0..nr {
        let rj = grid.r[j];
        let inner = if j == 0 { 0.0 } else { grid.r_face[j - 1] };
        let outer = if j + 1 < nr {
            grid.r_face[j]
        } else {
            2.0 * grid.r_face[j]
        };
        lower[j] = inner / (rj * h2);
        upper[j] = if j + 1 < nr { grid.r_face[j] / (rj * h2) } else { 0.0 };
        diag[j] = -(inner + outer) / (rj * h2) - m2 / (rj * rj);
    }
    let mut c = vec![0.0; nr];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    x[0] /= beta;
    for j in 1..nr {
        beta = diag[j] - lower[j] * c[j - 1];
        c[j] = upper[j] / beta;
        let prev = x[j - 1];
        x[j] = (x[j] - prev * lower[j]) / beta;
    }
    for j in (0..nr - 1).rev() {
        let next = x[j + 1];
        x[j] -= next * c[j];
    }
}

/// Flat Dirichlet Laplacian `D G0 q`.
pub fn laplacian_flat(grid: &Grid, q: &[f64]) -> Vec<f64> {
    let (gr, ga) = grad_dirichlet_raw(grid, q);
    div_raw(grid, &gr, &ga)
}

fn is_flat(g_inv: &SymmetricTensorField, kappa: &ScalarField) -> bool {
    g_inv.identity_defect() == 0.0 && kappa.values.iter().all(|&k| k == 1.0)
}

/// Applies the variable-coefficient operator `kappa^-1 D kappa R G0 q`.
pub fn apply_operator(
    grid: &Grid,
    q: &ScalarField,
    g_inv: &SymmetricTensorField,
    kappa: &ScalarField,
) -> Result<ScalarField> {
    grid.check_same(q.n_r, q.n_theta)?;
    if is_flat(g_inv, kappa) {
        return Ok(ScalarField::from_values(grid, laplacian_flat(grid, &q.values)));
    }
    let (gr, ga) = grad_dirichlet_raw(grid, &q.values);
    let raised = raise(grid, &OneForm::from_parts(grid, gr, ga), g_inv)?;
    Ok(weighted_div(grid, &raised.radial, &raised.angular, kappa))
}

/// `kappa^-1 D(kappa U)` with kappa interpolated to faces.
pub(crate) fn weighted_div(
    grid: &Grid,
    radial: &[f64],
    angular: &[f64],
    kappa: &ScalarField,
) -> ScalarField {
    if kappa.values.iter().all(|&k| k == 1.0) {
        return ScalarField::from_values(grid, div_raw(grid, radial, angular));
    }
    let kf = grid
        .stencils()
        .c2f_val
        .apply(&kappa.values, grid.n_theta, 1.0);
    let kr: Vec<f64> = radial.iter().zip(&kf).map(|(a, b)| a * b).collect();
    let ka: Vec<f64> = angular.iter().zip(&kappa.values).map(|(a, b)| a * b).collect();
    let d = div_raw(grid, &kr, &ka);
    ScalarField::from_values(
        grid,
        d.iter().zip(&kappa.values).map(|(a, b)| a / b).collect(),
    )
}

/// Solves the Dirichlet problem with right-hand side `rhs`.
pub fn solve_dirichlet(
    grid: &Grid,
    rhs: &ScalarField,
    g_inv: &SymmetricTensorField,
    kappa: &ScalarField,
    opts: SolverOptions,
) -> Result<ScalarField> {
    grid.check_same(rhs.n_r, rhs.n_theta)?;
    g_inv.inverse()?;
    if is_flat(g_inv, kappa) {
        return Ok(ScalarField::from_values(grid, solve_flat(grid, &rhs.values)));
    }
    pcg(grid, rhs, g_inv, kappa, opts)
}

fn kappa_dot(grid: &Grid, a: &[f64], b: &[f64], kappa: &ScalarField) -> f64 {
    let p: Vec<f64> = (0..a.len()).map(|i| a[i] * b[i] * kappa.values[i]).collect();
    grid.quadrature(Location::Center, &p)
}

fn pcg(
    grid: &Grid,
    rhs: &ScalarField,
    g_inv: &SymmetricTensorField,
    kappa: &ScalarField,
    opts: SolverOptions,
) -> Result<ScalarField> {
    let max_iter = opts.max_iter.unwrap_or(10 * grid.len());
    let b = &rhs.values;
    let b_norm = kappa_dot(grid, b, b, kappa).sqrt();
    if b_norm == 0.0 {
        return Ok(ScalarField::zeros(grid));
    }
    // The operator is negative definite; iterate on -L.
    let neg_apply = |v: &[f64]| -> Result<Vec<f64>> {
        let s = ScalarField::from_values(grid, v.to_vec());
        Ok(apply_operator(grid, &s, g_inv, kappa)?
            .values
            .into_iter()
            .map(|x| -x)
            .collect())
    };
    let neg_precond = |v: &[f64]| -> Vec<f64> { solve_flat(grid, v).into_iter().map(|x| -x).collect() };
    let neg_b: Vec<f64> = b.iter().map(|v| -v).collect();
    let mut x = vec![0.0; b.len()];
    let mut r = neg_b.clone();
    let mut z = neg_precond(&r);
    let mut p = z.clone();
    let mut rz = kappa_dot(grid, &r, &z, kappa);
    let mut res = 1.0;
    for _ in 0..max_iter {
        res = kappa_dot(grid, &r, &r, kappa).sqrt() / b_norm;
        if res <= opts.tol {
            return Ok(ScalarField::from_values(grid, x));
        }
        let ap = neg_apply(&p)?;
        let pap = kappa_dot(grid, &p, &ap, kappa);
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = neg_precond(&r);
        let rz_new = kappa_dot(grid, &r, &z, kappa);
        let beta = rz_new / rz;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

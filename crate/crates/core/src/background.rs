//! The smooth Euler solution being linearized around, evaluated per time.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::calculus::{grad, normal_derivative_dirichlet, raise, scalar_partials};
use crate::elliptic::weighted_div;
use crate::error::{Error, Result};
use crate::fields::{ScalarField, SymmetricTensorField, TwoForm};
use crate::grid::Grid;

/// Default number of time jets carried by a background.
pub const DEFAULT_JET_ORDER: usize = 4;

/// Background fields at one time, with time-derivative jets.
/// `jets[s]` holds `D_t^s` of the quantity for `0 <= s <= order`.
#[derive(Clone, Debug)]
pub struct BackgroundJet {
    pub t: f64,
    /// Cartesian positions `x(t, y)` at the center nodes.
    pub position: [ScalarField; 2],
    /// `dx^i / dy^a` stored as `[x1_y1, x1_y2, x2_y1, x2_y2]`.
    pub jacobian: [ScalarField; 4],
    /// `D_t x` and `D_t^2 x` in Cartesian components.
    pub velocity: [ScalarField; 2],
    pub acceleration: [ScalarField; 2],
    pub g: SymmetricTensorField,
    pub g_inv: SymmetricTensorField,
    pub kappa: ScalarField,
    pub g_dot: SymmetricTensorField,
    pub omega: TwoForm,
    pub p: ScalarField,
    pub p_dot: ScalarField,
    pub p_jets: Vec<ScalarField>,
    pub g_jets: Vec<SymmetricTensorField>,
    pub omega_jets: Vec<TwoForm>,
}

impl BackgroundJet {
    /// Highest available time-jet order.
    pub fn order(&self) -> usize {
        self.p_jets.len().saturating_sub(1)
    }

    pub fn require_order(&self, needed: usize) -> Result<()> {
        if self.order() < needed {
            return Err(Error::JetOrder {
                available: self.order(),
                needed,
            });
        }
        Ok(())
    }

    /// Identity metric and unit volume factor: the fast paths apply.
    pub fn is_flat(&self) -> bool {
        self.g_inv.identity_defect() == 0.0 && self.kappa.values.iter().all(|&k| k == 1.0)
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.p.n_r, self.p.n_theta)
    }
}

/// Source of background jets, `t -> BackgroundJet`.
pub trait Background: Send + Sync + fmt::Debug {
    fn jet(&self, t: f64, grid: &Grid) -> Result<BackgroundJet>;
    /// Highest time-jet order the provider can supply.
    fn jet_order(&self) -> usize;
    /// True when g, kappa, omega and p do not depend on t.
    fn is_stationary(&self) -> bool {
        false
    }
    fn describe(&self) -> String;
}

/// Rigid rotation with angular velocity `omega`.
#[derive(Clone, Copy, Debug)]
pub struct RigidRotation {
    pub omega: f64,
    pub jet_order: usize,
}

pub fn rigid_rotation_background(omega: f64) -> RigidRotation {
    RigidRotation {
        omega,
        jet_order: DEFAULT_JET_ORDER,
    }
}

impl Background for RigidRotation {
    fn jet(&self, t: f64, grid: &Grid) -> Result<BackgroundJet> {
        let w = self.omega;
        let (c, s) = ((w * t).cos(), (w * t).sin());
        let x1 = ScalarField::from_fn(grid, |a, b| c * a - s * b);
        let x2 = ScalarField::from_fn(grid, |a, b| s * a + c * b);
        let v1 = x2.scale(-w);
        let v2 = x1.scale(w);
        let acc = [x1.scale(-w * w), x2.scale(-w * w)];
        let p = ScalarField::from_fn(grid, |a, b| 0.5 * w * w * (1.0 - a * a - b * b));
        let zero = ScalarField::zeros(grid);
        let id = SymmetricTensorField::identity(grid);
        let omega = TwoForm::constant(grid, 2.0 * w);
        let n = self.jet_order + 1;
        let mut p_jets = vec![p.clone()];
        let mut g_jets = vec![id.clone()];
        let mut omega_jets = vec![omega.clone()];
        for _ in 1..n {
            p_jets.push(zero.clone());
            g_jets.push(SymmetricTensorField::zeros(grid));
            omega_jets.push(TwoForm::zeros(grid));
        }
        Ok(BackgroundJet {
            t,
            position: [x1, x2],
            jacobian: [
                ScalarField::constant(grid, c),
                ScalarField::constant(grid, -s),
                ScalarField::constant(grid, s),
                ScalarField::constant(grid, c),
            ],
            velocity: [v1, v2],
            acceleration: acc,
            g: id.clone(),
            g_inv: id,
            kappa: ScalarField::constant(grid, 1.0),
            g_dot: SymmetricTensorField::zeros(grid),
            omega,
            p,
            p_dot: zero,
            p_jets,
            g_jets,
            omega_jets,
        })
    }

    fn jet_order(&self) -> usize {
        self.jet_order
    }

    fn is_stationary(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("rigid rotation, Omega = {}", self.omega)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackgroundFailure {
    /// `-grad_N p` is not bounded below by a positive constant.
    SignCondition { c0: f64 },
    VolumeConstraint { residual: f64 },
    BoundaryPressure { residual: f64 },
    MetricNotPositive,
    EulerResidual { residual: f64 },
    PoissonResidual { residual: f64 },
}

impl BackgroundFailure {
    /// Failures that make the operators ill-defined, as opposed to
    /// diagnostics of how well the supplied fields solve Euler's equations.
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            BackgroundFailure::VolumeConstraint { .. }
                | BackgroundFailure::BoundaryPressure { .. }
                | BackgroundFailure::MetricNotPositive
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub t: f64,
    pub euler_residual: f64,
    pub volume_residual: f64,
    pub poisson_residual: f64,
    pub boundary_pressure: f64,
    /// Minimum of `-grad_N p` over the boundary samples.
    pub c0: f64,
    pub failures: Vec<BackgroundFailure>,
}

impl ValidationReport {
    pub fn sign_condition_holds(&self) -> bool {
        !self
            .failures
            .iter()
            .any(|f| matches!(f, BackgroundFailure::SignCondition { .. }))
    }

    pub fn structural_ok(&self) -> bool {
        !self.failures.iter().any(|f| f.is_structural())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ValidationTolerances {
    pub volume: f64,
    pub boundary: f64,
    pub residual: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        ValidationTolerances {
            volume: 1e-10,
            boundary: 1e-10,
            residual: 1e-8,
        }
    }
}

/// Cartesian partials `(d_1 f, d_2 f)` at centers.
fn cartesian_partials(grid: &Grid, f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let (dr, dt) = scalar_partials(grid, &f.values);
    let mut d1 = vec![0.0; grid.len()];
    let mut d2 = vec![0.0; grid.len()];
    for j in 0..grid.n_r {
        for k in 0..grid.n_theta {
            let i = grid.idx(j, k);
            let (c, s) = (grid.cos_t[k], grid.sin_t[k]);
            d1[i] = c * dr[i] - s * dt[i];
            d2[i] = s * dr[i] + c * dt[i];
        }
    }
    (d1, d2)
}

/// Checks the background against Euler's equations and the structural
/// assumptions used by the operators.
pub fn validate_background(b: &BackgroundJet, grid: &Grid) -> Result<ValidationReport> {
    validate_background_with(b, grid, ValidationTolerances::default())
}

pub fn validate_background_with(
    b: &BackgroundJet,
    grid: &Grid,
    tol: ValidationTolerances,
) -> Result<ValidationReport> {
    let (n_r, n_theta) = b.grid_shape();
    grid.check_same(n_r, n_theta)?;
    let n = grid.len();
    let jac = &b.jacobian;
    let mut failures = Vec::new();

    let metric_ok = b.g.is_positive_definite();
    if !metric_ok {
        failures.push(BackgroundFailure::MetricNotPositive);
    }

    let mut volume: f64 = 0.0;
    for i in 0..n {
        let det = jac[0].values[i] * jac[3].values[i] - jac[1].values[i] * jac[2].values[i];
        volume = volume
            .max((b.kappa.values[i] - 1.0).abs())
            .max((det - 1.0).abs());
    }
    if volume > tol.volume {
        failures.push(BackgroundFailure::VolumeConstraint { residual: volume });
    }

    // D_t^2 x + d_x p with d_x p = J^-T d_y p.
    let (p1, p2) = cartesian_partials(grid, &b.p);
    let mut euler: f64 = 0.0;
    for i in 0..n {
        let (a, bb, c, d) = (
            jac[0].values[i],
            jac[1].values[i],
            jac[2].values[i],
            jac[3].values[i],
        );
        let det = a * d - bb * c;
        // J = [[a, bb], [c, d]] maps y to x; J^-T d_y p.
        let gx1 = (d * p1[i] - c * p2[i]) / det;
        let gx2 = (-bb * p1[i] + a * p2[i]) / det;
        let r1 = b.acceleration[0].values[i] + gx1;
        let r2 = b.acceleration[1].values[i] + gx2;
        euler = euler.max(r1.hypot(r2));
    }
    if euler > tol.residual {
        failures.push(BackgroundFailure::EulerResidual { residual: euler });
    }

    // -Lap_x p - (d_j V^k)(d_k V^j), the Eulerian derivatives via J^-1.
    let lap = if metric_ok {
        let gp = grad(grid, &b.p)?;
        let raised = raise(grid, &gp, &b.g_inv)?;
        weighted_div(grid, &raised.radial, &raised.angular, &b.kappa).values
    } else {
        vec![f64::NAN; n]
    };
    let (v11, v12) = cartesian_partials(grid, &b.velocity[0]);
    let (v21, v22) = cartesian_partials(grid, &b.velocity[1]);
    let mut poisson: f64 = 0.0;
    for i in 0..n {
        let (a, bb, c, d) = (
            jac[0].values[i],
            jac[1].values[i],
            jac[2].values[i],
            jac[3].values[i],
        );
        let det = a * d - bb * c;
        let (ia, ib, ic, id) = (d / det, -bb / det, -c / det, a / det);
        // dV^k/dx^j = sum_a dV^k/dy^a * dy^a/dx^j
        let e11 = v11[i] * ia + v12[i] * ic;
        let e12 = v11[i] * ib + v12[i] * id;
        let e21 = v21[i] * ia + v22[i] * ic;
        let e22 = v21[i] * ib + v22[i] * id;
        let quad = e11 * e11 + 2.0 * e12 * e21 + e22 * e22;
        poisson = poisson.max((-lap[i] - quad).abs());
    }
    if !(poisson <= tol.residual) {
        failures.push(BackgroundFailure::PoissonResidual { residual: poisson });
    }

    let trace = b.p.boundary_trace(grid);
    let boundary = trace.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if boundary > tol.boundary {
        failures.push(BackgroundFailure::BoundaryPressure { residual: boundary });
    }

    // grad_N p at r = 1 from the one-sided fit, with the metric normalization.
    let dn = normal_derivative_dirichlet(grid, &b.p);
    let last = grid.n_r - 1;
    let mut c0 = f64::INFINITY;
    for (k, d) in dn.iter().enumerate() {
        let i = grid.idx(last, k);
        let (co, si) = (grid.cos_t[k], grid.sin_t[k]);
        let grr = co * co * b.g_inv.g11.values[i]
            + 2.0 * co * si * b.g_inv.g12.values[i]
            + si * si * b.g_inv.g22.values[i];
        c0 = c0.min(-d * grr.max(0.0).sqrt());
    }
    if !(c0 > 0.0) {
        failures.push(BackgroundFailure::SignCondition { c0 });
    }

    Ok(ValidationReport {
        t: b.t,
        euler_residual: euler,
        volume_residual: volume,
        poisson_residual: poisson,
        boundary_pressure: boundary,
        c0,
        failures,
    })
}

/// One time sample of a tabulated background.
#[derive(Clone, Debug)]
struct Sample {
    t: f64,
    x: [Vec<f64>; 2],
    jac: [Vec<f64>; 4],
    p: Vec<f64>,
}

/// Background read from CSV time samples and interpolated by local cubics in t.
///
/// Columns: `t,j,k,x1,x2,x1_y1,x1_y2,x2_y1,x2_y2,p`, one row per node per
/// sample. Time jets are derivatives of the interpolating cubic, so jets of
/// order four and above vanish.
#[derive(Clone, Debug)]
pub struct TabulatedBackground {
    n_r: usize,
    n_theta: usize,
    samples: Vec<Sample>,
    jet_order: usize,
}

#[derive(Debug, serde::Deserialize)]
struct Row {
    t: f64,
    j: usize,
    k: usize,
    x1: f64,
    x2: f64,
    x1_y1: f64,
    x1_y2: f64,
    x2_y1: f64,
    x2_y2: f64,
    p: f64,
}

impl TabulatedBackground {
    /// Loads the CSV and validates every sample on `grid`; structural
    /// failures reject the file.
    pub fn from_csv(path: &Path, grid: &Grid) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut samples: Vec<Sample> = Vec::new();
        let n = grid.len();
        for row in rdr.deserialize() {
            let row: Row = row?;
            if row.j >= grid.n_r || row.k >= grid.n_theta {
                return Err(Error::Background(format!(
                    "node ({}, {}) outside the {}x{} grid",
                    row.j, row.k, grid.n_r, grid.n_theta
                )));
            }
            let pos = match samples.iter().position(|s| s.t == row.t) {
                Some(p) => p,
                None => {
                    samples.push(Sample {
                        t: row.t,
                        x: [vec![f64::NAN; n], vec![f64::NAN; n]],
                        jac: std::array::from_fn(|_| vec![f64::NAN; n]),
                        p: vec![f64::NAN; n],
                    });
                    samples.len() - 1
                }
            };
            let s = &mut samples[pos];
            let i = grid.idx(row.j, row.k);
            s.x[0][i] = row.x1;
            s.x[1][i] = row.x2;
            s.jac[0][i] = row.x1_y1;
            s.jac[1][i] = row.x1_y2;
            s.jac[2][i] = row.x2_y1;
            s.jac[3][i] = row.x2_y2;
            s.p[i] = row.p;
        }
        if samples.is_empty() {
            return Err(Error::Background("no samples".into()));
        }
        for s in &samples {
            if s.p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Background(format!(
                    "sample t = {} does not cover every node",
                    s.t
                )));
            }
        }
        samples.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        let bg = TabulatedBackground {
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            jet_order: DEFAULT_JET_ORDER,
            samples,
        };
        for s in &bg.samples {
            let report = validate_background(&bg.jet(s.t, grid)?, grid)?;
            if !report.structural_ok() {
                return Err(Error::Background(format!(
                    "sample t = {} fails validation: {:?}",
                    s.t, report.failures
                )));
            }
        }
        Ok(bg)
    }

    /// Lagrange weights of the local cubic (fewer points if fewer samples)
    /// and their first `order` derivatives at `t`.
    fn time_weights(&self, t: f64, order: usize) -> (Vec<usize>, Vec<Vec<f64>>) {
        let m = self.samples.len().min(4);
        let times: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let upper = times.partition_point(|&s| s <= t);
        let start = upper.saturating_sub(m / 2).min(times.len() - m);
        let idx: Vec<usize> = (start..start + m).collect();
        let nodes: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
        let weights = (0..=order).map(|d| lagrange_derivative_weights(&nodes, t, d)).collect();
        (idx, weights)
    }
}

/// Weights of the `deriv`-th derivative of the Lagrange interpolant.
fn lagrange_derivative_weights(nodes: &[f64], x: f64, deriv: usize) -> Vec<f64> {
    let m = nodes.len();
    (0..m)
        .map(|i| {
            // Build the basis polynomial coefficients and differentiate.
            let mut coef = vec![1.0];
            let mut denom = 1.0;
            for (j, &xj) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                denom *= nodes[i] - xj;
                let mut next = vec![0.0; coef.len() + 1];
                for (p, c) in coef.iter().enumerate() {
                    next[p + 1] += c;
                    next[p] -= c * xj;
                }
                coef = next;
            }
            let mut v = 0.0;
            for (p, c) in coef.iter().enumerate() {
                if p < deriv {
                    continue;
                }
                let fall: f64 = ((p - deriv + 1)..=p).map(|q| q as f64).product();
                v += c * fall * x.powi((p - deriv) as i32);
            }
            v / denom
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    crate::lift::binomial(n, k) as f64
}

impl Background for TabulatedBackground {
    fn jet(&self, t: f64, grid: &Grid) -> Result<BackgroundJet> {
        grid.check_same(self.n_r, self.n_theta)?;
        let order = self.jet_order;
        // Time derivatives up to order + 2 so velocity jets cover omega jets.
        let (idx, w) = self.time_weights(t, order + 2);
        let n = grid.len();
        let combine = |get: &dyn Fn(&Sample) -> &Vec<f64>, d: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (s, wi) in idx.iter().zip(&w[d]) {
                let src = get(&self.samples[*s]);
                for (o, v) in out.iter_mut().zip(src) {
                    *o += wi * v;
                }
            }
            out
        };
        let sf = |v: Vec<f64>| ScalarField::from_values(grid, v);
        let xd: Vec<[Vec<f64>; 2]> = (0..order + 3)
            .map(|d| [combine(&|s| &s.x[0], d), combine(&|s| &s.x[1], d)])
            .collect();
        let jd: Vec<[Vec<f64>; 4]> = (0..order + 2)
            .map(|d| std::array::from_fn(|c| combine(&|s: &Sample| &s.jac[c], d)))
            .collect();
        let p_jets: Vec<ScalarField> = (0..=order).map(|d| sf(combine(&|s| &s.p, d))).collect();

        // D_t^s g = sum_k C(s,k) (D^k J)^T (D^{s-k} J).
        let g_jets: Vec<SymmetricTensorField> = (0..=order)
            .map(|s| {
                let mut comps = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
                for k in 0..=s {
                    let c = binomial(s, k);
                    let (a, b) = (&jd[k], &jd[s - k]);
                    for i in 0..n {
                        // columns of J are dx/dy^1 = (a0, a2) and dx/dy^2 = (a1, a3)
                        comps[0][i] += c * (a[0][i] * b[0][i] + a[2][i] * b[2][i]);
                        comps[1][i] += c * (a[0][i] * b[1][i] + a[2][i] * b[3][i]);
                        comps[2][i] += c * (a[1][i] * b[1][i] + a[3][i] * b[3][i]);
                    }
                }
                let [g11, g12, g22] = comps;
                SymmetricTensorField {
                    g11: sf(g11),
                    g12: sf(g12),
                    g22: sf(g22),
                }
            })
            .collect();

        // v_a = (dx^i/dy^a) V^i; D_t^s v_a by Leibniz, omega = curl v.
        let omega_jets: Vec<TwoForm> = (0..=order)
            .map(|s| {
                let mut v = [vec![0.0; n], vec![0.0; n]];
                for k in 0..=s {
                    let c = binomial(s, k);
                    let (a, vel) = (&jd[k], &xd[s - k + 1]);
                    for i in 0..n {
                        v[0][i] += c * (a[0][i] * vel[0][i] + a[2][i] * vel[1][i]);
                        v[1][i] += c * (a[1][i] * vel[0][i] + a[3][i] * vel[1][i]);
                    }
                }
                let (_, d2v1) = cartesian_partials(grid, &sf(v[0].clone()));
                let (d1v2, _) = cartesian_partials(grid, &sf(v[1].clone()));
                TwoForm {
                    beta12: sf((0..n).map(|i| d1v2[i] - d2v1[i]).collect()),
                }
            })
            .collect();

        let kappa = sf((0..n)
            .map(|i| jd[0][0][i] * jd[0][3][i] - jd[0][1][i] * jd[0][2][i])
            .collect());
        let g = g_jets[0].clone();
        let g_inv = g.inverse()?;
        Ok(BackgroundJet {
            t,
            position: [sf(xd[0][0].clone()), sf(xd[0][1].clone())],
            jacobian: std::array::from_fn(|c| sf(jd[0][c].clone())),
            velocity: [sf(xd[1][0].clone()), sf(xd[1][1].clone())],
            acceleration: [sf(xd[2][0].clone()), sf(xd[2][1].clone())],
            g,
            g_inv,
            kappa,
            g_dot: g_jets.get(1).cloned().unwrap_or_else(|| SymmetricTensorField::zeros(grid)),
            omega: omega_jets[0].clone(),
            p: p_jets[0].clone(),
            p_dot: p_jets.get(1).cloned().unwrap_or_else(|| ScalarField::zeros(grid)),
            p_jets,
            g_jets,
            omega_jets,
        })
    }

    fn jet_order(&self) -> usize {
        self.jet_order
    }

    fn describe(&self) -> String {
        format!("tabulated background, {} samples", self.samples.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use std::io::Write;

    #[test]
    fn rigid_rotation_values() {
        let g = build_grid(64, 64).unwrap();
        let b = rigid_rotation_background(1.0).jet(0.3, &g).unwrap();
        // p = (1 - r^2)/2 at the innermost ring, p -> 0 at the boundary
        let r0 = g.r[0];
        assert!((b.p.get(0, 0) - 0.5 * (1.0 - r0 * r0)).abs() < 1e-15);
        assert!(b.p.boundary_trace(&g).iter().all(|v| v.abs() < 1e-12));
        assert!(b.omega.beta12.values.iter().all(|&v| v == 2.0));
        assert!(b.is_flat());
        assert!(b.p_jets[1..].iter().all(|p| p.max_abs() == 0.0));
    }

    #[test]
    fn rigid_rotation_validation() {
        let g = build_grid(64, 64).unwrap();
        let b = rigid_rotation_background(1.0).jet(0.0, &g).unwrap();
        let rep = validate_background(&b, &g).unwrap();
        assert!((rep.c0 - 1.0).abs() < 1e-10);
        assert!(rep.sign_condition_holds());
        assert!(rep.structural_ok());
        assert!(rep.volume_residual < 1e-14);
        // The shipped pressure has the opposite sign of the Euler pressure for
        // this flow: D_t^2 x = -x while d_x p = -x, so the residual is 2|x|,
        // and -Lap p - (dV)(dV) = 2 + 2.
        let rmax = g.r[g.n_r - 1];
        assert!((rep.euler_residual - 2.0 * rmax).abs() < 1e-10);
        assert!((rep.poisson_residual - 4.0).abs() < 1e-8);
    }

    #[test]
    fn fluid_at_rest_fails_sign_condition() {
        let g = build_grid(16, 16).unwrap();
        let b = rigid_rotation_background(0.0).jet(0.0, &g).unwrap();
        let rep = validate_background(&b, &g).unwrap();
        assert!(!rep.sign_condition_holds());
        assert_eq!(rep.c0, 0.0);
    }

    #[test]
    fn tampered_volume_is_reported() {
        let g = build_grid(16, 16).unwrap();
        let mut b = rigid_rotation_background(1.0).jet(0.0, &g).unwrap();
        b.kappa = ScalarField::constant(&g, 1.1);
        let rep = validate_background(&b, &g).unwrap();
        assert!(rep
            .failures
            .iter()
            .any(|f| matches!(f, BackgroundFailure::VolumeConstraint { .. })));
        assert!(!rep.structural_ok());
    }

    #[test]
    fn tabulated_rotation_round_trip() {
        let g = build_grid(8, 8).unwrap();
        let w = 0.7;
        let rot = rigid_rotation_background(w);
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "t,j,k,x1,x2,x1_y1,x1_y2,x2_y1,x2_y2,p").unwrap();
        for step in 0..6 {
            let t = 0.1 * step as f64;
            let b = rot.jet(t, &g).unwrap();
            for j in 0..g.n_r {
                for k in 0..g.n_theta {
                    let i = g.idx(j, k);
                    writeln!(
                        file,
                        "{t},{j},{k},{},{},{},{},{},{},{}",
                        b.position[0].values[i],
                        b.position[1].values[i],
                        b.jacobian[0].values[i],
                        b.jacobian[1].values[i],
                        b.jacobian[2].values[i],
                        b.jacobian[3].values[i],
                        b.p.values[i]
                    )
                    .unwrap();
                }
            }
        }
        file.flush().unwrap();
        let tab = TabulatedBackground::from_csv(file.path(), &g).unwrap();
        let jt = tab.jet(0.25, &g).unwrap();
        let exact = rot.jet(0.25, &g).unwrap();
        // cubic interpolation of cos/sin over 0.1 spacing
        assert!((&jt.velocity[0] - &exact.velocity[0]).max_abs() < 1e-4);
        assert!(jt.g.identity_defect() < 1e-4);
        assert!((jt.omega.beta12.map(|v| v - 2.0 * w)).max_abs() < 1e-3);
        assert!(jt.g_dot.max_abs() < 1e-3);
    }

    #[test]
    fn derivative_weights_are_exact_on_cubics() {
        let nodes = [0.0, 0.3, 0.5, 1.0];
        let f = |t: f64| 1.0 + 2.0 * t - t * t + 0.5 * t * t * t;
        let d2 = |t: f64| -2.0 + 3.0 * t;
        let w = lagrange_derivative_weights(&nodes, 0.4, 2);
        let v: f64 = w.iter().zip(nodes).map(|(a, b)| a * f(b)).sum();
        assert!((v - d2(0.4)).abs() < 1e-10);
    }
}

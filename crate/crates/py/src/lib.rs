//! Python bindings: grids, the elliptic solve, projection checks, the normal
//! operator's quadratic form and rigid-rotation simulations.

use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fblin::background::{rigid_rotation_background, validate_background, Background, RigidRotation};
use fblin::calculus::inner_product;
use fblin::diagnostics::{energy_with, CurlTracker};
use fblin::elliptic::{solve_dirichlet as solve, SolverOptions};
use fblin::evolution::{run, EvolveConfig, InitialData, Scheme, State};
use fblin::fields::random_vector_field;
use fblin::operators::{boundary_quadratic_form, eps_quadratic_form, NormalMode, RegularizationParams};
use fblin::projection::project;
use fblin::{build_grid, Grid, ScalarField, SymmetricTensorField, VectorField};

fn solver_err(e: fblin::Error) -> PyErr {
    match e {
        fblin::Error::InvalidGrid(_) | fblin::Error::EpsOutOfRange { .. } | fblin::Error::Invalid(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn mode_for(eps: Option<f64>) -> PyResult<NormalMode> {
    Ok(match eps {
        Some(e) => NormalMode::Regularized(RegularizationParams::new(e).map_err(solver_err)?),
        None => NormalMode::Direct,
    })
}

/// Polar cell-centred grid on the unit disk.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n_r: usize, n_theta: usize) -> PyResult<Self> {
        Ok(PyGrid {
            inner: build_grid(n_r, n_theta).map_err(solver_err)?,
        })
    }

    #[getter]
    fn n_r(&self) -> usize {
        self.inner.n_r
    }

    #[getter]
    fn n_theta(&self) -> usize {
        self.inner.n_theta
    }

    /// Cell-centre radii.
    fn radii(&self) -> Vec<f64> {
        self.inner.r.clone()
    }

    fn angles(&self) -> Vec<f64> {
        self.inner.theta.clone()
    }

    /// Sum of the centre quadrature weights (the disk area).
    fn area(&self) -> f64 {
        self.inner.total_weight()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, {})", self.inner.n_r, self.inner.n_theta)
    }
}

/// Solves `Laplace q = rhs`, `q = 0` on the circle. `rhs` holds centre values
/// ring by ring (`n_r * n_theta` entries).
#[pyfunction]
fn solve_dirichlet(grid: &PyGrid, rhs: Vec<f64>) -> PyResult<Vec<f64>> {
    let g = &grid.inner;
    if rhs.len() != g.len() {
        return Err(PyValueError::new_err(format!("expected {} values, got {}", g.len(), rhs.len())));
    }
    let q = solve(
        g,
        &ScalarField::from_values(g, rhs),
        &SymmetricTensorField::identity(g),
        &ScalarField::constant(g, 1.0),
        SolverOptions::default(),
    )
    .map_err(solver_err)?;
    Ok(q.values)
}

/// Idempotence, norm and orthogonality defects of the projection on a
/// seeded random field.
#[pyfunction]
#[pyo3(signature = (grid, seed = 0))]
fn projection_defects(grid: &PyGrid, seed: u64) -> PyResult<HashMap<String, f64>> {
    let g = &grid.inner;
    let b = rigid_rotation_background(1.0).jet(0.0, g).map_err(solver_err)?;
    let u = random_vector_field(g, seed, 3);
    let v = random_vector_field(g, seed + 1, 3);
    let pu = project(g, &u, &b).map_err(solver_err)?.0;
    let ppu = project(g, &pu, &b).map_err(solver_err)?.0;
    let pv = project(g, &v, &b).map_err(solver_err)?.0;
    let pair = inner_product(g, &pu, &(&v - &pv), &b.g).map_err(solver_err)?;
    Ok(HashMap::from([
        ("idempotence".to_string(), (&ppu - &pu).norm(g) / pu.norm(g)),
        ("norm_ratio".to_string(), pu.norm(g) / u.norm(g)),
        ("orthogonality".to_string(), pair.abs() / (pu.norm(g) * v.norm(g))),
    ]))
}

/// `<e1, A e1>` on rigid rotation, from the boundary form or, with `eps`,
/// from the regularized operator.
#[pyfunction]
#[pyo3(signature = (grid, omega = 1.0, eps = None))]
fn normal_form_e1(grid: &PyGrid, omega: f64, eps: Option<f64>) -> PyResult<f64> {
    let g = &grid.inner;
    let b = rigid_rotation_background(omega).jet(0.0, g).map_err(solver_err)?;
    let e1 = VectorField::from_cartesian(g, |_, _| (1.0, 0.0));
    match mode_for(eps)? {
        NormalMode::Direct => boundary_quadratic_form(g, &e1, &e1, &b.p, &b),
        NormalMode::Regularized(r) => eps_quadratic_form(g, &e1, &e1, &b.p, r),
    }
    .map_err(solver_err)
}

/// Background validation summary for rigid rotation.
#[pyfunction]
fn validate_rotation(grid: &PyGrid, omega: f64) -> PyResult<HashMap<String, f64>> {
    let g = &grid.inner;
    let b = rigid_rotation_background(omega).jet(0.0, g).map_err(solver_err)?;
    let rep = validate_background(&b, g).map_err(solver_err)?;
    Ok(HashMap::from([
        ("c0".to_string(), rep.c0),
        ("sign_condition".to_string(), f64::from(u8::from(rep.sign_condition_holds()))),
        ("volume_residual".to_string(), rep.volume_residual),
        ("boundary_pressure".to_string(), rep.boundary_pressure),
    ]))
}

/// Evolution on a rigid-rotation background.
#[pyclass(name = "Simulation")]
struct PySimulation {
    grid: Grid,
    background: RigidRotation,
    mode: NormalMode,
    scheme: Scheme,
    state: State,
}

#[pymethods]
impl PySimulation {
    /// `data` is `"e1"`, `"rotation"` or `"random"`.
    #[new]
    #[pyo3(signature = (grid, omega = 1.0, data = "e1", seed = 0, eps = None, scheme = "midpoint"))]
    fn new(grid: &PyGrid, omega: f64, data: &str, seed: u64, eps: Option<f64>, scheme: &str) -> PyResult<Self> {
        let g = grid.inner.clone();
        let background = rigid_rotation_background(omega);
        let b = background.jet(0.0, &g).map_err(solver_err)?;
        let solenoidal = |s| project(&g, &random_vector_field(&g, s, 3), &b).map(|p| p.0);
        let (w, wdot) = match data {
            "e1" => (VectorField::from_cartesian(&g, |_, _| (1.0, 0.0)), VectorField::zeros(&g)),
            "rotation" => (VectorField::from_cartesian(&g, |x, y| (-y, x)), VectorField::zeros(&g)),
            "random" => (
                solenoidal(2 * seed + 1).map_err(solver_err)?,
                solenoidal(2 * seed + 2).map_err(solver_err)?,
            ),
            other => return Err(PyValueError::new_err(format!("unknown data `{other}`"))),
        };
        let scheme = Scheme::parse(scheme).ok_or_else(|| PyValueError::new_err(format!("unknown scheme `{scheme}`")))?;
        let state = State::new(&g, 0.0, w, wdot, &b).map_err(solver_err)?;
        Ok(PySimulation {
            mode: mode_for(eps)?,
            grid: g,
            background,
            scheme,
            state,
        })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    /// Advances by `duration` with step `dt` from the current state; returns
    /// time, energy and curl drift every `record_every` steps.
    #[pyo3(signature = (duration, dt, record_every = 1))]
    fn advance(
        &mut self,
        py: Python<'_>,
        duration: f64,
        dt: f64,
        record_every: usize,
    ) -> PyResult<HashMap<String, Vec<f64>>> {
        let cfg = EvolveConfig {
            dt: Some(dt),
            t_final: duration,
            scheme: self.scheme,
            mode: self.mode,
            record_every: usize::MAX,
            ..EvolveConfig::default()
        };
        let every = record_every.max(1);
        let t0 = self.state.t;
        let (grid, background, mode, start) = (&self.grid, &self.background, self.mode, &self.state);
        let result = py.detach(|| -> fblin::Result<_> {
            let b = background.jet(0.0, grid)?;
            let tracker = CurlTracker::new(grid, start, &b)?;
            let mut rows = vec![(t0, energy_with(grid, &start.w, &start.wdot, &b, mode)?, 0.0)];
            let data = InitialData {
                w0: start.w.clone(),
                w1: start.wdot.clone(),
            };
            let tr = run(grid, background, &data, None, &cfg, &mut |s, st| {
                if st.step % every == 0 {
                    rows.push((t0 + s.t, energy_with(grid, &s.w, &s.wdot, &b, mode)?, tracker.drift(grid, s, &b)?));
                }
                Ok(())
            })?;
            Ok((rows, tr.last().clone()))
        });
        let (rows, mut last) = result.map_err(solver_err)?;
        last.t += t0;
        self.state = last;
        Ok(HashMap::from([
            ("t".to_string(), rows.iter().map(|r| r.0).collect()),
            ("energy".to_string(), rows.iter().map(|r| r.1).collect()),
            ("curl_drift".to_string(), rows.iter().map(|r| r.2).collect()),
        ]))
    }

    /// Cartesian components of `W` at the centre nodes, ring by ring.
    fn displacement(&self) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = self.state.w.to_cartesian(&self.grid);
        (a.values, b.values)
    }

    /// Cartesian components of `W'` at the centre nodes.
    fn velocity(&self) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = self.state.wdot.to_cartesian(&self.grid);
        (a.values, b.values)
    }

    fn divergence_defect(&self) -> f64 {
        self.state.max_defect()
    }
}

#[pymodule]
pub fn fblin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(solve_dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(projection_defects, m)?)?;
    m.add_function(wrap_pyfunction!(normal_form_e1, m)?)?;
    m.add_function(wrap_pyfunction!(validate_rotation, m)?)?;
    Ok(())
}

//! Fixed-step time integration of `W'' + A W + Gdot W' - C W' = F`.
//!
//! The state is `(W, W')`. Every right-hand side evaluation ends in one
//! projection, so both components stay divergence-free up to solver
//! tolerance; a step re-projects when the defect drifts past ten times that.

use std::sync::Arc;

use serde::Serialize;

use crate::background::{Background, BackgroundJet};
use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::grid::Grid;
use crate::lift::{assemble_series, jet_recursion_with, SeriesLift};
use crate::operators::{linear_force, normal_operator_norm, NormalMode};
use crate::projection::{divergence_defect, project};

/// Solution snapshot.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub w: VectorField,
    pub wdot: VectorField,
    pub w_defect: f64,
    pub wdot_defect: f64,
}

impl State {
    pub fn new(grid: &Grid, t: f64, w: VectorField, wdot: VectorField, b: &BackgroundJet) -> Result<Self> {
        let w_defect = divergence_defect(grid, &w, b)?;
        let wdot_defect = divergence_defect(grid, &wdot, b)?;
        Ok(State {
            t,
            w,
            wdot,
            w_defect,
            wdot_defect,
        })
    }

    pub fn zeros(grid: &Grid, t: f64) -> Self {
        State {
            t,
            w: VectorField::zeros(grid),
            wdot: VectorField::zeros(grid),
            w_defect: 0.0,
            wdot_defect: 0.0,
        }
    }

    pub fn max_defect(&self) -> f64 {
        self.w_defect.max(self.wdot_defect)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitMidpoint,
    Rk4,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "midpoint" | "implicit-midpoint" => Some(Scheme::ImplicitMidpoint),
            "rk4" => Some(Scheme::Rk4),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolveConfig {
    /// `None` selects the mode-dependent default.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub scheme: Scheme,
    pub mode: NormalMode,
    /// Divergence defects are checked every `check_every` steps.
    pub check_every: usize,
    /// A snapshot is kept every `record_every` steps (and at the end).
    pub record_every: usize,
    pub solver_tol: f64,
    pub stage_tol: f64,
    pub stage_max_iter: usize,
    /// Order `r` of the data lift; `None` evolves the raw data directly.
    pub lift_order: Option<usize>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            dt: None,
            t_final: 1.0,
            scheme: Scheme::ImplicitMidpoint,
            mode: NormalMode::Direct,
            check_every: 1,
            record_every: 1,
            solver_tol: 1e-10,
            stage_tol: 1e-10,
            stage_max_iter: 50,
            lift_order: None,
        }
    }
}

/// Time-dependent forcing `F(t)` with its time-jets at `t = 0` for the lift.
pub trait Forcing: Send + Sync {
    fn at(&self, t: f64, grid: &Grid) -> VectorField;
    /// `D_t^s F(0)` for `s = 0..count`.
    fn jets(&self, count: usize, grid: &Grid) -> Vec<VectorField>;
}

/// `F(t) = sin(freq t) F0 + cos(freq t) F1` with fixed divergence-free fields.
#[derive(Clone, Debug)]
pub struct OscillatingForcing {
    pub sin_part: VectorField,
    pub cos_part: VectorField,
    pub freq: f64,
}

impl Forcing for OscillatingForcing {
    fn at(&self, t: f64, _grid: &Grid) -> VectorField {
        let (s, c) = (self.freq * t).sin_cos();
        &self.sin_part.scale(s) + &self.cos_part.scale(c)
    }

    fn jets(&self, count: usize, _grid: &Grid) -> Vec<VectorField> {
        // D^s sin(at) at 0 cycles 0, a, 0, -a^3; cos cycles 1, 0, -a^2, 0.
        (0..count)
            .map(|s| {
                let a = self.freq.powi(s as i32);
                let (cs, cc) = match s % 4 {
                    0 => (0.0, a),
                    1 => (a, 0.0),
                    2 => (0.0, -a),
                    _ => (-a, 0.0),
                };
                &self.sin_part.scale(cs) + &self.cos_part.scale(cc)
            })
            .collect()
    }
}

/// Initial data of a run.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub w0: VectorField,
    pub w1: VectorField,
}

/// Per-step bookkeeping handed to observers.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StepStats {
    pub step: usize,
    pub t: f64,
    pub stage_iterations: usize,
    pub reproj_count: usize,
    pub div_defect: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub dt: f64,
    pub steps: usize,
    pub reproj_count: usize,
    /// Largest stage iteration count over the run.
    pub max_stage_iterations: usize,
    pub lift: Option<SeriesLift>,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// `W'' = F - A W - Gdot W' + C W'`.
pub fn rhs(
    grid: &Grid,
    state: &State,
    f_at_t: Option<&VectorField>,
    mode: NormalMode,
    b: &BackgroundJet,
) -> Result<VectorField> {
    let force = linear_force(grid, &state.w, &state.wdot, mode, b)?;
    Ok(match f_at_t {
        Some(f) => &project(grid, f, b)?.0 - &force,
        None => -&force,
    })
}

/// Step size used when the config leaves it open.
pub fn default_dt(grid: &Grid, mode: NormalMode, b: &BackgroundJet) -> Result<f64> {
    match mode {
        NormalMode::Direct => {
            let lambda = normal_operator_norm(grid, mode, b)?;
            Ok(if lambda > 0.0 { 1.9 / lambda.sqrt() } else { 0.5 * grid.dr })
        }
        NormalMode::Regularized(reg) => Ok((0.5 * reg.eps).min(0.5 * grid.dr)),
    }
}

/// Relaxation weight of the midpoint stage iteration. The stage map is
/// `K -> K0 + (dt/2) J K` with `J` skew in the energy norm and spectral
/// radius about `sqrt(lambda_max) + |omega|/2`; weighting the update by
/// `1/(1 + nu^2)` with `nu = dt rho(J)/2` gives contraction factor
/// `nu / sqrt(1 + nu^2)`, below the unrelaxed `nu` and below one for any step.
pub fn stage_relaxation(grid: &Grid, mode: NormalMode, b: &BackgroundJet, dt: f64) -> Result<f64> {
    let lambda = normal_operator_norm(grid, mode, b)?.max(0.0);
    let rot = 0.5 * b.omega.max_abs();
    let nu = 0.5 * dt * (lambda.sqrt() + rot);
    Ok(1.0 / (1.0 + nu * nu))
}

/// Background jets along the run, cached when the background is stationary.
struct JetSource<'a> {
    background: &'a dyn Background,
    grid: &'a Grid,
    fixed: Option<Arc<BackgroundJet>>,
}

impl<'a> JetSource<'a> {
    fn new(background: &'a dyn Background, grid: &'a Grid) -> Result<Self> {
        let fixed = if background.is_stationary() {
            Some(Arc::new(background.jet(0.0, grid)?))
        } else {
            None
        };
        Ok(JetSource {
            background,
            grid,
            fixed,
        })
    }

    fn at(&self, t: f64) -> Result<Arc<BackgroundJet>> {
        match &self.fixed {
            Some(b) => Ok(b.clone()),
            None => Ok(Arc::new(self.background.jet(t, self.grid)?)),
        }
    }
}

/// Acceleration including the lift correction, at time `t`.
struct Dynamics<'a> {
    grid: &'a Grid,
    jets: JetSource<'a>,
    forcing: Option<&'a dyn Forcing>,
    lift: Option<&'a SeriesLift>,
    mode: NormalMode,
}

impl Dynamics<'_> {
    fn accel(&self, t: f64, w: &VectorField, wdot: &VectorField) -> Result<VectorField> {
        let b = self.jets.at(t)?;
        let mut f = self.forcing.map(|f| f.at(t, self.grid));
        if let Some(lift) = self.lift {
            let l1 = lift.apply_l1(self.grid, t, &b, self.mode)?;
            f = Some(match f {
                Some(f) => &f - &l1,
                None => -&l1,
            });
        }
        let force = linear_force(self.grid, w, wdot, self.mode, &b)?;
        Ok(match f {
            Some(f) => &project(self.grid, &f, &b)?.0 - &force,
            None => -&force,
        })
    }
}

fn pair_norm(grid: &Grid, a: &VectorField, b: &VectorField) -> f64 {
    (a.dot(a, grid) + b.dot(b, grid)).sqrt()
}

/// Marches from `data` (or from zero data with the lifted forcing when
/// `cfg.lift_order` is set) to `cfg.t_final`, calling `observer` after every step.
pub fn run(
    grid: &Grid,
    background: &dyn Background,
    data: &InitialData,
    forcing: Option<&dyn Forcing>,
    cfg: &EvolveConfig,
    observer: &mut dyn FnMut(&State, &StepStats) -> Result<()>,
) -> Result<Trajectory> {
    if !(cfg.t_final >= 0.0) || !cfg.t_final.is_finite() {
        return Err(Error::Invalid(format!("t_final must be nonnegative, got {}", cfg.t_final)));
    }
    let b0 = background.jet(0.0, grid)?;
    let dt = match cfg.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => dt,
        Some(dt) => return Err(Error::Invalid(format!("dt must be positive, got {dt}"))),
        None => default_dt(grid, cfg.mode, &b0)?,
    };
    if cfg.scheme == Scheme::Rk4 {
        let lambda = normal_operator_norm(grid, cfg.mode, &b0)?;
        let limit = if lambda > 0.0 { 2.0 / lambda.sqrt() } else { f64::INFINITY };
        if dt > limit {
            return Err(Error::StepTooLarge { dt, limit });
        }
    }

    let relax = match cfg.scheme {
        Scheme::ImplicitMidpoint => stage_relaxation(grid, cfg.mode, &b0, dt)?,
        Scheme::Rk4 => 1.0,
    };
    let lift = match cfg.lift_order {
        Some(r) => {
            let f_jets = forcing.map(|f| f.jets(r + 1, grid)).unwrap_or_default();
            let jets = jet_recursion_with(grid, &data.w0, &data.w1, &f_jets, r, &b0, cfg.mode)?;
            Some(assemble_series(&jets, r)?)
        }
        None => None,
    };
    let dynamics = Dynamics {
        grid,
        jets: JetSource::new(background, grid)?,
        forcing,
        lift: lift.as_ref(),
        mode: cfg.mode,
    };
    // Reported state adds the series back to the evolved remainder.
    let report = |t: f64, w: &VectorField, wdot: &VectorField| -> Result<State> {
        let b = dynamics.jets.at(t)?;
        match &lift {
            Some(l) => State::new(grid, t, w + &l.value(t), wdot + &l.derivative(t, 1), &b),
            None => State::new(grid, t, w.clone(), wdot.clone(), &b),
        }
    };

    let (mut w, mut wdot) = match &lift {
        Some(_) => (VectorField::zeros(grid), VectorField::zeros(grid)),
        None => (data.w0.clone(), data.w1.clone()),
    };
    let steps = (cfg.t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut states = vec![report(0.0, &w, &wdot)?];
    let mut reproj_count = 0;
    let mut max_stage_iterations = 0;
    // Warm start of the midpoint stage.
    let mut stage: Option<(VectorField, VectorField)> = None;
    let record_every = cfg.record_every.max(1);
    let check_every = cfg.check_every.max(1);

    for step in 0..steps {
        let t = step as f64 * dt;
        let (nw, nwdot, iters) = match cfg.scheme {
            Scheme::ImplicitMidpoint => {
                let (mut kw, mut kv) = match stage.take() {
                    Some(s) => s,
                    None => (wdot.clone(), dynamics.accel(t, &w, &wdot)?),
                };
                let tm = t + 0.5 * dt;
                let mut iters = 0;
                loop {
                    iters += 1;
                    let mw = w.axpy(0.5 * dt, &kw);
                    let mv = wdot.axpy(0.5 * dt, &kv);
                    let fkv = dynamics.accel(tm, &mw, &mv)?;
                    let new_kv = kv.scale(1.0 - relax).axpy(relax, &fkv);
                    let new_kw = kw.scale(1.0 - relax).axpy(relax, &mv);
                    let change = pair_norm(grid, &(&new_kw - &kw), &(&new_kv - &kv));
                    let size = pair_norm(grid, &new_kw, &new_kv);
                    kw = new_kw;
                    kv = new_kv;
                    if !change.is_finite() {
                        return Err(Error::StageDivergence { step, change });
                    }
                    if change <= cfg.stage_tol * size.max(1e-300) || size == 0.0 {
                        break;
                    }
                    if iters >= cfg.stage_max_iter {
                        return Err(Error::StageDivergence {
                            step,
                            change: change / size,
                        });
                    }
                }
                let nw = w.axpy(dt, &kw);
                let nwdot = wdot.axpy(dt, &kv);
                stage = Some((kw, kv));
                (nw, nwdot, iters)
            }
            Scheme::Rk4 => {
                let k1w = wdot.clone();
                let k1v = dynamics.accel(t, &w, &wdot)?;
                let (w2, v2) = (w.axpy(0.5 * dt, &k1w), wdot.axpy(0.5 * dt, &k1v));
                let k2v = dynamics.accel(t + 0.5 * dt, &w2, &v2)?;
                let k2w = v2;
                let (w3, v3) = (w.axpy(0.5 * dt, &k2w), wdot.axpy(0.5 * dt, &k2v));
                let k3v = dynamics.accel(t + 0.5 * dt, &w3, &v3)?;
                let k3w = v3;
                let (w4, v4) = (w.axpy(dt, &k3w), wdot.axpy(dt, &k3v));
                let k4v = dynamics.accel(t + dt, &w4, &v4)?;
                let k4w = v4;
                let sum = |a: &VectorField, b: &VectorField, c: &VectorField, d: &VectorField| {
                    a.axpy(2.0, b).axpy(2.0, c).axpy(1.0, d).scale(dt / 6.0)
                };
                (
                    &w + &sum(&k1w, &k2w, &k3w, &k4w),
                    &wdot + &sum(&k1v, &k2v, &k3v, &k4v),
                    4,
                )
            }
        };
        w = nw;
        wdot = nwdot;
        max_stage_iterations = max_stage_iterations.max(iters);
        let tn = (step + 1) as f64 * dt;
        let mut defect = 0.0;
        if (step + 1) % check_every == 0 {
            let b = dynamics.jets.at(tn)?;
            let limit = 10.0 * cfg.solver_tol;
            let dw = divergence_defect(grid, &w, &b)?;
            let dv = divergence_defect(grid, &wdot, &b)?;
            if dw > limit * w.norm(grid).max(1.0) {
                w = project(grid, &w, &b)?.0;
                reproj_count += 1;
            }
            if dv > limit * wdot.norm(grid).max(1.0) {
                wdot = project(grid, &wdot, &b)?.0;
                reproj_count += 1;
            }
            defect = dw.max(dv);
        }
        let state = report(tn, &w, &wdot)?;
        let stats = StepStats {
            step: step + 1,
            t: tn,
            stage_iterations: iters,
            reproj_count,
            div_defect: defect.max(state.max_defect()),
        };
        observer(&state, &stats)?;
        if (step + 1) % record_every == 0 || step + 1 == steps {
            states.push(state);
        }
    }
    Ok(Trajectory {
        states,
        dt,
        steps,
        reproj_count,
        max_stage_iterations,
        lift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::rigid_rotation_background;
    use crate::grid::build_grid;

    fn e(grid: &Grid, a: f64, b: f64) -> VectorField {
        VectorField::from_cartesian(grid, move |_, _| (a, b))
    }

    #[test]
    fn rhs_examples() {
        let g = build_grid(64, 64).unwrap();
        let b = rigid_rotation_background(1.0).jet(0.0, &g).unwrap();
        let z = State::zeros(&g, 0.0);
        assert_eq!(rhs(&g, &z, None, NormalMode::Direct, &b).unwrap().max_abs(), 0.0);
        let s = State::new(&g, 0.0, e(&g, 1.0, 0.0), VectorField::zeros(&g), &b).unwrap();
        let a = rhs(&g, &s, None, NormalMode::Direct, &b).unwrap();
        assert!((&a + &e(&g, 1.0, 0.0)).max_abs() < 1e-3);
        let s = State::new(&g, 0.0, VectorField::zeros(&g), e(&g, 1.0, 0.0), &b).unwrap();
        let a = rhs(&g, &s, None, NormalMode::Direct, &b).unwrap();
        assert!((&a - &e(&g, 0.0, -2.0)).max_abs() < 1e-10);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = build_grid(16, 16).unwrap();
        let bg = rigid_rotation_background(1.0);
        let data = InitialData {
            w0: VectorField::zeros(&g),
            w1: VectorField::zeros(&g),
        };
        let cfg = EvolveConfig {
            dt: Some(0.05),
            t_final: 0.2,
            ..Default::default()
        };
        let tr = run(&g, &bg, &data, None, &cfg, &mut |_, _| Ok(())).unwrap();
        assert_eq!(tr.steps, 4);
        assert_eq!(tr.states.len(), 5);
        for s in &tr.states {
            assert_eq!(s.w.max_abs() + s.wdot.max_abs(), 0.0);
        }
    }

    #[test]
    fn rk4_step_limit_is_enforced() {
        let g = build_grid(16, 16).unwrap();
        let bg = rigid_rotation_background(1.0);
        let data = InitialData {
            w0: e(&g, 1.0, 0.0),
            w1: VectorField::zeros(&g),
        };
        let cfg = EvolveConfig {
            dt: Some(5.0),
            t_final: 5.0,
            scheme: Scheme::Rk4,
            ..Default::default()
        };
        assert!(matches!(
            run(&g, &bg, &data, None, &cfg, &mut |_, _| Ok(())),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn stage_iteration_failure_reports_step() {
        let g = build_grid(16, 16).unwrap();
        let bg = rigid_rotation_background(1.0);
        let data = InitialData {
            w0: e(&g, 1.0, 0.0),
            w1: VectorField::zeros(&g),
        };
        let cfg = EvolveConfig {
            dt: Some(0.5),
            t_final: 1.0,
            stage_max_iter: 2,
            ..Default::default()
        };
        assert!(matches!(
            run(&g, &bg, &data, None, &cfg, &mut |_, _| Ok(())),
            Err(Error::StageDivergence { step: 0, .. })
        ));
    }

    #[test]
    fn constant_subspace_rotates() {
        // W'' = -W + C W' on constants: W(t) stays in span(e1, e2).
        let g = build_grid(32, 32).unwrap();
        let bg = rigid_rotation_background(1.0);
        let data = InitialData {
            w0: e(&g, 1.0, 0.0),
            w1: VectorField::zeros(&g),
        };
        let cfg = EvolveConfig {
            dt: Some(0.01),
            t_final: 0.1,
            ..Default::default()
        };
        let tr = run(&g, &bg, &data, None, &cfg, &mut |_, _| Ok(())).unwrap();
        let last = tr.last();
        let (x, y) = last.w.to_cartesian(&g);
        let spread = x.values.iter().fold(0.0_f64, |m, v| m.max((v - x.values[0]).abs()));
        assert!(spread < 1e-3);
        assert!(y.max_abs() > 0.0);
    }

    #[test]
    fn lifted_run_reproduces_data() {
        let g = build_grid(16, 16).unwrap();
        let bg = rigid_rotation_background(1.0);
        let b = bg.jet(0.0, &g).unwrap();
        let w0 = project(&g, &crate::fields::random_vector_field(&g, 4, 2), &b).unwrap().0;
        let data = InitialData {
            w0: w0.clone(),
            w1: VectorField::zeros(&g),
        };
        let base = EvolveConfig {
            dt: Some(0.01),
            t_final: 0.1,
            ..Default::default()
        };
        let direct = run(&g, &bg, &data, None, &base, &mut |_, _| Ok(())).unwrap();
        let lifted_cfg = EvolveConfig {
            lift_order: Some(1),
            ..base
        };
        let lifted = run(&g, &bg, &data, None, &lifted_cfg, &mut |_, _| Ok(())).unwrap();
        assert!((&lifted.states[0].w - &w0).max_abs() < 1e-12);
        let diff = (&lifted.last().w - &direct.last().w).norm(&g);
        assert!(diff < 1e-4 * w0.norm(&g), "{diff}");
    }
}

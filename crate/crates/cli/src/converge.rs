//! `fblin converge`: observed orders under grid refinement and smoothing-length halving.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::Serialize;

use fblin::background::{rigid_rotation_background, Background, BackgroundJet};
use fblin::diagnostics::conserved_curl;
use fblin::elliptic::{solve_dirichlet, SolverOptions};
use fblin::evolution::{run, EvolveConfig, InitialData, Scheme};
use fblin::families::{Member, VectorFamily};
use fblin::fields::random_vector_field;
use fblin::operators::{apply_af, commutator_residual, eps_quadratic_form, RegularizationParams};
use fblin::projection::project;
use fblin::{build_grid, Grid, ScalarField, SymmetricTensorField, VectorField};

use crate::config::{BackgroundKind, Config};
use crate::{Failure, Outcome};

pub const GRID_MIN_ORDER: f64 = 1.7;
pub const EPS_MIN_ORDER: f64 = 0.9;
pub const TEMPORAL_MIN_ORDER: f64 = 1.9;
/// Errors at or below this everywhere count as exact.
pub const ROUND_OFF: f64 = 1e-10;
const CURL_RUN: f64 = 0.25;

#[derive(Debug, Serialize)]
pub struct OrderRow {
    pub study: String,
    pub parameter: String,
    pub levels: String,
    pub errors: String,
    pub orders: String,
    pub min_order: f64,
    pub status: String,
}

fn join(v: &[f64], fmt: impl Fn(f64) -> String) -> String {
    v.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(";")
}

/// Orders of `errors` against `levels`, where a level ratio of two is one halving.
pub fn order_row(study: &str, parameter: &str, levels: &[f64], errors: &[f64], min_order: f64) -> OrderRow {
    let orders: Vec<f64> = errors
        .windows(2)
        .zip(levels.windows(2))
        .map(|(e, l)| (e[0] / e[1]).ln() / (l[0] / l[1]).ln().abs())
        .collect();
    let status = if errors.iter().all(|e| *e <= ROUND_OFF) {
        "floor"
    } else if orders.iter().all(|o| *o >= min_order) {
        "pass"
    } else {
        "shortfall"
    };
    OrderRow {
        study: study.to_string(),
        parameter: parameter.to_string(),
        levels: join(levels, |x| format!("{x}")),
        errors: join(errors, |x| format!("{x:.6e}")),
        orders: join(&orders, |x| format!("{x:.4}")),
        min_order,
        status: status.to_string(),
    }
}

struct Level {
    grid: Grid,
    jet: BackgroundJet,
}

fn levels(resolutions: &[usize], omega: f64) -> fblin::Result<Vec<Level>> {
    resolutions
        .iter()
        .map(|&n| {
            let grid = build_grid(n, n)?;
            let jet = rigid_rotation_background(omega).jet(0.0, &grid)?;
            Ok(Level { grid, jet })
        })
        .collect()
}

fn elliptic_errors(lv: &Level) -> fblin::Result<f64> {
    let g = &lv.grid;
    let gi = SymmetricTensorField::identity(g);
    let kappa = ScalarField::constant(g, 1.0);
    let q = solve_dirichlet(g, &ScalarField::constant(g, 1.0), &gi, &kappa, SolverOptions::default())?;
    let unit = (&q - &ScalarField::from_polar(g, |r, _, _| (r * r - 1.0) / 4.0)).max_abs();
    let rhs = ScalarField::from_polar(g, |r, c, _| r * c);
    let q = solve_dirichlet(g, &rhs, &gi, &kappa, SolverOptions::default())?;
    let dipole = (&q - &ScalarField::from_polar(g, |r, c, _| (r * r * r - r) * c / 8.0)).max_abs();
    Ok(unit.max(dipole))
}

/// `P(V + grad q) = V` for the divergence-free `V = (d_2 psi, -d_1 psi)`,
/// `psi = sin(x) cos(2y)`, and `q = (1 - |y|^2) e^x y / 2` vanishing on the circle.
fn projection_error(lv: &Level) -> fblin::Result<f64> {
    let g = &lv.grid;
    let v = |x: f64, y: f64| (-2.0 * x.sin() * (2.0 * y).sin(), -x.cos() * (2.0 * y).cos());
    let grad_q = |x: f64, y: f64| {
        let e = 0.5 * x.exp();
        (e * y * (1.0 - x * x - y * y - 2.0 * x), e * (1.0 - x * x - 3.0 * y * y))
    };
    let u = VectorField::from_cartesian(g, |x, y| {
        let (a, b) = v(x, y);
        let (c, d) = grad_q(x, y);
        (a + c, b + d)
    });
    let want = VectorField::from_cartesian(g, v);
    Ok((&project(g, &u, &lv.jet)?.0 - &want).norm(g))
}

fn eigen_error(lv: &Level, omega: f64) -> fblin::Result<f64> {
    let (g, b) = (&lv.grid, &lv.jet);
    let e1 = VectorField::from_cartesian(g, |_, _| (1.0, 0.0));
    let rot = VectorField::from_cartesian(g, |x, y| (-y, x));
    let a = (&apply_af(g, &b.p, &e1, b)? - &e1.scale(omega * omega)).max_abs();
    Ok(a.max(apply_af(g, &b.p, &rot, b)?.max_abs()))
}

fn commutator_error(lv: &Level, fam: &VectorFamily, seed: u64) -> fblin::Result<f64> {
    let (g, b) = (&lv.grid, &lv.jet);
    let reg = RegularizationParams::new(0.1)?;
    let w = project(g, &random_vector_field(g, seed * 100 + 1, 3), b)?.0;
    let mut worst: f64 = 0.0;
    for m in fam.tangential_members().into_iter().filter(|m| matches!(m, Member::Interior(_))) {
        worst = worst.max(commutator_residual(g, fam, m, &b.p, &w, Some(reg), b)?);
    }
    Ok(worst)
}

/// Relative drift of the curl invariant with `dt` proportional to the radial spacing.
fn curl_drift(lv: &Level, bg: &dyn Background, t_final: f64, seed: u64) -> fblin::Result<f64> {
    let (g, b) = (&lv.grid, &lv.jet);
    let data = InitialData {
        w0: project(g, &random_vector_field(g, 2 * seed + 1, 3), b)?.0,
        w1: project(g, &random_vector_field(g, 2 * seed + 2, 3), b)?.0,
    };
    let cfg = EvolveConfig {
        dt: Some(0.064 / g.n_r as f64),
        t_final,
        record_every: 25,
        ..EvolveConfig::default()
    };
    let tr = run(g, bg, &data, None, &cfg, &mut |_, _| Ok(()))?;
    let d = conserved_curl(g, &tr.states, bg)?;
    Ok(d.max_drift / d.initial_norm.max(f64::MIN_POSITIVE))
}

/// Self-convergence of the implicit midpoint scheme under dt halving on the coarsest grid.
fn temporal_row(lv: &Level, bg: &dyn Background, cfg: &Config) -> fblin::Result<OrderRow> {
    let g = &lv.grid;
    let data = InitialData {
        w0: VectorField::from_cartesian(g, |_, _| (1.0, 0.0)),
        w1: VectorField::zeros(g),
    };
    let dts = [0.04, 0.02, 0.01, 0.005];
    let mut finals = vec![];
    for dt in dts {
        let ecfg = EvolveConfig {
            dt: Some(dt),
            t_final: cfg.t_final,
            scheme: Scheme::ImplicitMidpoint,
            record_every: usize::MAX,
            stage_tol: cfg.stage_tol.min(1e-12),
            stage_max_iter: cfg.stage_max_iter.max(100),
            ..EvolveConfig::default()
        };
        finals.push(run(g, bg, &data, None, &ecfg, &mut |_, _| Ok(()))?.last().w.clone());
    }
    let diffs: Vec<f64> = finals.windows(2).map(|w| (&w[0] - &w[1]).norm(g)).collect();
    Ok(order_row("temporal-midpoint", "dt", &dts[..3], &diffs, TEMPORAL_MIN_ORDER))
}

pub fn study(cfg: &Config, seed: u64) -> anyhow::Result<Vec<OrderRow>> {
    let mut res = cfg.resolutions.clone();
    res.sort_unstable();
    res.dedup();
    if res.len() < 3 {
        bail!("key `grid.resolutions`: the study needs at least 3 distinct resolutions, got {:?}", cfg.resolutions);
    }
    if res[0] < 8 {
        bail!("key `grid.resolutions`: resolutions below 8 are not supported");
    }
    let BackgroundKind::RigidRotation { omega } = cfg.background else {
        bail!("key `background.kind`: the convergence study needs rigid-rotation");
    };
    if cfg.eps_sequence.len() < 2 {
        bail!("key `diagnostics.eps_sequence`: need at least 2 values");
    }
    Ok(rows(cfg, &res, omega, seed)?)
}

fn rows(cfg: &Config, res: &[usize], omega: f64, seed: u64) -> fblin::Result<Vec<OrderRow>> {
    let lv = levels(res, omega)?;
    let bg = rigid_rotation_background(omega);
    let fam = fblin::families::build_families(cfg.d0, cfg.c1)?;
    let n: Vec<f64> = res.iter().map(|&n| n as f64).collect();
    let spacing: Vec<f64> = n.iter().map(|n| 1.0 / n).collect();
    let collect = |f: &dyn Fn(&Level) -> fblin::Result<f64>| lv.iter().map(f).collect::<fblin::Result<Vec<f64>>>();

    let mut rows = vec![
        order_row("elliptic-closed-form", "dr", &spacing, &collect(&elliptic_errors)?, GRID_MIN_ORDER),
        order_row("projection-closed-form", "dr", &spacing, &collect(&projection_error)?, GRID_MIN_ORDER),
        order_row("A-eigen", "dr", &spacing, &collect(&|l| eigen_error(l, omega))?, GRID_MIN_ORDER),
    ];

    let finest = lv.last().expect("three levels");
    let e1 = VectorField::from_cartesian(&finest.grid, |_, _| (1.0, 0.0));
    let mut eps_errors = vec![];
    for &eps in &cfg.eps_sequence {
        let reg = RegularizationParams::new(eps)?;
        let v = eps_quadratic_form(&finest.grid, &e1, &e1, &finest.jet.p, reg)?;
        eps_errors.push((v - PI * omega * omega).abs());
    }
    rows.push(order_row("A-eps-form", "eps", &cfg.eps_sequence, &eps_errors, EPS_MIN_ORDER));
    rows.push(order_row(
        "commutator-S1-eps",
        "dr",
        &spacing,
        &collect(&|l| commutator_error(l, &fam, seed))?,
        GRID_MIN_ORDER,
    ));

    let t_curl = cfg.t_final.min(CURL_RUN);
    let mut drift = vec![];
    for l in &lv {
        drift.push(curl_drift(l, &bg, t_curl, seed)?);
    }
    rows.push(order_row("curl-drift", "dr+dt", &spacing, &drift, GRID_MIN_ORDER));

    if cfg.temporal_study {
        rows.push(temporal_row(&lv[0], &bg, cfg)?);
    }
    Ok(rows)
}

pub fn cmd_converge(cfg: &Config, out: &Path, seed: u64) -> Outcome {
    let rows = match study(cfg, seed) {
        Ok(r) => r,
        Err(e) if e.downcast_ref::<fblin::Error>().is_some() => return Err(Failure::solver(e)),
        Err(e) => return Err(Failure::config(e)),
    };
    let write = || -> anyhow::Result<()> {
        std::fs::create_dir_all(out)?;
        let mut w = csv::Writer::from_path(out.join("converge.csv"))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    };
    write()
        .with_context(|| format!("cannot write {}", out.join("converge.csv").display()))
        .map_err(Failure::config)?;
    for r in &rows {
        println!("{:<24} orders [{}] >= {} : {}", r.study, r.orders, r.min_order, r.status);
    }
    let short: Vec<&str> = rows.iter().filter(|r| r.status == "shortfall").map(|r| r.study.as_str()).collect();
    if short.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: Failure::ORDER,
            error: anyhow!("order shortfall: {}", short.join(", ")),
        })
    }
}

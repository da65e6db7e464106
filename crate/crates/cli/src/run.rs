//! `fblin run`: one evolution with trajectory CSV, final report and optional field dumps.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use serde_json::json;

use fblin::background::BackgroundJet;
use fblin::diagnostics::{
    curl_seminorms, energy_bound_check, energy_report, energy_tangential, energy_with, growth_coefficient,
    state_jets, CurlTracker, EnergySample,
};
use fblin::evolution::{run, Forcing, OscillatingForcing, State, StepStats};
use fblin::fields::dump_tensor;
use fblin::families::Member;
use fblin::{Grid, Tensor, VectorField};

use crate::config::Config;
use crate::setup::{evolve_config, shifted, Problem};
use crate::{Failure, Outcome};

#[derive(Serialize)]
struct Row {
    t: f64,
    #[serde(rename = "E")]
    energy: f64,
    #[serde(rename = "E1_tang")]
    tangential: f64,
    #[serde(rename = "C1_curl")]
    curl: f64,
    curl_invariant_drift: f64,
    div_defect: f64,
    reproj_count: usize,
}

pub struct RunOptions<'a> {
    pub out: &'a Path,
    pub dump_every: Option<usize>,
    pub seed: u64,
}

fn forcing_jets(f: Option<&OscillatingForcing>, t: f64, count: usize, grid: &Grid) -> Vec<VectorField> {
    f.map(|f| shifted(f, t).jets(count, grid)).unwrap_or_default()
}

struct Recorder<'a> {
    problem: &'a Problem,
    cfg: &'a Config,
    forcing: Option<&'a OscillatingForcing>,
    static_labels: Vec<Member>,
    tracker: CurlTracker,
    rows: Vec<Row>,
    samples: Vec<EnergySample>,
}

impl Recorder<'_> {
    fn jet(&self, t: f64) -> fblin::Result<BackgroundJet> {
        self.problem.background.jet(t, &self.problem.grid)
    }

    fn record(&mut self, s: &State, reproj_count: usize) -> fblin::Result<()> {
        let g = &self.problem.grid;
        let fam = &self.problem.families;
        let mode = self.cfg.mode();
        let b = self.jet(s.t)?;
        let energy = energy_with(g, &s.w, &s.wdot, &b, mode)?;
        let jets = state_jets(g, &s.w, &s.wdot, &forcing_jets(self.forcing, s.t, 1, g), 3, &b, mode)?;
        let tangential = energy_tangential(g, &jets, fam, 1, &b, mode)?.total;
        let curl = curl_seminorms(g, &s.w, &s.wdot, fam, &self.static_labels, 1, &b)?.seminorm;
        self.rows.push(Row {
            t: s.t,
            energy,
            tangential,
            curl,
            curl_invariant_drift: self.tracker.drift(g, s, &b)?,
            div_defect: s.max_defect(),
            reproj_count,
        });
        self.samples.push(EnergySample {
            t: s.t,
            energy,
            forcing_norm: self.forcing.map(|f| f.at(s.t, g).norm(g)).unwrap_or(0.0),
            growth: growth_coefficient(g, &b),
        });
        Ok(())
    }
}

fn dump(dir: &Path, grid: &Grid, s: &State, step: usize) -> fblin::Result<()> {
    for (name, field) in [("w", &s.w), ("wdot", &s.wdot)] {
        let file = File::create(dir.join(format!("{name}_{step:06}.csv")))?;
        dump_tensor(BufWriter::new(file), grid, &Tensor::Vector(field.clone()))?;
    }
    Ok(())
}

pub fn cmd_run(cfg: &Config, opts: &RunOptions) -> Outcome {
    let started = Instant::now();
    let problem = Problem::new(cfg).map_err(Failure::config)?;
    let g = &problem.grid;
    let data = problem.initial_data(cfg.data, opts.seed).map_err(Failure::solver)?;
    let forcing = problem
        .forcing(cfg.forcing, cfg.forcing_freq, opts.seed)
        .map_err(Failure::solver)?;
    std::fs::create_dir_all(opts.out)
        .with_context(|| format!("cannot create {}", opts.out.display()))
        .map_err(Failure::config)?;
    let fields_dir = opts.out.join("fields");
    if opts.dump_every.is_some() {
        std::fs::create_dir_all(&fields_dir)
            .with_context(|| format!("cannot create {}", fields_dir.display()))
            .map_err(Failure::config)?;
    }

    let initial = State::new(g, 0.0, data.w0.clone(), data.w1.clone(), &problem.jet).map_err(Failure::solver)?;
    let static_labels = problem
        .families
        .tangential_members()
        .into_iter()
        .filter(|m| m.is_static())
        .collect();
    let mut rec = Recorder {
        problem: &problem,
        cfg,
        forcing: forcing.as_ref(),
        static_labels,
        tracker: CurlTracker::new(g, &initial, &problem.jet).map_err(Failure::solver)?,
        rows: vec![],
        samples: vec![],
    };
    rec.record(&initial, 0).map_err(Failure::solver)?;
    if let Some(n) = opts.dump_every {
        if n > 0 {
            dump(&fields_dir, g, &initial, 0).map_err(Failure::solver)?;
        }
    }

    let ecfg = evolve_config(cfg);
    let mut last_recorded = 0;
    let mut observer = |s: &State, st: &StepStats| -> fblin::Result<()> {
        if st.step % cfg.record_every == 0 {
            rec.record(s, st.reproj_count)?;
            last_recorded = st.step;
        }
        if let Some(n) = opts.dump_every.filter(|&n| n > 0) {
            if st.step % n == 0 {
                dump(&fields_dir, g, s, st.step)?;
            }
        }
        Ok(())
    };
    let forcing_dyn = forcing.as_ref().map(|f| f as &dyn Forcing);
    let tr = run(g, problem.background.as_ref(), &data, forcing_dyn, &ecfg, &mut observer)
        .map_err(Failure::solver)?;
    let last = tr.last();
    if last_recorded != tr.steps {
        rec.record(last, tr.reproj_count).map_err(Failure::solver)?;
    }

    let b_final = rec.jet(last.t).map_err(Failure::solver)?;
    let report = energy_report(
        g,
        last,
        &forcing_jets(forcing.as_ref(), last.t, cfg.order + 1, g),
        &problem.families,
        cfg.order,
        &b_final,
        cfg.mode(),
    )
    .map_err(Failure::solver)?;
    let bound = energy_bound_check(&rec.samples, cfg.energy_tol);

    let write = || -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(opts.out.join("trajectory.csv"))?;
        for row in &rec.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        let doc = json!({
            "command": "run",
            "background": {
                "description": problem.background.describe(),
                "validation": problem.validation,
            },
            "warnings": problem.warnings(),
            "settings": {
                "n_r": cfg.n_r,
                "n_theta": cfg.n_theta,
                "scheme": cfg.scheme,
                "eps": cfg.eps,
                "dt": tr.dt,
                "t_final": cfg.t_final,
                "lift_order": cfg.lift_order,
                "seed": opts.seed,
            },
            "stats": {
                "steps": tr.steps,
                "reproj_count": tr.reproj_count,
                "max_stage_iterations": tr.max_stage_iterations,
                "final_div_defect": last.max_defect(),
            },
            "energy_bound": bound,
            "final": report,
            "metadata": {
                "wall_clock_seconds": started.elapsed().as_secs_f64(),
                "threads": rayon::current_num_threads(),
            },
        });
        std::fs::write(opts.out.join("report.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(())
    };
    write().map_err(Failure::config)?;
    for w in problem.warnings() {
        eprintln!("warning: {w}");
    }
    println!(
        "run: {} steps to t = {}, E = {:.6e}, energy bound ratio {:.4}",
        tr.steps, last.t, report.energy, bound.measured
    );
    Ok(())
}

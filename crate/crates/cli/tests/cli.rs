use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = "[grid]\nn_r = 8\nn_theta = 8\n[evolve]\ndt = 0.01\nt_final = 0.05\nrecord_every = 1\n";

fn fblin(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fblin"));
    cmd.args(args).env_remove("FBLIN_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn invoke(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fblin(&args, &[])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_trajectory_and_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.ini", SMALL);
    let out = dir.path().join("out");
    let o = invoke("run", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t,E,E1_tang,C1_curl,curl_invariant_drift,div_defect,reproj_count")
    );
    assert_eq!(lines.count(), 6);
    let report = json(&out.join("report.json"));
    assert!(report["final"]["energy"].as_f64().unwrap() > 0.0);
    assert_eq!(report["energy_bound"]["pass"], Value::Bool(true));
    assert_eq!(report["stats"]["steps"], 5);
}

#[test]
fn run_is_deterministic_apart_from_metadata() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.ini", &format!("{SMALL}data = random\n"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(invoke("run", &cfg, &a, &["--seed", "3"]).status.success());
    assert!(invoke("run", &cfg, &b, &["--seed", "3"]).status.success());
    assert_eq!(
        std::fs::read(a.join("trajectory.csv")).unwrap(),
        std::fs::read(b.join("trajectory.csv")).unwrap()
    );
    let strip = |p: &Path| {
        let mut v = json(&p.join("report.json"));
        v.as_object_mut().unwrap().remove("metadata");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));
    let c = dir.path().join("c");
    assert!(invoke("run", &cfg, &c, &["--seed", "4"]).status.success());
    assert_ne!(strip(&a), strip(&c));
}

#[test]
fn zero_rotation_runs_with_sign_warning() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.ini", &format!("[background]\nomega = 0\n{SMALL}"));
    let out = dir.path().join("out");
    let o = invoke("run", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    let warnings = report["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("c0")), "{warnings:?}");
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("[evolve]\nmode = regularized\neps = 0.3\n", "evolve.eps"),
        ("[grid]\nn_rr = 8\n", "n_rr"),
        ("[evolve]\ndt = fast\n", "evolve.dt"),
        ("[solver]\ntol = 1\n", "solver"),
        ("[background]\nkind = tabulated\n", "background.path"),
    ];
    for (text, key) in cases {
        let cfg = write_config(dir.path(), "bad.ini", text);
        let o = invoke("run", &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(stderr(&o).contains(key), "{text}: {}", stderr(&o));
    }
    let o = invoke("run", &dir.path().join("missing.ini"), &out, &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "stage.ini",
        "[grid]\nn_r = 16\nn_theta = 16\n[evolve]\ndt = 0.05\nt_final = 0.1\nstage_max_iter = 1\nstage_tol = 1e-15\n",
    );
    let o = invoke("run", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn thread_cap_is_validated() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.ini", SMALL);
    let out = dir.path().join("out");
    let args = ["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(fblin(&args, &[("FBLIN_THREADS", "0")]).status.code(), Some(1));
    let o = fblin(&args, &[("FBLIN_THREADS", "2")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&out.join("report.json"))["metadata"]["threads"], 2);
}

#[test]
fn field_dumps_follow_the_step_interval() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.ini", SMALL);
    let out = dir.path().join("out");
    assert!(invoke("run", &cfg, &out, &["--dump-fields", "2"]).status.success());
    let mut names: Vec<String> = std::fs::read_dir(out.join("fields"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["w_000000.csv", "w_000002.csv", "w_000004.csv", "wdot_000000.csv", "wdot_000002.csv", "wdot_000004.csv"]
    );
    let dump = std::fs::read_to_string(out.join("fields/w_000000.csv")).unwrap();
    assert_eq!(dump.lines().count(), 1 + 64);
}

#[test]
fn regularized_forced_lifted_run() {
    let dir = TempDir::new().unwrap();
    let text = "[grid]\nn_r = 16\nn_theta = 16\n[evolve]\nmode = regularized\neps = 0.2\ndt = 0.01\n\
                t_final = 0.1\ndata = random\nforcing = oscillating\nlift_order = 1\n";
    let cfg = write_config(dir.path(), "reg.ini", text);
    let out = dir.path().join("out");
    let o = invoke("run", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert_eq!(report["settings"]["eps"], 0.2);
    assert_eq!(report["energy_bound"]["pass"], Value::Bool(true));
}

/// Rigid rotation written as samples, built from polar formulas.
fn rotation_table(n: usize, omega: f64) -> String {
    let mut s = String::from("t,j,k,x1,x2,x1_y1,x1_y2,x2_y1,x2_y2,p\n");
    for step in 0..6 {
        let t = 0.1 * step as f64;
        let (c, sn) = ((omega * t).cos(), (omega * t).sin());
        for j in 0..n {
            let r = (j as f64 + 0.5) / n as f64;
            for k in 0..n {
                let th = 2.0 * PI * k as f64 / n as f64;
                let (y1, y2) = (r * th.cos(), r * th.sin());
                let p = 0.5 * omega * omega * (1.0 - r * r);
                writeln!(s, "{t},{j},{k},{},{},{c},{},{sn},{c},{p}", c * y1 - sn * y2, sn * y1 + c * y2, -sn).unwrap();
            }
        }
    }
    s
}

#[test]
fn tabulated_background_run() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("rotation.csv"), rotation_table(8, 1.0)).unwrap();
    let text = format!("[background]\nkind = tabulated\npath = rotation.csv\n{SMALL}");
    let cfg = write_config(dir.path(), "tab.ini", &text);
    let out = dir.path().join("out");
    let o = invoke("run", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&out.join("report.json"));
    assert!(report["background"]["description"].as_str().unwrap().contains("tabulated"));
}

#[test]
fn verify_default_grid_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "default.ini", "");
    let out = dir.path().join("out");
    let o = invoke("verify", &cfg, &out, &[]);
    assert!(o.status.success(), "{}\n{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let report = json(&out.join("verify.json"));
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["note"].as_str().map_or(true, |n| !n.starts_with("skipped"))));
    for name in ["projection-idempotence", "A-symmetry", "A-positivity", "A-eps-convergence", "curl-conservation"] {
        assert!(checks.iter().any(|c| c["name"] == name), "{name}");
    }
}

#[test]
fn verify_coarse_grid_skips_refinement_checks() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "coarse.ini", SMALL);
    let out = dir.path().join("out");
    let o = invoke("verify", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&out.join("verify.json"));
    let skipped: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["note"] == "skipped: below minimum resolution")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(skipped.contains(&"A-eigen") && skipped.contains(&"commutator-S1-eps-order"), "{skipped:?}");
}

#[test]
fn verify_flags_a_sign_fault() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "fault.ini", &format!("{SMALL}[diagnostics]\nfault = a-sign\n"));
    let out = dir.path().join("out");
    let o = invoke("verify", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("A-positivity"), "{}", stderr(&o));
    let report = json(&out.join("verify.json"));
    assert!(report["failures"].as_array().unwrap().iter().any(|f| f == "A-positivity"));
}

#[test]
fn converge_needs_three_resolutions() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "one.ini", "[grid]\nresolutions = 32\n");
    let o = invoke("converge", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid.resolutions"));
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn converge_default_study() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "default.ini", "[diagnostics]\ntemporal_study = true\n");
    let out = dir.path().join("out");
    let o = invoke("converge", &cfg, &out, &[]);
    assert!(o.status.success(), "{}\n{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let rows = rows(&out.join("converge.csv"));
    let studies: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(
        studies,
        [
            "elliptic-closed-form",
            "projection-closed-form",
            "A-eigen",
            "A-eps-form",
            "commutator-S1-eps",
            "curl-drift",
            "temporal-midpoint"
        ]
    );
    for r in &rows {
        assert_ne!(&r[6], "shortfall", "{r:?}");
    }
    let temporal = rows.last().unwrap();
    assert!(temporal[4].split(';').all(|o| o.parse::<f64>().unwrap() >= 1.9));
}

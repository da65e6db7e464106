//! `key = value` configuration with `[background]`, `[grid]`, `[evolve]` and
//! `[diagnostics]` sections. Unknown sections and keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ini::Ini;

use fblin::evolution::Scheme;
use fblin::operators::{NormalMode, RegularizationParams};

#[derive(Clone, Debug, PartialEq)]
pub enum BackgroundKind {
    RigidRotation { omega: f64 },
    Tabulated { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataKind {
    Zero,
    E1,
    Rotation,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForcingKind {
    None,
    Oscillating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Flips the sign of the normal operator inside `verify`.
    ASign,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub background: BackgroundKind,
    pub n_r: usize,
    pub n_theta: usize,
    pub resolutions: Vec<usize>,
    pub scheme: Scheme,
    /// Smoothing length; `None` selects the direct operator.
    pub eps: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: f64,
    pub data: DataKind,
    pub forcing: ForcingKind,
    pub forcing_freq: f64,
    pub lift_order: Option<usize>,
    pub record_every: usize,
    pub check_every: usize,
    pub stage_tol: f64,
    pub stage_max_iter: usize,
    pub order: usize,
    pub d0: f64,
    pub c1: f64,
    pub energy_tol: f64,
    pub eps_sequence: Vec<f64>,
    pub temporal_study: bool,
    pub fault: Fault,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            background: BackgroundKind::RigidRotation { omega: 1.0 },
            n_r: 64,
            n_theta: 64,
            resolutions: vec![32, 64, 128],
            scheme: Scheme::ImplicitMidpoint,
            eps: None,
            dt: Some(1e-3),
            t_final: 1.0,
            data: DataKind::E1,
            forcing: ForcingKind::None,
            forcing_freq: 1.0,
            lift_order: None,
            record_every: 10,
            check_every: 1,
            stage_tol: 1e-10,
            stage_max_iter: 50,
            order: 1,
            d0: fblin::profiles::D0,
            c1: 1.0,
            energy_tol: 1e-2,
            eps_sequence: vec![0.2, 0.1, 0.05],
            temporal_study: false,
            fault: Fault::None,
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("background", &["kind", "omega", "path"]),
    ("grid", &["n_r", "n_theta", "resolutions"]),
    (
        "evolve",
        &[
            "scheme",
            "mode",
            "eps",
            "dt",
            "t_final",
            "data",
            "forcing",
            "forcing_freq",
            "lift_order",
            "record_every",
            "check_every",
            "stage_tol",
            "stage_max_iter",
        ],
    ),
    (
        "diagnostics",
        &["order", "d0", "c1", "energy_tol", "eps_sequence", "temporal_study", "fault"],
    ),
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("key `{key}`: cannot parse `{value}`"))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| number(key, v.trim()))
        .collect()
}

fn optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "none" || value == "auto" {
        Ok(None)
    } else {
        number(key, value).map(Some)
    }
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("key `{key}`: expected true or false, got `{value}`"),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Config::parse(&text)?;
        if let BackgroundKind::Tabulated { path: p } = &cfg.background {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.background = BackgroundKind::Tabulated { path: base.join(p) };
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Config> {
        let ini = Ini::load_from_str(text).map_err(|e| anyhow!("config syntax: {e}"))?;
        let mut cfg = Config::default();
        let mut kind = "rigid-rotation".to_string();
        let mut omega = 1.0;
        let mut table: Option<PathBuf> = None;
        let mut mode = "direct".to_string();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    bail!("key `{key}` appears outside any section");
                }
                continue;
            };
            let allowed = KEYS
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, k)| *k)
                .ok_or_else(|| anyhow!("unknown section `[{section}]`"))?;
            for (key, value) in props.iter() {
                if !allowed.contains(&key) {
                    bail!("unknown key `{key}` in section `[{section}]`");
                }
                let value = value.trim();
                let full = format!("{section}.{key}");
                let k = full.as_str();
                match k {
                    "background.kind" => kind = value.to_string(),
                    "background.omega" => omega = number(k, value)?,
                    "background.path" => table = Some(PathBuf::from(value)),
                    "grid.n_r" => cfg.n_r = number(k, value)?,
                    "grid.n_theta" => cfg.n_theta = number(k, value)?,
                    "grid.resolutions" => cfg.resolutions = list(k, value)?,
                    "evolve.scheme" => {
                        cfg.scheme = Scheme::parse(value)
                            .ok_or_else(|| anyhow!("key `{k}`: unknown scheme `{value}`"))?
                    }
                    "evolve.mode" => mode = value.to_string(),
                    "evolve.eps" => cfg.eps = Some(number(k, value)?),
                    "evolve.dt" => cfg.dt = optional(k, value)?,
                    "evolve.t_final" => cfg.t_final = number(k, value)?,
                    "evolve.data" => {
                        cfg.data = match value {
                            "zero" => DataKind::Zero,
                            "e1" => DataKind::E1,
                            "rotation" => DataKind::Rotation,
                            "random" => DataKind::Random,
                            _ => bail!("key `{k}`: unknown data `{value}`"),
                        }
                    }
                    "evolve.forcing" => {
                        cfg.forcing = match value {
                            "none" => ForcingKind::None,
                            "oscillating" => ForcingKind::Oscillating,
                            _ => bail!("key `{k}`: unknown forcing `{value}`"),
                        }
                    }
                    "evolve.forcing_freq" => cfg.forcing_freq = number(k, value)?,
                    "evolve.lift_order" => cfg.lift_order = optional(k, value)?,
                    "evolve.record_every" => cfg.record_every = number(k, value)?,
                    "evolve.check_every" => cfg.check_every = number(k, value)?,
                    "evolve.stage_tol" => cfg.stage_tol = number(k, value)?,
                    "evolve.stage_max_iter" => cfg.stage_max_iter = number(k, value)?,
                    "diagnostics.order" => cfg.order = number(k, value)?,
                    "diagnostics.d0" => cfg.d0 = number(k, value)?,
                    "diagnostics.c1" => cfg.c1 = number(k, value)?,
                    "diagnostics.energy_tol" => cfg.energy_tol = number(k, value)?,
                    "diagnostics.eps_sequence" => cfg.eps_sequence = list(k, value)?,
                    "diagnostics.temporal_study" => cfg.temporal_study = flag(k, value)?,
                    "diagnostics.fault" => {
                        cfg.fault = match value {
                            "none" => Fault::None,
                            "a-sign" => Fault::ASign,
                            _ => bail!("key `{k}`: unknown fault `{value}`"),
                        }
                    }
                    _ => unreachable!("key list and match arms disagree on `{k}`"),
                }
            }
        }
        cfg.background = match kind.as_str() {
            "rigid-rotation" => BackgroundKind::RigidRotation { omega },
            "tabulated" => BackgroundKind::Tabulated {
                path: table.ok_or_else(|| anyhow!("key `background.path` is required for tabulated backgrounds"))?,
            },
            other => bail!("key `background.kind`: unknown background `{other}`"),
        };
        match mode.as_str() {
            "direct" => cfg.eps = None,
            "regularized" => {
                if cfg.eps.is_none() {
                    bail!("key `evolve.eps` is required in regularized mode");
                }
            }
            other => bail!("key `evolve.mode`: unknown mode `{other}`"),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n_r == 0 || self.n_theta < 4 || self.n_theta % 2 == 1 {
            bail!(
                "key `grid.n_theta`/`grid.n_r`: need n_r >= 1 and even n_theta >= 4, got {}x{}",
                self.n_r,
                self.n_theta
            );
        }
        if !(self.d0 > 0.0 && self.d0 < 1.0) {
            bail!("key `diagnostics.d0`: must lie in (0, 1), got {}", self.d0);
        }
        let max_eps = 0.5 * self.d0;
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps <= max_eps) {
                bail!("key `evolve.eps`: {eps} outside (0, d0/2] = (0, {max_eps}]");
            }
            RegularizationParams::new(eps).map_err(|e| anyhow!("key `evolve.eps`: {e}"))?;
        }
        for &eps in &self.eps_sequence {
            if !(eps > 0.0 && eps <= max_eps) {
                bail!("key `diagnostics.eps_sequence`: {eps} outside (0, d0/2] = (0, {max_eps}]");
            }
        }
        if let BackgroundKind::RigidRotation { omega } = self.background {
            if !omega.is_finite() {
                bail!("key `background.omega`: must be finite");
            }
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            bail!("key `evolve.t_final`: must be nonnegative, got {}", self.t_final);
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                bail!("key `evolve.dt`: must be positive, got {dt}");
            }
        }
        if self.order > 3 {
            bail!("key `diagnostics.order`: at most 3, got {}", self.order);
        }
        if self.lift_order.is_some_and(|r| r > 3) {
            bail!("key `evolve.lift_order`: at most 3");
        }
        if self.record_every == 0 || self.check_every == 0 {
            bail!("key `evolve.record_every`/`evolve.check_every`: must be positive");
        }
        Ok(())
    }

    pub fn mode(&self) -> NormalMode {
        match self.eps {
            Some(eps) => NormalMode::Regularized(RegularizationParams { eps }),
            None => NormalMode::Direct,
        }
    }
}

//! Turns a parsed config into grid, background, families, data and forcing.

use anyhow::{bail, Context, Result};

use fblin::background::{
    rigid_rotation_background, validate_background, Background, BackgroundJet, TabulatedBackground,
    ValidationReport,
};
use fblin::evolution::{EvolveConfig, InitialData, OscillatingForcing};
use fblin::families::{build_families, VectorFamily};
use fblin::fields::random_vector_field;
use fblin::projection::project;
use fblin::{build_grid, Grid, VectorField};

use crate::config::{BackgroundKind, Config, DataKind, ForcingKind};

/// Band of the random fields used for data, forcing and the check battery.
pub const RANDOM_BAND: usize = 3;

pub struct Problem {
    pub grid: Grid,
    pub background: Box<dyn Background>,
    /// Background jet at `t = 0`.
    pub jet: BackgroundJet,
    pub validation: ValidationReport,
    pub families: VectorFamily,
}

pub fn background_for(cfg: &Config, grid: &Grid) -> Result<Box<dyn Background>> {
    Ok(match &cfg.background {
        BackgroundKind::RigidRotation { omega } => Box::new(rigid_rotation_background(*omega)),
        BackgroundKind::Tabulated { path } => Box::new(
            TabulatedBackground::from_csv(path, grid)
                .with_context(|| format!("key `background.path`: cannot use {}", path.display()))?,
        ),
    })
}

impl Problem {
    /// Builds everything that does not depend on the seed. Failures here are
    /// configuration errors.
    pub fn new(cfg: &Config) -> Result<Problem> {
        let grid = build_grid(cfg.n_r, cfg.n_theta).context("key `grid.n_r`/`grid.n_theta`")?;
        let background = background_for(cfg, &grid)?;
        let jet = background.jet(0.0, &grid)?;
        let validation = validate_background(&jet, &grid)?;
        if !validation.structural_ok() {
            bail!(
                "key `background`: structural validation failed: {}",
                serde_json::to_string(&validation.failures)?
            );
        }
        let families = build_families(cfg.d0, cfg.c1).context("key `diagnostics.d0`/`diagnostics.c1`")?;
        Ok(Problem {
            grid,
            background,
            jet,
            validation,
            families,
        })
    }

    /// Divergence-free random field for `seed`.
    pub fn solenoidal(&self, seed: u64) -> fblin::Result<VectorField> {
        Ok(project(&self.grid, &random_vector_field(&self.grid, seed, RANDOM_BAND), &self.jet)?.0)
    }

    pub fn initial_data(&self, kind: DataKind, seed: u64) -> fblin::Result<InitialData> {
        let g = &self.grid;
        let zero = VectorField::zeros(g);
        Ok(match kind {
            DataKind::Zero => InitialData { w0: zero.clone(), w1: zero },
            DataKind::E1 => InitialData {
                w0: VectorField::from_cartesian(g, |_, _| (1.0, 0.0)),
                w1: zero,
            },
            DataKind::Rotation => InitialData {
                w0: VectorField::from_cartesian(g, |x, y| (-y, x)),
                w1: zero,
            },
            DataKind::Random => InitialData {
                w0: self.solenoidal(2 * seed + 1)?,
                w1: self.solenoidal(2 * seed + 2)?,
            },
        })
    }

    pub fn forcing(&self, kind: ForcingKind, freq: f64, seed: u64) -> fblin::Result<Option<OscillatingForcing>> {
        Ok(match kind {
            ForcingKind::None => None,
            ForcingKind::Oscillating => Some(OscillatingForcing {
                sin_part: self.solenoidal(seed + 1000)?,
                cos_part: VectorField::zeros(&self.grid),
                freq,
            }),
        })
    }

    /// Validation findings worth surfacing without failing the run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = vec![];
        if !self.validation.sign_condition_holds() {
            out.push(format!(
                "sign condition fails: c0 = {:.6e}; the normal operator is not positive",
                self.validation.c0
            ));
        }
        for f in &self.validation.failures {
            if !f.is_structural() && !matches!(f, fblin::background::BackgroundFailure::SignCondition { .. }) {
                out.push(format!("background residual: {}", serde_json::to_string(f).unwrap_or_default()));
            }
        }
        out
    }
}

pub fn evolve_config(cfg: &Config) -> EvolveConfig {
    EvolveConfig {
        dt: cfg.dt,
        t_final: cfg.t_final,
        scheme: cfg.scheme,
        mode: cfg.mode(),
        check_every: cfg.check_every,
        record_every: cfg.record_every,
        stage_tol: cfg.stage_tol,
        stage_max_iter: cfg.stage_max_iter,
        lift_order: cfg.lift_order,
        ..EvolveConfig::default()
    }
}

/// Oscillating forcing re-centred at `t`, so its jets at zero are `D_t^s F(t)`.
pub fn shifted(f: &OscillatingForcing, t: f64) -> OscillatingForcing {
    let (s, c) = (f.freq * t).sin_cos();
    OscillatingForcing {
        sin_part: &f.sin_part.scale(c) - &f.cos_part.scale(s),
        cos_part: &f.sin_part.scale(s) + &f.cos_part.scale(c),
        freq: f.freq,
    }
}

//! Run configuration: a TOML file with one table per concern. Every key has
//! a documented default and unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::grid::Grid;
use crate::kinetics::RateConstants;
use crate::levelset::{MotionPreset, PrescribedMotion, MIN_WIDTH_CELLS};
use crate::momentum::PhysicalParams;
use crate::penalty::PenaltyParams;

/// Environment variable overriding `[output] dir`.
pub const OUT_DIR_ENV: &str = "TUMORSIM_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicalParams,
    pub rates: RateConstants,
    pub penalty: PenaltyConfig,
    pub motion: MotionConfig,
    pub initial: InitialConfig,
    pub run: RunControl,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Reference radius `R`; the box is `[-2R, 2R]^d`.
    pub radius: f64,
    pub cells_per_axis: usize,
    pub dimension: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyConfig {
    pub epsilon: f64,
    pub omega: f64,
    pub delta: f64,
    pub beta: f64,
    pub m: f64,
    /// Interface half-width in cells.
    pub smoothing_cells: f64,
    pub rho_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionConfig {
    /// `static`, `rotation(rate)` or `expansion(rate, support)`.
    pub preset: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPreset {
    /// Disk-shaped tumor with smooth bumps of every species.
    Tumor,
    /// Everything zero.
    Zero,
    /// Uniform densities at rest, no nutrient, no motion.
    Rest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub preset: InitialPreset,
    pub tumor_radius: f64,
    /// Radius of the species bumps; must not exceed `tumor_radius`.
    pub support_radius: f64,
    /// Peak values of `P, Q, D` (uniform values for the rest preset).
    pub amplitudes: [f64; 3],
    /// `C_0 = nutrient_fraction · C̄ · bump`.
    pub nutrient_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunControl {
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    /// Only seeds randomized checks; the solver is deterministic.
    pub seed: u64,
    /// Reinitialize the level set every this many steps; 0 disables.
    pub reinit_every: usize,
    /// Emit a diagnostics record every this many steps (the last step is
    /// always recorded).
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    GridCsv,
    VtkLegacy,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub diagnostics: String,
    pub snapshot: String,
    pub snapshot_format: SnapshotFormat,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { mu: 1.0, nu: 0.5, k_perm: 1.0 }
    }
}

impl Default for RateConstants {
    fn default() -> Self {
        Self {
            k_b: 1.0,
            k_q: 0.3,
            k_p: 0.4,
            k_a: 0.2,
            k_d: 0.3,
            k_r: 0.25,
            k_c: 1.0,
            c_bar: 1.0,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { radius: 1.0, cells_per_axis: 64, dimension: 2 }
    }
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            omega: 0.1,
            delta: 1e-2,
            beta: 2.0,
            m: 2.0,
            smoothing_cells: 2.0,
            rho_floor: 1e-10,
        }
    }
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self { preset: "expansion(0.1, 0.9)".into() }
    }
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            preset: InitialPreset::Tumor,
            tumor_radius: 0.4,
            support_radius: 0.4,
            amplitudes: [1.0, 0.5, 0.1],
            nutrient_fraction: 0.8,
        }
    }
}

impl Default for RunControl {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            cfl: 0.5,
            dt_max: 1e-2,
            seed: 0,
            reinit_every: 0,
            record_every: 1,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            diagnostics: "diagnostics.csv".into(),
            snapshot: "final".into(),
            snapshot_format: SnapshotFormat::GridCsv,
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |nl| before[nl + 1..].chars().count()) + 1;
    (line, column)
}

impl RunConfig {
    /// Parses and validates a configuration text.
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            ConfigError::Parse {
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.radius, self.grid.cells_per_axis, self.grid.dimension)
    }

    pub fn motion_preset(&self) -> std::result::Result<MotionPreset, ConfigError> {
        self.motion
            .preset
            .parse()
            .map_err(|e: String| ConfigError::validation(format!("motion preset: {e}")))
    }

    pub fn motion(&self) -> Result<PrescribedMotion> {
        PrescribedMotion::new(self.motion_preset()?, self.grid.radius)
    }

    /// Smoothing half-width `w = smoothing_cells · h`.
    pub fn smoothing_width(&self) -> f64 {
        self.penalty.smoothing_cells * (4.0 * self.grid.radius / self.grid.cells_per_axis as f64)
    }

    pub fn penalty_params(&self) -> PenaltyParams {
        let p = &self.penalty;
        PenaltyParams {
            epsilon: p.epsilon,
            omega: p.omega,
            delta: p.delta,
            beta: p.beta,
            m: p.m,
            w: self.smoothing_width(),
            rho_floor: p.rho_floor,
        }
    }

    /// Output directory with the environment override applied.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }

    /// Checks every solver precondition and the initial-data hypotheses.
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let g = &self.grid;
        if !(g.dimension == 2 || g.dimension == 3) {
            return Err(bad(format!("dimension must be 2 or 3, got {}", g.dimension)));
        }
        if g.cells_per_axis < crate::grid::MIN_CELLS {
            return Err(bad(format!("cells_per_axis >= 8 required, got {}", g.cells_per_axis)));
        }
        if !(g.radius.is_finite() && g.radius > 0.0) {
            return Err(bad(format!("radius must be positive, got {}", g.radius)));
        }
        self.physics.validate().map_err(bad)?;
        self.rates.validate().map_err(bad)?;
        if !(self.penalty.smoothing_cells >= MIN_WIDTH_CELLS) {
            return Err(bad(format!(
                "smoothing_cells >= {MIN_WIDTH_CELLS} required, got {}",
                self.penalty.smoothing_cells
            )));
        }
        self.penalty_params().validate().map_err(bad)?;
        let preset = self.motion_preset()?;
        PrescribedMotion::new(preset, g.radius).map_err(|e| bad(format!("motion preset: {e}")))?;

        let r = &self.run;
        if !(r.t_end.is_finite() && r.t_end > 0.0) {
            return Err(bad(format!("t_end must be positive, got {}", r.t_end)));
        }
        if !(r.cfl > 0.0 && r.cfl <= 1.0) {
            return Err(bad(format!("cfl in (0, 1] required, got {}", r.cfl)));
        }
        if !(r.dt_max.is_finite() && r.dt_max > 0.0) {
            return Err(bad(format!("dt_max must be positive, got {}", r.dt_max)));
        }
        if r.record_every == 0 {
            return Err(bad("record_every >= 1 required"));
        }
        self.validate_initial(preset)
    }

    fn validate_initial(&self, preset: MotionPreset) -> std::result::Result<(), ConfigError> {
        let init = &self.initial;
        if init.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(bad("initial species must be nonnegative"));
        }
        match init.preset {
            InitialPreset::Zero => Ok(()),
            InitialPreset::Rest => {
                if preset != MotionPreset::Static {
                    return Err(bad("rest preset requires static motion"));
                }
                Ok(())
            }
            InitialPreset::Tumor => {
                let big_r = self.grid.radius;
                if !(init.tumor_radius > 0.0 && init.tumor_radius < 2.0 * big_r) {
                    return Err(bad(format!(
                        "tumor_radius must lie in (0, 2R), got {}",
                        init.tumor_radius
                    )));
                }
                if !(init.support_radius > 0.0) {
                    return Err(bad("support_radius must be positive"));
                }
                if init.support_radius > init.tumor_radius {
                    return Err(bad(format!(
                        "initial data must vanish outside the initial tumor: support_radius {} exceeds tumor_radius {}",
                        init.support_radius, init.tumor_radius
                    )));
                }
                if init.amplitudes.iter().all(|&a| a == 0.0) {
                    return Err(bad("initial species must not vanish identically"));
                }
                if !(0.0..=1.0).contains(&init.nutrient_fraction) {
                    return Err(bad(format!(
                        "initial nutrient must satisfy 0 <= C_0 <= c_bar: nutrient_fraction {} outside [0, 1]",
                        init.nutrient_fraction
                    )));
                }
                Ok(())
            }
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(RunConfig::from_toml_str(&text)?)
}

fn bad(rule: impl Into<String>) -> ConfigError {
    ConfigError::validation(rule)
}

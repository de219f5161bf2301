//! One-parameter sweeps emulating the limit passages, run in parallel.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{ConfigError, Result};

use super::run::run_simulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Epsilon,
    Omega,
    Delta,
    Resolution,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::Omega => "omega",
            SweepParam::Delta => "delta",
            SweepParam::Resolution => "resolution",
        })
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "epsilon" => Ok(SweepParam::Epsilon),
            "omega" => Ok(SweepParam::Omega),
            "delta" => Ok(SweepParam::Delta),
            "resolution" => Ok(SweepParam::Resolution),
            _ => Err(format!("unknown sweep parameter `{s}` (expected epsilon, omega, delta or resolution)")),
        }
    }
}

impl SweepParam {
    fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepParam::Epsilon => cfg.penalty.epsilon = value,
            SweepParam::Omega => cfg.penalty.omega = value,
            SweepParam::Delta => cfg.penalty.delta = value,
            SweepParam::Resolution => cfg.grid.cells_per_axis = value as usize,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub base: RunConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        if self.values.len() < 3 {
            return Err(bad(format!("a sweep needs at least 3 values, got {}", self.values.len())));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(bad("sweep values must be positive"));
        }
        let pairs = self.values.windows(2);
        match self.param {
            SweepParam::Resolution => {
                if self.values.iter().any(|v| v.fract() != 0.0) {
                    return Err(bad("resolution values must be integers"));
                }
                if pairs.clone().any(|w| w[1] <= w[0]) {
                    return Err(bad("resolution values must be strictly increasing"));
                }
            }
            _ => {
                if pairs.clone().any(|w| w[1] >= w[0]) {
                    return Err(bad("limit sweep values must be strictly decreasing"));
                }
            }
        }
        self.base.validate()
    }

    /// Configs of every member, each differing from the base only in the
    /// swept parameter.
    pub fn member_configs(&self) -> std::result::Result<Vec<RunConfig>, ConfigError> {
        let configs: Vec<RunConfig> = self
            .values
            .iter()
            .map(|&v| {
                let mut cfg = self.base.clone();
                self.param.apply(&mut cfg, v);
                cfg
            })
            .collect();
        for cfg in &configs {
            cfg.validate()?;
        }
        // isolation: mask the swept parameter and compare serializations
        let mask = |cfg: &RunConfig| {
            let mut c = cfg.clone();
            match self.param {
                SweepParam::Epsilon => c.penalty.epsilon = self.base.penalty.epsilon,
                SweepParam::Omega => c.penalty.omega = self.base.penalty.omega,
                SweepParam::Delta => c.penalty.delta = self.base.penalty.delta,
                SweepParam::Resolution => c.grid.cells_per_axis = self.base.grid.cells_per_axis,
            }
            c.to_toml_string()
        };
        let reference = self.base.to_toml_string();
        if configs.iter().any(|c| mask(c) != reference) {
            return Err(ConfigError::validation("sweep members differ in more than the swept parameter"));
        }
        Ok(configs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub slip_time_integral: f64,
    /// Largest leakage over time and species.
    pub max_leakage: f64,
    pub max_leakage_species: [f64; 3],
    pub max_leakage_fraction: [f64; 3],
    pub energy_initial: f64,
    pub energy_max: f64,
    pub final_energy: f64,
    pub kinetic_exterior: f64,
}

impl SweepRow {
    pub const COLUMNS: [&'static str; 14] = [
        "value",
        "slip_time_integral",
        "max_leakage",
        "max_leakage_P",
        "max_leakage_Q",
        "max_leakage_D",
        "leakage_fraction_P",
        "leakage_fraction_Q",
        "leakage_fraction_D",
        "energy_initial",
        "energy_max",
        "final_energy",
        "kinetic_exterior",
        "energy_bound_ratio",
    ];

    pub fn values(&self) -> [f64; 14] {
        [
            self.value,
            self.slip_time_integral,
            self.max_leakage,
            self.max_leakage_species[0],
            self.max_leakage_species[1],
            self.max_leakage_species[2],
            self.max_leakage_fraction[0],
            self.max_leakage_fraction[1],
            self.max_leakage_fraction[2],
            self.energy_initial,
            self.energy_max,
            self.final_energy,
            self.kinetic_exterior,
            self.energy_bound_ratio(),
        ]
    }

    /// `max_t E(t) / (1 + E(0))`; the boundedness policy asks for ≤ 10.
    pub fn energy_bound_ratio(&self) -> f64 {
        self.energy_max / (1.0 + self.energy_initial)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    /// Log-log slope of the time-integrated slip against the value.
    pub slip_slope: f64,
    pub leakage_slope: f64,
    pub energy_slope: f64,
    /// Strictly decreasing along the sweep order.
    pub slip_strictly_decreasing: bool,
    /// Nonincreasing along the sweep order, per species.
    pub leakage_nonincreasing: [bool; 3],
    pub kinetic_exterior_nonincreasing: bool,
}

/// Least-squares slope of `log y` against `log x`, over pairs with both
/// entries positive. NaN with fewer than two usable pairs.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

pub fn parameter_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let configs = spec.member_configs()?;
    let outputs: Vec<_> = configs.par_iter().map(run_simulation).collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = spec
        .values
        .iter()
        .zip(&outputs)
        .map(|(&value, out)| {
            let s = &out.summary;
            SweepRow {
                value,
                slip_time_integral: s.slip_time_integral,
                max_leakage: s.max_leakage.iter().cloned().fold(0.0, f64::max),
                max_leakage_species: s.max_leakage,
                max_leakage_fraction: s.max_leakage_fraction,
                energy_initial: s.energy_initial,
                energy_max: s.energy_max,
                final_energy: s.energy_final,
                kinetic_exterior: s.kinetic_exterior_final,
            }
        })
        .collect();
    let col = |f: &dyn Fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let values = col(&|r| r.value);
    let slip = col(&|r| r.slip_time_integral);
    let leakage_nonincreasing = [0, 1, 2].map(|i| nonincreasing(&col(&|r| r.max_leakage_species[i])));
    Ok(SweepResult {
        param: spec.param,
        slip_slope: log_log_slope(&values, &slip),
        leakage_slope: log_log_slope(&values, &col(&|r| r.max_leakage)),
        energy_slope: log_log_slope(&values, &col(&|r| r.final_energy)),
        slip_strictly_decreasing: slip.windows(2).all(|w| w[1] < w[0]),
        leakage_nonincreasing,
        kinetic_exterior_nonincreasing: nonincreasing(&col(&|r| r.kinetic_exterior)),
        rows,
    })
}

fn bad(rule: impl Into<String>) -> ConfigError {
    ConfigError::validation(rule)
}

//! Grid-refinement studies against closed-form solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{norm, Grid, ScalarField, VectorField};
use crate::levelset::{advect_levelset, LevelSetField, MotionPreset, PrescribedMotion};
use crate::nutrient::diffuse_and_decay;
use crate::transport::{cfl_timestep, upwind_advect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceCase {
    /// Smooth bump carried a quarter turn by rigid rotation, upwind transport.
    AdvectionRotation,
    /// Product sine mode under diffusion with decay.
    DiffusionEigenmode,
    /// Off-center circle carried once around by the rotation preset.
    LevelsetRotation,
}

impl fmt::Display for ConvergenceCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvergenceCase::AdvectionRotation => "advection-rotation",
            ConvergenceCase::DiffusionEigenmode => "diffusion-eigenmode",
            ConvergenceCase::LevelsetRotation => "levelset-rotation",
        })
    }
}

impl FromStr for ConvergenceCase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "advection-rotation" => Ok(ConvergenceCase::AdvectionRotation),
            "diffusion-eigenmode" => Ok(ConvergenceCase::DiffusionEigenmode),
            "levelset-rotation" => Ok(ConvergenceCase::LevelsetRotation),
            _ => Err(format!(
                "unknown case `{s}` (expected advection-rotation, diffusion-eigenmode or levelset-rotation)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub case: ConvergenceCase,
    pub resolutions: Vec<usize>,
    pub errors_l1: Vec<f64>,
    pub errors_l2: Vec<f64>,
    /// `log2(e_k / e_{k+1})` for successive L1 errors.
    pub orders_l1: Vec<f64>,
    pub orders_l2: Vec<f64>,
}

fn successive_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn error_norms(num: &ScalarField, exact: &ScalarField, mask: impl Fn(usize) -> bool) -> (f64, f64) {
    let vol = num.grid().cell_volume();
    let (mut l1, mut l2) = (0.0, 0.0);
    for (c, (a, b)) in num.values().iter().zip(exact.values()).enumerate() {
        if mask(c) {
            let e = (a - b).abs();
            l1 += e * vol;
            l2 += e * e * vol;
        }
    }
    (l1, l2.sqrt())
}

const RADIUS: f64 = 1.0;
const COURANT: f64 = 0.5;

fn advection_rotation(n: usize) -> Result<(f64, f64)> {
    let grid = Grid::new(RADIUS, n, 2)?;
    // wide bump, quarter turn: keeps the upwind smearing well below the
    // bump width so the grids sit in the asymptotic range
    let (r0, width) = (0.5, 0.8);
    let turn = 0.5 * PI;
    let profile = |x: [f64; 3], angle: f64| {
        let r = (x[0] - r0 * angle.cos()).hypot(x[1] - r0 * angle.sin());
        if r < width {
            0.5 * (1.0 + (PI * r / width).cos())
        } else {
            0.0
        }
    };
    let z0 = ScalarField::from_fn(grid, |x| profile(x, 0.0));
    let exact = ScalarField::from_fn(grid, |x| profile(x, turn));
    let v = VectorField::from_fn(grid, |x| [-x[1], x[0], 0.0]);
    let dt0 = cfl_timestep(&v, grid.spacing(), COURANT)?;
    let steps = (turn / dt0).ceil() as usize;
    let dt = turn / steps as f64;
    let mut z = z0;
    for _ in 0..steps {
        z = upwind_advect(&z, &v, dt)?;
    }
    Ok(error_norms(&z, &exact, |_| true))
}

fn diffusion_eigenmode(n: usize) -> Result<(f64, f64)> {
    let grid = Grid::new(RADIUS, n, 2)?;
    let nu = 1.0;
    let t_end = 0.1;
    let outer = 10;
    let half = grid.half_width();
    let mode = |x: [f64; 3]| {
        (0..grid.dim()).map(|a| (PI * (x[a] + half) / (2.0 * half)).sin()).product::<f64>()
    };
    let lambda = grid.dim() as f64 * (PI / (2.0 * half)).powi(2);
    let mut c = ScalarField::from_fn(grid, mode);
    let coeff = ScalarField::filled(grid, nu);
    for _ in 0..outer {
        c = diffuse_and_decay(&c, &coeff, t_end / outer as f64)?;
    }
    let decay = (-(nu * lambda + 1.0) * t_end).exp();
    let exact = ScalarField::from_fn(grid, |x| decay * mode(x));
    Ok(error_norms(&c, &exact, |_| true))
}

fn levelset_rotation(n: usize) -> Result<(f64, f64)> {
    let grid = Grid::new(RADIUS, n, 2)?;
    let rate = 1.0;
    let motion = PrescribedMotion::new(MotionPreset::Rotation { rate }, RADIUS)?;
    let (center, radius) = ([0.3, 0.0, 0.0], 0.15);
    let phi0 = LevelSetField::sphere(grid, center, radius);
    // the circle stays inside the rigid core, so one period returns it
    debug_assert!(norm(&center) + radius < motion.core_radius());
    let period = 2.0 * PI / rate;
    let steps = (period / grid.spacing()).ceil() as usize;
    let dt = period / steps as f64;
    let mut phi = phi0.clone();
    for k in 0..steps {
        phi = advect_levelset(&phi, &motion, k as f64 * dt, dt)?;
    }
    let band = 0.1;
    let exact = phi0.field();
    Ok(error_norms(phi.field(), exact, |c| exact.values()[c].abs() < band))
}

/// Runs `case` at each resolution (each double the previous, at least
/// three) and reports errors and successive observed orders.
pub fn convergence_study(case: ConvergenceCase, resolutions: &[usize]) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(Error::invalid("resolutions", "at least three resolutions are required"));
    }
    if resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::invalid("resolutions", "each resolution must double the previous"));
    }
    let errors: Vec<(f64, f64)> = resolutions
        .par_iter()
        .map(|&n| match case {
            ConvergenceCase::AdvectionRotation => advection_rotation(n),
            ConvergenceCase::DiffusionEigenmode => diffusion_eigenmode(n),
            ConvergenceCase::LevelsetRotation => levelset_rotation(n),
        })
        .collect::<Result<_>>()?;
    let errors_l1: Vec<f64> = errors.iter().map(|e| e.0).collect();
    let errors_l2: Vec<f64> = errors.iter().map(|e| e.1).collect();
    Ok(ConvergenceReport {
        case,
        resolutions: resolutions.to_vec(),
        orders_l1: successive_orders(&errors_l1),
        orders_l2: successive_orders(&errors_l2),
        errors_l1,
        errors_l2,
    })
}

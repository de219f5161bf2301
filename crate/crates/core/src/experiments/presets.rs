//! Initial data built from the `[initial]` table.

use crate::config::{InitialPreset, RunConfig};
use crate::error::Result;
use crate::grid::{norm, ScalarField};
use crate::levelset::LevelSetField;
use crate::state::State;

/// `(1 - r²/r0²)²` inside `r0`, zero outside.
pub fn bump(r: f64, r0: f64) -> f64 {
    if r >= r0 {
        0.0
    } else {
        let s = 1.0 - (r / r0).powi(2);
        s * s
    }
}

pub fn initial_state(cfg: &RunConfig) -> Result<State> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let init = &cfg.initial;
    match init.preset {
        InitialPreset::Zero => Ok(State::zeros(grid, LevelSetField::sphere(grid, [0.0; 3], init.tumor_radius))),
        InitialPreset::Rest => {
            // the whole box is tumor
            let phi = LevelSetField::new(ScalarField::filled(grid, -4.0 * grid.radius()));
            let mut s = State::zeros(grid, phi);
            s.p = ScalarField::filled(grid, init.amplitudes[0]);
            s.q = ScalarField::filled(grid, init.amplitudes[1]);
            s.d = ScalarField::filled(grid, init.amplitudes[2]);
            Ok(s)
        }
        InitialPreset::Tumor => {
            let phi = LevelSetField::sphere(grid, [0.0; 3], init.tumor_radius);
            let b = ScalarField::from_fn(grid, |x| bump(norm(&x), init.support_radius));
            let mut s = State::zeros(grid, phi);
            let [a_p, a_q, a_d] = init.amplitudes;
            s.p = b.map(|v| a_p * v);
            s.q = b.map(|v| a_q * v);
            s.d = b.map(|v| a_d * v);
            let c0 = init.nutrient_fraction * cfg.rates.c_bar;
            s.c = b.map(|v| c0 * v);
            Ok(s)
        }
    }
}

//! The time loop: level set, species, nutrient, momentum, in that order,
//! all reading the start-of-step velocity.

use crate::config::RunConfig;
use crate::diagnostics::{mass_budget_residual, record, DiagnosticsRecord, StepResiduals};
use crate::error::{Error, Result};
use crate::grid::integrate;
use crate::levelset::{advect_levelset, reinitialize};
use crate::momentum::step_momentum;
use crate::nutrient::{check_max_principle, nutrient_budget_residual, step_nutrient};
use crate::state::State;
use crate::transport::{cfl_timestep, max_positive_dt, step_species};

use super::presets::initial_state;

/// Band (in cells) and gradient floor for the level-set regularity check.
const BAND_CELLS: f64 = 3.0;
const BAND_MIN_GRADIENT: f64 = 1e-2;
/// Reinitialization sweeps when enabled.
const REINIT_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub energy_initial: f64,
    pub energy_max: f64,
    pub energy_final: f64,
    /// `Σ dt · slip_norm_sq(state_{n+1})`.
    pub slip_time_integral: f64,
    /// Largest leakage over time, per species `P, Q, D`.
    pub max_leakage: [f64; 3],
    /// Largest `leakage / mass` over time, per species.
    pub max_leakage_fraction: [f64; 3],
    /// Largest per-step mass budget residual relative to the species mass.
    pub max_mass_budget_relative: [f64; 3],
    pub max_nutrient_budget: f64,
    /// True once any species reaches a boundary cell of the box.
    pub support_touched_boundary: bool,
    pub kinetic_exterior_final: f64,
    pub kinetic_exterior_max: f64,
    pub c_max: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: State,
    pub summary: RunSummary,
}

fn touches_boundary(state: &State) -> bool {
    let grid = *state.grid();
    let n = grid.cells_per_axis();
    (0..grid.cell_count()).any(|c| {
        let ijk = grid.coords(c);
        let on_wall = ijk.iter().take(grid.dim()).any(|&i| i == 0 || i + 1 == n);
        on_wall && (state.p.values()[c] > 0.0 || state.q.values()[c] > 0.0 || state.d.values()[c] > 0.0)
    })
}

fn relative(residual: f64, mass: f64) -> f64 {
    if residual == 0.0 {
        0.0
    } else {
        residual / mass.max(f64::MIN_POSITIVE)
    }
}

/// Runs the configured simulation to `t_end`.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutput> {
    let state = initial_state(cfg)?;
    run_from(cfg, state)
}

/// Runs from a given initial state, which must live on the configured grid.
pub fn run_from(cfg: &RunConfig, mut state: State) -> Result<RunOutput> {
    cfg.validate()?;
    state.check_grids()?;
    state.check_finite()?;
    let grid = *state.grid();
    if grid != cfg.grid()? {
        return Err(Error::invalid("state", "initial state is not on the configured grid"));
    }
    let params = cfg.penalty_params();
    let phys = cfg.physics;
    let rates = cfg.rates;
    let motion = cfg.motion()?;
    let h = grid.spacing();
    let t_end = cfg.run.t_end;
    let c0_max = state.c.max();

    let first = record(&state, &params, &motion, &StepResiduals::default(), 0.0)?;
    let mut summary = RunSummary {
        energy_initial: first.energy_total,
        energy_max: first.energy_total,
        energy_final: first.energy_total,
        c_max: first.c_max,
        support_touched_boundary: touches_boundary(&state),
        kinetic_exterior_final: first.kinetic_exterior,
        kinetic_exterior_max: first.kinetic_exterior,
        ..RunSummary::default()
    };
    let track = |rec: &DiagnosticsRecord, summary: &mut RunSummary| {
        let leak = [rec.leakage_p, rec.leakage_q, rec.leakage_d];
        let mass = [rec.mass_p, rec.mass_q, rec.mass_d];
        for i in 0..3 {
            summary.max_leakage[i] = summary.max_leakage[i].max(leak[i]);
            summary.max_leakage_fraction[i] = summary.max_leakage_fraction[i].max(relative(leak[i], mass[i]));
        }
        summary.energy_max = summary.energy_max.max(rec.energy_total);
        summary.energy_final = rec.energy_total;
        summary.kinetic_exterior_final = rec.kinetic_exterior;
        summary.kinetic_exterior_max = summary.kinetic_exterior_max.max(rec.kinetic_exterior);
        summary.c_max = summary.c_max.max(rec.c_max);
    };
    track(&first, &mut summary);
    let mut records = vec![first];

    let mut slip_integral = 0.0;
    let mut step = 0usize;
    while state.t < t_end * (1.0 - 1e-12) {
        let t = state.t;
        let dt = cfl_timestep(&state.v, h, cfg.run.cfl)?
            .min(cfg.run.cfl * max_positive_dt(&state.v))
            .min(cfg.run.dt_max)
            .min(t_end - t);

        let mut phi = advect_levelset(&state.phi, &motion, t, dt)?;
        if cfg.run.reinit_every > 0 && (step + 1).is_multiple_of(cfg.run.reinit_every) {
            phi = reinitialize(&phi, REINIT_ITERATIONS);
        }
        let species = step_species(&state.p, &state.q, &state.d, &state.c, &state.v, dt, &rates)?;
        let c_new = step_nutrient(&state.c, &phi, phys.nu, &params, dt)?;

        let mut next = State {
            t: t + dt,
            p: species.p,
            q: species.q,
            d: species.d,
            c: c_new,
            v: state.v.clone(),
            m: state.m.clone(),
            phi,
        };
        let (m, v) = step_momentum(&state, &next, &phys, &params, &motion, dt)?;
        next.m = m;
        next.v = v;

        if let Err(e) = next.check_finite() {
            return Err(Error::Instability { t: next.t, reason: e.to_string() });
        }
        next.p.check_nonnegative("P")?;
        next.q.check_nonnegative("Q")?;
        next.d.check_nonnegative("D")?;
        if !check_max_principle(&next.c, c0_max, rates.c_bar) {
            return Err(Error::MaxPrincipleViolated {
                t: next.t,
                min: next.c.min(),
                max: next.c.max(),
                bound: c0_max.max(rates.c_bar),
            });
        }
        if !next.phi.band_is_regular(BAND_CELLS, BAND_MIN_GRADIENT) {
            return Err(Error::Instability {
                t: next.t,
                reason: "level-set gradient degenerated near the interface".into(),
            });
        }

        let nutrient = nutrient_budget_residual(&state.c, &next.c, &next.phi, phys.nu, &params, dt)?;
        let applied = &species.applied;
        let budgets = [
            mass_budget_residual(&state.p, &next.p, &applied.p, dt),
            mass_budget_residual(&state.q, &next.q, &applied.q, dt),
            mass_budget_residual(&state.d, &next.d, &applied.d, dt),
        ];
        let masses_old = [integrate(&state.p), integrate(&state.q), integrate(&state.d)];
        summary.support_touched_boundary |= touches_boundary(&next);
        for i in 0..3 {
            let rel = relative(budgets[i], masses_old[i]);
            summary.max_mass_budget_relative[i] = summary.max_mass_budget_relative[i].max(rel);
        }
        summary.max_nutrient_budget = summary.max_nutrient_budget.max(nutrient);

        let residuals = StepResiduals { dt, nutrient_budget: nutrient, mass_budget: budgets };
        let slip = crate::diagnostics::slip_norm_sq(&next.v, &motion, next.t, &next.phi, params.w)?;
        slip_integral += dt * slip;
        state = next;
        step += 1;

        let last = state.t >= t_end * (1.0 - 1e-12);
        let rec = record(&state, &params, &motion, &residuals, slip_integral)?;
        track(&rec, &mut summary);
        if last || step.is_multiple_of(cfg.run.record_every) {
            records.push(rec);
        }
    }
    summary.steps = step;
    summary.final_time = state.t;
    summary.slip_time_integral = slip_integral;
    Ok(RunOutput { records, final_state: state, summary })
}

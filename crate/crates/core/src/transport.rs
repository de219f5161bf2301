//! Conservative upwind transport of the cell densities with an exact
//! exponential source substep.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::kinetics::{check_inputs, RateConstants, Sources};

/// Speed floor keeping the CFL step finite for a fluid at rest.
pub const VELOCITY_FLOOR: f64 = 1e-12;

/// Slack on the positivity bound before a step is rejected.
const CFL_TOLERANCE: f64 = 1e-12;

/// Normal velocity on the `+` face of `c` along `axis`, and whether the face
/// lies on the boundary. Interior faces average the two adjacent cells;
/// boundary faces take the boundary cell's velocity.
#[inline]
fn face_velocity_plus(u: &[f64], c: usize, s: usize, at_wall: bool) -> f64 {
    if at_wall {
        u[c]
    } else {
        0.5 * (u[c] + u[c + s])
    }
}

/// Discrete `div(Z v)` with first-order upwind face values and zero
/// inflow from outside the box.
pub(crate) fn upwind_flux_divergence(z: &[f64], v: &VectorField) -> Vec<f64> {
    let grid = *v.grid();
    let n = grid.cells_per_axis();
    let h = grid.spacing();
    let mut div = vec![0.0; grid.cell_count()];
    for axis in 0..grid.dim() {
        let s = grid.stride(axis);
        let u = v.component(axis);
        for c in 0..grid.cell_count() {
            let i = grid.coords(c)[axis];
            // + face of c, shared with c + s
            let at_wall = i + 1 == n;
            let uf = face_velocity_plus(u, c, s, at_wall);
            let flux = if uf > 0.0 {
                uf * z[c]
            } else if at_wall {
                0.0
            } else {
                uf * z[c + s]
            };
            div[c] += flux / h;
            if !at_wall {
                div[c + s] -= flux / h;
            }
            // lower wall face
            if i == 0 {
                let uf = u[c];
                let flux = if uf < 0.0 { uf * z[c] } else { 0.0 };
                div[c] -= flux / h;
            }
        }
    }
    div
}

/// Largest step keeping every upwind update a convex combination, i.e. the
/// reciprocal of the largest total outflow rate of any cell.
pub fn max_positive_dt(v: &VectorField) -> f64 {
    let grid = *v.grid();
    let n = grid.cells_per_axis();
    let h = grid.spacing();
    let mut worst: f64 = 0.0;
    for c in 0..grid.cell_count() {
        let ijk = grid.coords(c);
        let mut out = 0.0;
        for (axis, &i) in ijk.iter().enumerate().take(grid.dim()) {
            let s = grid.stride(axis);
            let u = v.component(axis);
            let plus = face_velocity_plus(u, c, s, i + 1 == n);
            let minus = if i == 0 { u[c] } else { 0.5 * (u[c] + u[c - s]) };
            out += plus.max(0.0) + (-minus).max(0.0);
        }
        worst = worst.max(out / h);
    }
    if worst > 0.0 {
        1.0 / worst
    } else {
        f64::INFINITY
    }
}

pub(crate) fn check_cfl(v: &VectorField, dt: f64) -> Result<()> {
    let max_dt = max_positive_dt(v);
    if dt > max_dt * (1.0 + CFL_TOLERANCE) {
        return Err(Error::CflViolation { dt, max_dt });
    }
    Ok(())
}

/// One conservative first-order upwind step of `∂_t Z + div(Z v) = 0`.
pub fn upwind_advect(z: &ScalarField, v: &VectorField, dt: f64) -> Result<ScalarField> {
    check_cfl(v, dt)?;
    z.check_nonnegative("Z")?;
    Ok(advect_unchecked(z, v, dt))
}

fn advect_unchecked(z: &ScalarField, v: &VectorField, dt: f64) -> ScalarField {
    let div = upwind_flux_divergence(z.values(), v);
    let mut out = z.clone();
    for (o, d) in out.values_mut().iter_mut().zip(div) {
        *o -= dt * d;
    }
    out
}

/// `cfl · h / max(max_cells Σ_axes |v_axis|, floor)`.
pub fn cfl_timestep(v: &VectorField, h: f64, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::invalid("cfl", format!("must lie in (0, 1], got {cfl}")));
    }
    let grid = *v.grid();
    let speed = (0..grid.cell_count())
        .map(|c| (0..grid.dim()).map(|a| v.component(a)[c].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(cfl * h / speed.max(VELOCITY_FLOOR))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesUpdate {
    pub p: ScalarField,
    pub q: ScalarField,
    pub d: ScalarField,
    /// Effective sources realized by the exponential substep,
    /// `Z_adv (exp(F dt) - 1) / dt`, for the mass budgets.
    pub applied: Sources,
}

/// Advects `P, Q, D` with `v`, then integrates `dZ/dt = F_Z(C) Z` exactly
/// per cell with the nutrient frozen at the start of the step.
pub fn step_species(
    p: &ScalarField,
    q: &ScalarField,
    d: &ScalarField,
    c: &ScalarField,
    v: &VectorField,
    dt: f64,
    k: &RateConstants,
) -> Result<SpeciesUpdate> {
    check_inputs(p, q, d, c, k)?;
    check_cfl(v, dt)?;
    let (pa, qa, da) = (advect_unchecked(p, v, dt), advect_unchecked(q, v, dt), advect_unchecked(d, v, dt));

    let react = |z: &ScalarField, rate: &dyn Fn(usize) -> f64| {
        let mut out = z.clone();
        let mut applied = ScalarField::zeros(*z.grid());
        for (i, (o, a)) in out.values_mut().iter_mut().zip(applied.values_mut()).enumerate() {
            let growth = (rate(i) * dt).exp_m1();
            let gained = *o * growth;
            *a = gained / dt;
            *o += gained;
        }
        (out, applied)
    };
    let cv = c.values();
    let (p1, gp) = react(&pa, &|i| k.rate_p(cv[i]));
    let (q1, gq) = react(&qa, &|i| k.rate_q(cv[i]));
    let (d1, gd) = react(&da, &|_| k.rate_d());
    Ok(SpeciesUpdate {
        p: p1,
        q: q1,
        d: d1,
        applied: Sources { p: gp, q: gq, d: gd },
    })
}

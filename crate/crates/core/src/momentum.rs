//! Penalized Forchheimer momentum balance
//! `∂_t(ρv) + div(ρv⊗v) + ∇σ_δ = div(μ_ω ∇v) - (μ_ω/K) v + penalty`.
//!
//! Convection and the pressure gradient are explicit. Viscosity is
//! point-implicit in the cell's own velocity, and drag plus the interface
//! penalty are solved implicitly per cell in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dot, gradient, harmonic_mean, laplacian_diagonal, ScalarField, VectorField};
use crate::levelset::{interface_normal, surface_delta, PrescribedMotion};
use crate::penalty::{coefficient_profile, pressure_sigma_delta, PenaltyParams};
use crate::state::State;
use crate::transport::upwind_flux_divergence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalParams {
    /// Viscosity.
    pub mu: f64,
    /// Nutrient diffusivity.
    pub nu: f64,
    /// Permeability.
    pub k_perm: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [("mu", self.mu), ("nu", self.nu), ("k_perm", self.k_perm)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Upwind `div(m_i v)` for each momentum component.
pub(crate) fn momentum_flux_div(m: &VectorField, v: &VectorField) -> VectorField {
    let grid = *v.grid();
    let comps = (0..grid.dim())
        .map(|a| upwind_flux_divergence(m.component(a), v))
        .collect();
    VectorField::from_components(grid, comps).expect("component sizes match the grid")
}

/// Upwind finite-volume `div(ρ v⊗v)`, componentwise.
pub fn convective_flux_div(rho: &ScalarField, v: &VectorField) -> Result<VectorField> {
    rho.check_nonnegative("rho")?;
    let grid = *v.grid();
    let comps = (0..grid.dim())
        .map(|a| v.component(a).iter().zip(rho.values()).map(|(u, r)| u * r).collect())
        .collect();
    let m = VectorField::from_components(grid, comps)?;
    Ok(momentum_flux_div(&m, v))
}

/// `v = m / max(ρ, floor)`, with zero velocity in vacuum cells carrying
/// negligible momentum.
pub fn recover_velocity(m: &VectorField, rho: &ScalarField, rho_floor: f64) -> Result<VectorField> {
    if !(rho_floor > 0.0) {
        return Err(Error::invalid("rho_floor", format!("must be positive, got {rho_floor}")));
    }
    let grid = *m.grid();
    let mut v = VectorField::zeros(grid);
    for c in 0..grid.cell_count() {
        let r = rho.values()[c];
        let mc = m.at(c);
        let mag = mc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r < rho_floor * rho_floor && mag >= rho_floor {
            return Err(Error::MomentumInVacuum {
                cell: c,
                momentum: mag,
                density: r,
            });
        }
        if r < rho_floor && mag < rho_floor {
            continue;
        }
        let inv = 1.0 / r.max(rho_floor);
        v.set(c, [mc[0] * inv, mc[1] * inv, mc[2] * inv]);
    }
    Ok(v)
}

/// Advances momentum from `old` to the time of `next`, whose species and
/// level set are already updated. Returns `(m', v')`.
///
/// Cells below the density floor keep no momentum; their velocity is the
/// drag/penalty balance `c V_n / (b + c)` along the interface normal, which
/// vanishes away from the interface band.
pub fn step_momentum(
    old: &State,
    next: &State,
    phys: &PhysicalParams,
    params: &PenaltyParams,
    motion: &PrescribedMotion,
    dt: f64,
) -> Result<(VectorField, VectorField)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    old.check_grids()?;
    next.check_grids()?;
    crate::transport::check_cfl(&old.v, dt)?;
    let grid = *old.grid();
    let dim = grid.dim();
    let n = grid.cells_per_axis();
    let h2 = grid.spacing() * grid.spacing();

    let rho = next.density();
    let sigma = pressure_sigma_delta(&next.p, &next.q, &next.d, params.m, params.delta, params.beta)?;
    let grad_sigma = gradient(&sigma);
    let conv = momentum_flux_div(&old.m, &old.v);

    let mu_w = coefficient_profile(&next.phi, phys.mu, params.omega, params.w)?;
    let diag = laplacian_diagonal(&mu_w);
    let normal = interface_normal(&next.phi);
    let weight = surface_delta(&next.phi, params.w)?;
    let t1 = old.t + dt;

    let mut m_new = VectorField::zeros(grid);
    let mut v_new = VectorField::zeros(grid);
    for c in 0..grid.cell_count() {
        let r = rho.values()[c];
        let vacuum = r < params.rho_floor;
        let inertia = if vacuum { 0.0 } else { r / dt };
        let ijk = grid.coords(c);

        // viscous point-implicit predictor
        let mut vs = [0.0; 3];
        let dg = diag.values()[c];
        for (a, out) in vs.iter_mut().enumerate().take(dim) {
            let m_star = old.m.component(a)[c] - dt * (conv.component(a)[c] + grad_sigma.component(a)[c]);
            let mut rhs = if vacuum { 0.0 } else { m_star / dt };
            let u = old.v.component(a);
            for (axis, &i) in ijk.iter().enumerate().take(dim) {
                let s = grid.stride(axis);
                let mc = mu_w.values()[c];
                if i + 1 < n {
                    rhs += harmonic_mean(mc, mu_w.values()[c + s]) * u[c + s] / h2;
                }
                if i > 0 {
                    rhs += harmonic_mean(mc, mu_w.values()[c - s]) * u[c - s] / h2;
                }
            }
            *out = rhs / (inertia + dg);
        }

        // drag and normal penalty, implicit per cell
        let b = mu_w.values()[c] / phys.k_perm;
        let pen = weight.values()[c] / params.epsilon;
        let nn = normal.at(c);
        let vv = motion.velocity(t1, &grid.center(c));
        let vs_n = dot(&vs, &nn);
        let vn_target = dot(&vv, &nn);
        let scale_t = if inertia + b > 0.0 { inertia / (inertia + b) } else { 0.0 };
        let vn_new = if inertia + b + pen > 0.0 {
            (inertia * vs_n + pen * vn_target) / (inertia + b + pen)
        } else {
            0.0
        };
        let mut vc = [0.0; 3];
        for a in 0..dim {
            let tangential = vs[a] - vs_n * nn[a];
            vc[a] = scale_t * tangential + vn_new * nn[a];
        }
        v_new.set(c, vc);
        if !vacuum {
            m_new.set(c, [r * vc[0], r * vc[1], r * vc[2]]);
        }
    }
    m_new.check_finite("m")?;
    v_new.check_finite("v")?;
    Ok((m_new, v_new))
}

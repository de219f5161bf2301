//! Penalization machinery: degenerate viscosity/diffusion profiles, the
//! artificial pressure, and the normal-slip penalty force on the moving
//! interface.

use crate::error::{Error, Result};
use crate::grid::{dot, ScalarField, VectorField};
use crate::levelset::{inside_indicator, interface_normal, surface_delta, LevelSetField, PrescribedMotion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    /// Penalty strength: the interface force scales like `1/epsilon`.
    pub epsilon: f64,
    /// Exterior fraction of the viscosity and diffusion coefficients.
    pub omega: f64,
    /// Artificial-pressure weight.
    pub delta: f64,
    /// Artificial-pressure exponent.
    pub beta: f64,
    /// Pressure exponent.
    pub m: f64,
    /// Kernel half-width for the smoothed interface.
    pub w: f64,
    pub rho_floor: f64,
}

impl PenaltyParams {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.m > 1.5) || !self.m.is_finite() {
            return Err(format!("m > 3/2 required, got m = {}", self.m));
        }
        if !(self.beta >= 2.0) || !self.beta.is_finite() {
            return Err(format!("beta >= 2 required, got beta = {}", self.beta));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(format!("epsilon > 0 required, got {}", self.epsilon));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(format!("omega in (0, 1] required, got {}", self.omega));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(format!("delta >= 0 required, got {}", self.delta));
        }
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(format!("smoothing width must be positive, got {}", self.w));
        }
        if !(self.rho_floor > 0.0) || !self.rho_floor.is_finite() {
            return Err(format!("rho_floor > 0 required, got {}", self.rho_floor));
        }
        Ok(())
    }
}

/// `base·(ω + (1-ω)·H_w(-Φ))`: `base` inside the tumor, `ω·base` outside.
pub fn coefficient_profile(phi: &LevelSetField, base: f64, omega: f64, w: f64) -> Result<ScalarField> {
    if !(base > 0.0) {
        return Err(Error::invalid("base", format!("must be positive, got {base}")));
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::invalid("omega", format!("must lie in (0, 1], got {omega}")));
    }
    let inside = inside_indicator(phi, w)?;
    Ok(inside.map(|h| base * (omega + (1.0 - omega) * h)))
}

/// `σ_δ = P^m + Q^m + D^m + δ (P^β + Q^β + D^β)`.
pub fn pressure_sigma_delta(
    p: &ScalarField,
    q: &ScalarField,
    d: &ScalarField,
    m: f64,
    delta: f64,
    beta: f64,
) -> Result<ScalarField> {
    p.check_nonnegative("P")?;
    q.check_nonnegative("Q")?;
    d.check_nonnegative("D")?;
    let mut out = ScalarField::zeros(*p.grid());
    for (i, o) in out.values_mut().iter_mut().enumerate() {
        let z = [p.values()[i], q.values()[i], d.values()[i]];
        let main: f64 = z.iter().map(|v| v.powf(m)).sum();
        let artificial: f64 = if delta == 0.0 {
            0.0
        } else {
            z.iter().map(|v| v.powf(beta)).sum()
        };
        *o = main + delta * artificial;
    }
    Ok(out)
}

/// `-(1/ε) δ_w(Φ)|∇Φ| ((v - V)·n) n`, the volumetric form of the
/// normal-slip penalty. Its pairing with `v - V` is never positive.
pub fn penalty_force(
    v: &VectorField,
    motion: &PrescribedMotion,
    t: f64,
    phi: &LevelSetField,
    params: &PenaltyParams,
) -> Result<VectorField> {
    if !(params.epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    let grid = *phi.grid();
    let weight = surface_delta(phi, params.w)?;
    let normal = interface_normal(phi);
    let mut out = VectorField::zeros(grid);
    for c in 0..grid.cell_count() {
        let s = weight.values()[c];
        if s == 0.0 {
            continue;
        }
        let n = normal.at(c);
        let vv = motion.velocity(t, &grid.center(c));
        let vc = v.at(c);
        let rel = [vc[0] - vv[0], vc[1] - vv[1], vc[2] - vv[2]];
        let scale = -s / params.epsilon * dot(&rel, &n);
        out.set(c, [scale * n[0], scale * n[1], scale * n[2]]);
    }
    Ok(out)
}

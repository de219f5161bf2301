//! Per-step functionals: masses, energy, leakage into healthy tissue,
//! interface slip and budget residuals.

use crate::error::{Error, Result};
use crate::grid::{dot, integrate, ScalarField, VectorField};
use crate::levelset::{interface_normal, surface_delta, LevelSetField, PrescribedMotion};
use crate::penalty::PenaltyParams;
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Step that produced this record; zero for the initial record.
    pub dt: f64,
    pub mass_p: f64,
    pub mass_q: f64,
    pub mass_d: f64,
    pub mass_c: f64,
    pub energy_total: f64,
    pub c_max: f64,
    pub leakage_p: f64,
    pub leakage_q: f64,
    pub leakage_d: f64,
    pub leakage_c: f64,
    pub slip_norm_sq: f64,
    pub slip_time_integral: f64,
    /// `∫_{Φ>0} ρ|v|²`.
    pub kinetic_exterior: f64,
    pub nutrient_budget: f64,
    pub mass_budget_p: f64,
    pub mass_budget_q: f64,
    pub mass_budget_d: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 19] = [
        "t",
        "dt",
        "mass_P",
        "mass_Q",
        "mass_D",
        "mass_C",
        "energy_total",
        "c_max",
        "leakage_P",
        "leakage_Q",
        "leakage_D",
        "leakage_C",
        "slip_norm_sq",
        "slip_time_integral",
        "kinetic_exterior",
        "nutrient_budget",
        "mass_budget_P",
        "mass_budget_Q",
        "mass_budget_D",
    ];

    /// Values in [`Self::COLUMNS`] order.
    pub fn values(&self) -> [f64; 19] {
        [
            self.t,
            self.dt,
            self.mass_p,
            self.mass_q,
            self.mass_d,
            self.mass_c,
            self.energy_total,
            self.c_max,
            self.leakage_p,
            self.leakage_q,
            self.leakage_d,
            self.leakage_c,
            self.slip_norm_sq,
            self.slip_time_integral,
            self.kinetic_exterior,
            self.nutrient_budget,
            self.mass_budget_p,
            self.mass_budget_q,
            self.mass_budget_d,
        ]
    }

    pub fn from_values(v: [f64; 19]) -> Self {
        Self {
            t: v[0],
            dt: v[1],
            mass_p: v[2],
            mass_q: v[3],
            mass_d: v[4],
            mass_c: v[5],
            energy_total: v[6],
            c_max: v[7],
            leakage_p: v[8],
            leakage_q: v[9],
            leakage_d: v[10],
            leakage_c: v[11],
            slip_norm_sq: v[12],
            slip_time_integral: v[13],
            kinetic_exterior: v[14],
            nutrient_budget: v[15],
            mass_budget_p: v[16],
            mass_budget_q: v[17],
            mass_budget_d: v[18],
        }
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage_p.max(self.leakage_q).max(self.leakage_d)
    }
}

/// `∫ [(P^m+Q^m+D^m)/(m-1) + δ/(β-1) (P^β+Q^β+D^β) + ½ρ|v|²]`.
pub fn total_energy(state: &State, params: &PenaltyParams) -> Result<f64> {
    state.p.check_nonnegative("P")?;
    state.q.check_nonnegative("Q")?;
    state.d.check_nonnegative("D")?;
    let (m, beta, delta) = (params.m, params.beta, params.delta);
    let grid = *state.grid();
    let mut acc = ScalarField::zeros(grid);
    for (c, o) in acc.values_mut().iter_mut().enumerate() {
        let z = [state.p.values()[c], state.q.values()[c], state.d.values()[c]];
        let rho: f64 = z.iter().sum();
        let pressure: f64 = z.iter().map(|x| x.powf(m)).sum::<f64>() / (m - 1.0);
        let artificial = if delta == 0.0 {
            0.0
        } else {
            delta / (beta - 1.0) * z.iter().map(|x| x.powf(beta)).sum::<f64>()
        };
        let v = state.v.at(c);
        *o = pressure + artificial + 0.5 * rho * dot(&v, &v);
    }
    Ok(integrate(&acc))
}

/// `∫ Z · clamp(Φ/w, 0, 1)`: mass in the healthy tissue, with the weight
/// ramping from zero on the interface to one at distance `w`.
pub fn leakage(z: &ScalarField, phi: &LevelSetField, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::invalid("w", format!("must be positive, got {w}")));
    }
    z.check_nonnegative("Z")?;
    let weighted = z.zip_map(phi.field(), |z, p| z * (p / w).clamp(0.0, 1.0));
    Ok(integrate(&weighted))
}

/// `∫ ((v - V)·n)² δ_w(Φ)|∇Φ|`, the discrete `∫_Γ |(v - V)·n|² dS`.
pub fn slip_norm_sq(v: &VectorField, motion: &PrescribedMotion, t: f64, phi: &LevelSetField, w: f64) -> Result<f64> {
    let grid = *phi.grid();
    let weight = surface_delta(phi, w)?;
    let normal = interface_normal(phi);
    let mut acc = 0.0;
    for c in 0..grid.cell_count() {
        let s = weight.values()[c];
        if s == 0.0 {
            continue;
        }
        let vv = motion.velocity(t, &grid.center(c));
        let vc = v.at(c);
        let rel = [vc[0] - vv[0], vc[1] - vv[1], vc[2] - vv[2]];
        acc += dot(&rel, &normal.at(c)).powi(2) * s;
    }
    Ok(acc * grid.cell_volume())
}

/// `|∫Z_new - ∫Z_old - dt ∫G_applied|`.
pub fn mass_budget_residual(z_old: &ScalarField, z_new: &ScalarField, applied: &ScalarField, dt: f64) -> f64 {
    (integrate(z_new) - integrate(z_old) - dt * integrate(applied)).abs()
}

/// `∫_{Φ>0} ρ|v|²`.
pub fn kinetic_exterior(state: &State) -> f64 {
    let rho = state.density();
    let grid = *state.grid();
    let sum: f64 = (0..grid.cell_count())
        .filter(|&c| state.phi.field().values()[c] > 0.0)
        .map(|c| {
            let v = state.v.at(c);
            rho.values()[c] * dot(&v, &v)
        })
        .sum();
    sum * grid.cell_volume()
}

/// Residuals of the step that produced a state; all zero at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepResiduals {
    pub dt: f64,
    pub nutrient_budget: f64,
    pub mass_budget: [f64; 3],
}

pub fn record(
    state: &State,
    params: &PenaltyParams,
    motion: &PrescribedMotion,
    step: &StepResiduals,
    slip_time_integral: f64,
) -> Result<DiagnosticsRecord> {
    let w = params.w;
    Ok(DiagnosticsRecord {
        t: state.t,
        dt: step.dt,
        mass_p: integrate(&state.p),
        mass_q: integrate(&state.q),
        mass_d: integrate(&state.d),
        mass_c: integrate(&state.c),
        energy_total: total_energy(state, params)?,
        c_max: state.c.max(),
        leakage_p: leakage(&state.p, &state.phi, w)?,
        leakage_q: leakage(&state.q, &state.phi, w)?,
        leakage_d: leakage(&state.d, &state.phi, w)?,
        leakage_c: leakage(&state.c, &state.phi, w)?,
        slip_norm_sq: slip_norm_sq(&state.v, motion, state.t, &state.phi, w)?,
        slip_time_integral,
        kinetic_exterior: kinetic_exterior(state),
        nutrient_budget: step.nutrient_budget,
        mass_budget_p: step.mass_budget[0],
        mass_budget_q: step.mass_budget[1],
        mass_budget_d: step.mass_budget[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::levelset::MotionPreset;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(w: f64) -> PenaltyParams {
        PenaltyParams {
            epsilon: 0.01,
            omega: 0.1,
            delta: 0.0,
            beta: 2.0,
            m: 2.0,
            w,
            rho_floor: 1e-10,
        }
    }

    fn zero_state(n: usize) -> State {
        let g = Grid::new(1.0, n, 2).unwrap();
        State::zeros(g, LevelSetField::sphere(g, [0.0; 3], 0.5))
    }

    #[test]
    fn energy_examples() {
        let mut s = zero_state(8);
        let pp = params(1.0);
        assert_eq!(total_energy(&s, &pp).unwrap(), 0.0);
        s.p.values_mut()[10] = 1.0;
        assert_relative_eq!(total_energy(&s, &pp).unwrap(), 0.25);

        let mut s = zero_state(8);
        let g = *s.grid();
        s.p = ScalarField::filled(g, 2.0);
        s.v = VectorField::from_fn(g, |_| [1.0, 0.0, 0.0]);
        // pressure contributes 4 per unit area, kinetic 1
        let e = total_energy(&s, &pp).unwrap();
        assert_relative_eq!(e, 16.0 * (4.0 + 1.0), max_relative = 1e-14);
        let mut s2 = s.clone();
        s2.v = VectorField::zeros(g);
        assert_relative_eq!(e - total_energy(&s2, &pp).unwrap(), 16.0, max_relative = 1e-14);
    }

    #[test]
    fn leakage_examples() {
        let g = Grid::new(1.0, 32, 2).unwrap();
        let w = 2.0 * g.spacing();
        let phi = LevelSetField::sphere(g, [0.0; 3], 0.8);
        let inner = ScalarField::from_fn(g, |x| if x[0].hypot(x[1]) < 0.8 - w { 1.0 } else { 0.0 });
        assert_eq!(leakage(&inner, &phi, w).unwrap(), 0.0);
        let far = LevelSetField::new(ScalarField::filled(g, 10.0));
        let ones = ScalarField::filled(g, 1.0);
        assert_eq!(leakage(&ones, &far, w).unwrap(), integrate(&ones));
    }

    #[test]
    fn slip_examples() {
        let g = Grid::new(1.0, 128, 2).unwrap();
        let w = 2.0 * g.spacing();
        let phi = LevelSetField::sphere(g, [0.0; 3], 0.5);
        let motion = PrescribedMotion::new(MotionPreset::Expansion { rate: 0.2, support: 1.0 }, 1.0).unwrap();
        let v = motion.sample(&g, 0.0);
        assert_eq!(slip_norm_sq(&v, &motion, 0.0, &phi, w).unwrap(), 0.0);

        // (v - V)·n = 1 with V = 0
        let n = interface_normal(&phi);
        let s = slip_norm_sq(&n, &PrescribedMotion::none(), 0.0, &phi, w).unwrap();
        assert_relative_eq!(s, std::f64::consts::PI, max_relative = 0.05);
    }

    #[test]
    fn mass_budget_examples() {
        let g = Grid::new(1.0, 8, 2).unwrap();
        let z = ScalarField::zeros(g);
        assert_eq!(mass_budget_residual(&z, &z, &z, 0.1), 0.0);
    }

    #[test]
    fn zero_record() {
        let s = zero_state(8);
        let r = record(&s, &params(1.0), &PrescribedMotion::none(), &StepResiduals::default(), 0.0).unwrap();
        assert_eq!(r, DiagnosticsRecord::default());
        assert_eq!(DiagnosticsRecord::from_values(r.values()), r);
    }

    proptest! {
        #[test]
        fn slip_ignores_tangential_fields(vals in prop::collection::vec(-2.0..2.0f64, 512), scale in prop::collection::vec(-3.0..3.0f64, 256)) {
            let g = Grid::new(1.0, 16, 2).unwrap();
            let w = 2.0 * g.spacing();
            let phi = LevelSetField::sphere(g, [0.1, 0.0, 0.0], 0.7);
            let motion = PrescribedMotion::new(MotionPreset::Rotation { rate: 0.5 }, 1.0).unwrap();
            let v = VectorField::from_components(g, vec![vals[..256].to_vec(), vals[256..].to_vec()]).unwrap();
            let n = interface_normal(&phi);
            let mut vt = v.clone();
            for (c, s) in scale.iter().enumerate() {
                let nc = n.at(c);
                let base = v.at(c);
                vt.set(c, [base[0] - s * nc[1], base[1] + s * nc[0], 0.0]);
            }
            let a = slip_norm_sq(&v, &motion, 0.0, &phi, w).unwrap();
            let b = slip_norm_sq(&vt, &motion, 0.0, &phi, w).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn energy_is_positive_off_zero(p in 0.0..3.0f64, q in 0.0..3.0f64, cell in 0usize..64) {
            let mut s = zero_state(8);
            s.p.values_mut()[cell] = p;
            s.q.values_mut()[cell] = q;
            let e = total_energy(&s, &PenaltyParams { delta: 0.1, ..params(1.0) }).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert_eq!(e == 0.0, p == 0.0 && q == 0.0);
        }
    }
}

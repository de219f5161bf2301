//! Nutrient-driven phase-change kinetics of the three cell populations.
//!
//! ```text
//! G_P = (K_B C - K_Q (C̄ - C) - K_A (C̄ - C)) P
//! G_Q = -(K_P C + K_D (C̄ - C)) Q
//! G_D = -K_R D
//! ```
//!
//! Every source is linear in its own species with a coefficient affine in
//! the nutrient, which the transport splitting exploits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Relative slack allowed when checking `C ≤ C̄`.
const NUTRIENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConstants {
    pub k_b: f64,
    pub k_q: f64,
    pub k_p: f64,
    pub k_a: f64,
    pub k_d: f64,
    pub k_r: f64,
    /// Nutrient decay rate; the model fixes it to one.
    pub k_c: f64,
    pub c_bar: f64,
}

impl RateConstants {
    pub fn zero(c_bar: f64) -> Self {
        Self {
            k_b: 0.0,
            k_q: 0.0,
            k_p: 0.0,
            k_a: 0.0,
            k_d: 0.0,
            k_r: 0.0,
            k_c: 1.0,
            c_bar,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let rates = [
            ("k_b", self.k_b),
            ("k_q", self.k_q),
            ("k_p", self.k_p),
            ("k_a", self.k_a),
            ("k_d", self.k_d),
            ("k_r", self.k_r),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("rate {name} must be finite and nonnegative, got {v}"));
            }
        }
        if self.k_c != 1.0 {
            return Err(format!("k_c is fixed to 1, got {}", self.k_c));
        }
        if !(self.c_bar.is_finite() && self.c_bar > 0.0) {
            return Err(format!("c_bar must be positive, got {}", self.c_bar));
        }
        Ok(())
    }

    /// Growth coefficient `F_P(C)` with `G_P = F_P(C) P`.
    #[inline]
    pub fn rate_p(&self, c: f64) -> f64 {
        self.k_b * c - (self.k_q + self.k_a) * (self.c_bar - c)
    }

    /// `F_Q(C)` with `G_Q = F_Q(C) Q`.
    #[inline]
    pub fn rate_q(&self, c: f64) -> f64 {
        -(self.k_p * c + self.k_d * (self.c_bar - c))
    }

    /// `F_D` with `G_D = F_D D`.
    #[inline]
    pub fn rate_d(&self) -> f64 {
        -self.k_r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sources {
    pub p: ScalarField,
    pub q: ScalarField,
    pub d: ScalarField,
}

pub(crate) fn check_inputs(
    p: &ScalarField,
    q: &ScalarField,
    d: &ScalarField,
    c: &ScalarField,
    k: &RateConstants,
) -> Result<()> {
    p.check_nonnegative("P")?;
    q.check_nonnegative("Q")?;
    d.check_nonnegative("D")?;
    let upper = k.c_bar * (1.0 + NUTRIENT_TOLERANCE);
    if let Some(cell) = c.values().iter().position(|&v| !(v >= 0.0 && v <= upper)) {
        return Err(Error::NutrientOutOfRange {
            cell,
            value: c.values()[cell],
            c_bar: k.c_bar,
        });
    }
    Ok(())
}

pub fn source_terms(
    p: &ScalarField,
    q: &ScalarField,
    d: &ScalarField,
    c: &ScalarField,
    k: &RateConstants,
) -> Result<Sources> {
    check_inputs(p, q, d, c, k)?;
    Ok(Sources {
        p: p.zip_map(c, |p, c| k.rate_p(c) * p),
        q: q.zip_map(c, |q, c| k.rate_q(c) * q),
        d: d.map(|d| k.rate_d() * d),
    })
}

/// `ϱ = P + Q + D`.
pub fn total_density(p: &ScalarField, q: &ScalarField, d: &ScalarField) -> ScalarField {
    let mut out = p.zip_map(q, |a, b| a + b);
    for (o, &dv) in out.values_mut().iter_mut().zip(d.values()) {
        *o += dv;
    }
    out
}

/// Net source of the total density in expanded form:
/// `(K_A+K_B+K_Q) C P - (K_A+K_Q) C̄ P - K_D C̄ Q + (K_D-K_P) C Q - K_R D`.
pub fn total_source_expanded(
    p: &ScalarField,
    q: &ScalarField,
    d: &ScalarField,
    c: &ScalarField,
    k: &RateConstants,
) -> Result<ScalarField> {
    check_inputs(p, q, d, c, k)?;
    let mut out = ScalarField::zeros(*p.grid());
    for (i, o) in out.values_mut().iter_mut().enumerate() {
        let (pv, qv, dv, cv) = (p.values()[i], q.values()[i], d.values()[i], c.values()[i]);
        *o = (k.k_a + k.k_b + k.k_q) * cv * pv - (k.k_a + k.k_q) * k.c_bar * pv
            - k.k_d * k.c_bar * qv
            + (k.k_d - k.k_p) * cv * qv
            - k.k_r * dv;
    }
    Ok(out)
}

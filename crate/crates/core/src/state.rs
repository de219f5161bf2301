//! All evolving fields at one time level.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::kinetics::total_density;
use crate::levelset::LevelSetField;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub p: ScalarField,
    pub q: ScalarField,
    pub d: ScalarField,
    pub c: ScalarField,
    pub v: VectorField,
    /// Momentum `ρ v`.
    pub m: VectorField,
    pub phi: LevelSetField,
}

impl State {
    pub fn zeros(grid: Grid, phi: LevelSetField) -> Self {
        Self {
            t: 0.0,
            p: ScalarField::zeros(grid),
            q: ScalarField::zeros(grid),
            d: ScalarField::zeros(grid),
            c: ScalarField::zeros(grid),
            v: VectorField::zeros(grid),
            m: VectorField::zeros(grid),
            phi,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.p.grid()
    }

    pub fn density(&self) -> ScalarField {
        total_density(&self.p, &self.q, &self.d)
    }

    /// Fails on the first non-finite value in any field.
    pub fn check_finite(&self) -> Result<()> {
        self.p.check_finite("P")?;
        self.q.check_finite("Q")?;
        self.d.check_finite("D")?;
        self.c.check_finite("C")?;
        self.phi.field().check_finite("phi")?;
        self.v.check_finite("v")?;
        self.m.check_finite("m")?;
        Ok(())
    }

    pub(crate) fn check_grids(&self) -> Result<()> {
        let g = self.grid();
        let fields = [
            self.q.grid(),
            self.d.grid(),
            self.c.grid(),
            self.v.grid(),
            self.m.grid(),
            self.phi.grid(),
        ];
        for other in fields {
            if other != g {
                return Err(Error::SizeMismatch {
                    expected: g.cell_count(),
                    actual: other.cell_count(),
                });
            }
        }
        Ok(())
    }
}

//! Uniform Cartesian grid over the reference box `[-2R, 2R]^d` and the
//! finite-volume stencils shared by every solver.
//!
//! All fields are cell-centered. Cell `(i, j, k)` has center
//! `x_a = -2R + (i_a + 1/2) h` on each axis and flat index
//! `i + N (j + N k)` (x fastest).

use crate::error::{Error, Result};

/// Minimum number of cells per axis.
pub const MIN_CELLS: usize = 8;

/// A point in space; the third component is zero for `d = 2`.
pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    radius: f64,
    h: f64,
}

impl Grid {
    /// Grid covering `[-2R, 2R]^d` with `n` cells per axis.
    pub fn new(radius: f64, n: usize, dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidDimension(dim));
        }
        if n < MIN_CELLS {
            return Err(Error::InvalidResolution(n));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("R", format!("must be positive, got {radius}")));
        }
        Ok(Self {
            dim,
            n,
            radius,
            h: 4.0 * radius / n as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    /// The reference radius `R`; the box extends to `±2R`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn half_width(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cell_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Flat-index stride along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        let i = idx % n;
        let j = (idx / n) % n;
        let k = if self.dim == 3 { idx / (n * n) } else { 0 };
        [i, j, k]
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.n * (ijk[1] + self.n * ijk[2])
    }

    /// Cell-center coordinate along one axis.
    #[inline]
    pub fn axis_center(&self, i: usize) -> f64 {
        -2.0 * self.radius + (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn center(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.axis_center(c[a]);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::filled(grid, 0.0)
    }

    pub fn filled(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.cell_count()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::SizeMismatch {
                expected: grid.cell_count(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.cell_count()).map(|c| f(grid.center(c))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the first non-finite value, if any.
    pub fn first_nonfinite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    pub fn check_finite(&self, field: &'static str) -> Result<()> {
        match self.first_nonfinite() {
            Some(cell) => Err(Error::NonfiniteField { field, cell }),
            None => Ok(()),
        }
    }

    pub fn check_nonnegative(&self, field: &'static str) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(cell) => Err(Error::NegativeDensity {
                field,
                cell,
                value: self.values[cell],
            }),
            None => Ok(()),
        }
    }
}

/// `d` components per cell, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.cell_count()]; grid.dim()],
        }
    }

    pub fn from_components(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(Error::SizeMismatch {
                expected: grid.dim(),
                actual: comps.len(),
            });
        }
        for c in &comps {
            if c.len() != grid.cell_count() {
                return Err(Error::SizeMismatch {
                    expected: grid.cell_count(),
                    actual: c.len(),
                });
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> Point) -> Self {
        let mut out = Self::zeros(grid);
        for c in 0..grid.cell_count() {
            let v = f(grid.center(c));
            for (comp, &x) in out.comps.iter_mut().zip(&v) {
                comp[c] = x;
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    #[inline]
    pub fn at(&self, cell: usize) -> Point {
        let mut v = [0.0; 3];
        for (a, va) in v.iter_mut().enumerate().take(self.grid.dim()) {
            *va = self.comps[a][cell];
        }
        v
    }

    #[inline]
    pub fn set(&mut self, cell: usize, v: Point) {
        for (comp, &x) in self.comps.iter_mut().zip(&v) {
            comp[cell] = x;
        }
    }

    /// Cellwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for (c, m) in out.values_mut().iter_mut().enumerate() {
            *m = self.comps.iter().map(|comp| comp[c] * comp[c]).sum::<f64>().sqrt();
        }
        out
    }

    pub fn check_finite(&self, field: &'static str) -> Result<()> {
        for comp in &self.comps {
            if let Some(cell) = comp.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonfiniteField { field, cell });
            }
        }
        Ok(())
    }
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

/// Discrete `∫_B f dx = Σ f h^d`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_volume()
}

/// Centered differences in the interior, one-sided first order on the
/// outermost cell layer.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = f.grid;
    let n = g.cells_per_axis();
    let h = g.spacing();
    let mut out = VectorField::zeros(g);
    for a in 0..g.dim() {
        let s = g.stride(a);
        let comp = &mut out.comps[a];
        for (c, o) in comp.iter_mut().enumerate() {
            let i = g.coords(c)[a];
            *o = if i == 0 {
                (f.values[c + s] - f.values[c]) / h
            } else if i == n - 1 {
                (f.values[c] - f.values[c - s]) / h
            } else {
                (f.values[c + s] - f.values[c - s]) / (2.0 * h)
            };
        }
    }
    out
}

/// Divergence with the same stencil policy as [`gradient`].
pub fn divergence(u: &VectorField) -> ScalarField {
    let g = u.grid;
    let n = g.cells_per_axis();
    let h = g.spacing();
    let mut out = ScalarField::zeros(g);
    for a in 0..g.dim() {
        let s = g.stride(a);
        let comp = &u.comps[a];
        for (c, o) in out.values.iter_mut().enumerate() {
            let i = g.coords(c)[a];
            *o += if i == 0 {
                (comp[c + s] - comp[c]) / h
            } else if i == n - 1 {
                (comp[c] - comp[c - s]) / h
            } else {
                (comp[c + s] - comp[c - s]) / (2.0 * h)
            };
        }
    }
    out
}

/// Face coefficient between two cells.
#[inline]
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s > 0.0 {
        2.0 * a * b / s
    } else {
        0.0
    }
}

pub(crate) fn check_coefficient(a: &ScalarField) -> Result<()> {
    match a.values.iter().position(|&v| v < 0.0 || v.is_nan()) {
        Some(cell) => Err(Error::NegativeCoefficient {
            cell,
            value: a.values[cell],
        }),
        None => Ok(()),
    }
}

/// Flux-form `div(a ∇f)` with homogeneous Dirichlet data on `∂B`.
///
/// Interior faces use the harmonic mean of the adjacent coefficients. At a
/// wall the ghost value is `-f`, so the face value is zero and the face
/// flux is `-2 a f / h` with `a` taken from the boundary cell.
pub fn variable_coeff_laplacian(f: &ScalarField, a: &ScalarField) -> Result<ScalarField> {
    check_coefficient(a)?;
    Ok(laplacian_unchecked(f, a))
}

pub(crate) fn laplacian_unchecked(f: &ScalarField, a: &ScalarField) -> ScalarField {
    let g = f.grid;
    let n = g.cells_per_axis();
    let h2 = g.spacing() * g.spacing();
    let fv = &f.values;
    let av = &a.values;
    let mut out = ScalarField::zeros(g);
    for (c, o) in out.values.iter_mut().enumerate() {
        let ijk = g.coords(c);
        let mut acc = 0.0;
        for (axis, &i) in ijk.iter().enumerate().take(g.dim()) {
            let s = g.stride(axis);
            acc += if i + 1 < n {
                harmonic_mean(av[c], av[c + s]) * (fv[c + s] - fv[c])
            } else {
                -2.0 * av[c] * fv[c]
            };
            acc -= if i > 0 {
                harmonic_mean(av[c], av[c - s]) * (fv[c] - fv[c - s])
            } else {
                2.0 * av[c] * fv[c]
            };
        }
        *o = acc / h2;
    }
    out
}

/// Diagonal weight of [`variable_coeff_laplacian`] at each cell, i.e. the
/// sum of face coefficients (wall faces counted twice) divided by `h²`.
pub(crate) fn laplacian_diagonal(a: &ScalarField) -> ScalarField {
    let g = a.grid;
    let n = g.cells_per_axis();
    let h2 = g.spacing() * g.spacing();
    let av = &a.values;
    let mut out = ScalarField::zeros(g);
    for (c, o) in out.values.iter_mut().enumerate() {
        let ijk = g.coords(c);
        let mut acc = 0.0;
        for (axis, &i) in ijk.iter().enumerate().take(g.dim()) {
            let s = g.stride(axis);
            acc += if i + 1 < n {
                harmonic_mean(av[c], av[c + s])
            } else {
                2.0 * av[c]
            };
            acc += if i > 0 {
                harmonic_mean(av[c], av[c - s])
            } else {
                2.0 * av[c]
            };
        }
        *o = acc / h2;
    }
    out
}

/// Discrete Dirichlet energy `∫ a |∇f|²`, defined through summation by
/// parts as `-∫ f div(a ∇f)` so it matches the Laplacian stencil exactly.
pub fn dirichlet_energy(f: &ScalarField, a: &ScalarField) -> Result<f64> {
    let lap = variable_coeff_laplacian(f, a)?;
    Ok(-integrate(&f.zip_map(&lap, |x, y| x * y)))
}

/// Multilinear interpolation at an arbitrary point. Points outside the
/// hull of cell centers are clamped onto it.
pub fn sample_linear(f: &ScalarField, p: &Point) -> f64 {
    let g = f.grid;
    let n = g.cells_per_axis();
    let h = g.spacing();
    let lo = -2.0 * g.radius();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..g.dim() {
        let s = ((p[a] - lo) / h - 0.5).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        base[a] = i;
        frac[a] = s - i as f64;
    }
    let corners = 1usize << g.dim();
    let mut acc = 0.0;
    for corner in 0..corners {
        let mut w = 1.0;
        let mut ijk = base;
        for a in 0..g.dim() {
            if corner >> a & 1 == 1 {
                ijk[a] += 1;
                w *= frac[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if w != 0.0 {
            acc += w * f.values[g.index(ijk)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn g2(n: usize) -> Grid {
        Grid::new(1.0, n, 2).unwrap()
    }

    #[test]
    fn make_grid_examples() {
        let g = g2(8);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.cell_count(), 64);
        let g3 = Grid::new(0.5, 16, 3).unwrap();
        assert_eq!(g3.spacing(), 0.125);
        assert_eq!(g3.cell_count(), 4096);
        assert!(matches!(Grid::new(1.0, 7, 2), Err(Error::InvalidResolution(7))));
        assert!(matches!(Grid::new(1.0, 8, 4), Err(Error::InvalidDimension(4))));
        assert!(Grid::new(-1.0, 8, 2).is_err());
    }

    #[test]
    fn spacing_times_cells_is_box_width() {
        for &(r, n) in &[(1.0, 8), (0.3, 37), (2.7, 129), (1e-3, 1000)] {
            let g = Grid::new(r, n, 2).unwrap();
            let w = g.spacing() * n as f64;
            assert!((w - 4.0 * r).abs() <= f64::EPSILON * 4.0 * r, "{r} {n}");
        }
    }

    #[test]
    fn centers_and_indices() {
        let g = Grid::new(1.0, 8, 3).unwrap();
        let c = g.index([1, 2, 3]);
        assert_eq!(g.coords(c), [1, 2, 3]);
        let x = g.center(c);
        assert_eq!(x, [-2.0 + 1.5 * 0.5, -2.0 + 2.5 * 0.5, -2.0 + 3.5 * 0.5]);
    }

    #[test]
    fn integrate_examples() {
        let g = g2(8);
        assert_eq!(integrate(&ScalarField::filled(g, 1.0)), 16.0);
        assert_eq!(integrate(&ScalarField::zeros(g)), 0.0);
        let mut f = ScalarField::zeros(g);
        f.values_mut()[17] = 1.0;
        assert_eq!(integrate(&f), 0.25);
    }

    #[test]
    fn gradient_of_linear_and_constant() {
        let g = g2(16);
        let f = ScalarField::from_fn(g, |x| x[0]);
        let grad = gradient(&f);
        for c in 0..g.cell_count() {
            assert_relative_eq!(grad.component(0)[c], 1.0, epsilon = 1e-12);
            assert_eq!(grad.component(1)[c], 0.0);
        }
        let grad = gradient(&ScalarField::filled(g, 3.0));
        assert!(grad.components().iter().flatten().all(|&v| v == 0.0));
    }

    fn interior_max_error(n: usize, f: impl Fn(Point) -> f64, exact: impl Fn(Point) -> f64, op: impl Fn(&ScalarField) -> ScalarField) -> f64 {
        let g = g2(n);
        let out = op(&ScalarField::from_fn(g, f));
        (0..g.cell_count())
            .filter(|&c| {
                let ij = g.coords(c);
                ij[0] > 0 && ij[1] > 0 && ij[0] < n - 1 && ij[1] < n - 1
            })
            .map(|c| (out.values()[c] - exact(g.center(c))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn gradient_of_square_converges_at_second_order() {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                interior_max_error(
                    n,
                    |x| x[0] * x[0] + (x[0] * 0.7).sin(),
                    |x| 2.0 * x[0] + 0.7 * (x[0] * 0.7).cos(),
                    |f| ScalarField::from_values(*f.grid(), gradient(f).component(0).to_vec()).unwrap(),
                )
            })
            .collect();
        // x² alone is exact under centered differences; the sine term carries the error
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn divergence_examples() {
        let g = g2(16);
        let u = VectorField::from_fn(g, |x| [x[0], x[1], 0.0]);
        let d = divergence(&u);
        for &v in d.values() {
            assert_relative_eq!(v, 2.0, epsilon = 1e-12);
        }
        let u = VectorField::from_fn(g, |_| [1.5, -2.0, 0.0]);
        assert!(divergence(&u).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_of_radial_field_observed_order() {
        // u = ∇((x² + y²)/2 + sin x sin y), div u = 2 - 2 sin x sin y
        let err = |n: usize| {
            let g = g2(n);
            let u = VectorField::from_fn(g, |x| {
                [x[0] + x[0].cos() * x[1].sin(), x[1] + x[0].sin() * x[1].cos(), 0.0]
            });
            let d = divergence(&u);
            (0..g.cell_count())
                .filter(|&c| {
                    let ij = g.coords(c);
                    ij[0] > 0 && ij[1] > 0 && ij[0] < n - 1 && ij[1] < n - 1
                })
                .map(|c| {
                    let x = g.center(c);
                    (d.values()[c] - (2.0 - 2.0 * x[0].sin() * x[1].sin())).abs()
                })
                .fold(0.0, f64::max)
        };
        let order = (err(32) / err(64)).log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn laplacian_of_linear_vanishes_in_interior() {
        let g = g2(16);
        let f = ScalarField::from_fn(g, |x| 2.0 * x[0] - 0.5 * x[1] + 1.0);
        let l = variable_coeff_laplacian(&f, &ScalarField::filled(g, 1.0)).unwrap();
        for c in 0..g.cell_count() {
            let ij = g.coords(c);
            if ij[0] > 0 && ij[1] > 0 && ij[0] < 15 && ij[1] < 15 {
                assert!(l.values()[c].abs() < 1e-11);
            }
        }
        let zero = variable_coeff_laplacian(&f, &ScalarField::zeros(g)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_rejects_negative_coefficient() {
        let g = g2(8);
        let mut a = ScalarField::filled(g, 1.0);
        a.values_mut()[5] = -0.1;
        assert!(matches!(
            variable_coeff_laplacian(&ScalarField::zeros(g), &a),
            Err(Error::NegativeCoefficient { cell: 5, .. })
        ));
    }

    #[test]
    fn laplacian_sine_eigenfunction() {
        // sin(π(x+2)/4) sin(π(y+2)/4) vanishes on ∂B; continuous eigenvalue 2(π/4)²
        let lambda = 2.0 * (PI / 4.0).powi(2);
        let err = |n: usize| {
            let g = g2(n);
            let f = ScalarField::from_fn(g, |x| (PI * (x[0] + 2.0) / 4.0).sin() * (PI * (x[1] + 2.0) / 4.0).sin());
            let l = variable_coeff_laplacian(&f, &ScalarField::filled(g, 1.0)).unwrap();
            l.values()
                .iter()
                .zip(f.values())
                .map(|(lv, fv)| (lv + lambda * fv).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn laplacian_divergence_theorem_for_interior_support() {
        let g = g2(32);
        let f = ScalarField::from_fn(g, |x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0));
        let a = ScalarField::from_fn(g, |x| 1.0 + 0.5 * x[0].sin());
        let l = variable_coeff_laplacian(&f, &a).unwrap();
        assert!(integrate(&l).abs() < 1e-11);
    }

    #[test]
    fn dirichlet_energy_is_nonnegative() {
        let g = g2(16);
        let f = ScalarField::from_fn(g, |x| x[0] * x[1] + 1.0);
        let a = ScalarField::from_fn(g, |x| 0.1 + x[0].abs());
        assert!(dirichlet_energy(&f, &a).unwrap() > 0.0);
    }

    #[test]
    fn sampling_reproduces_linear_fields() {
        let g = g2(16);
        let f = ScalarField::from_fn(g, |x| 3.0 * x[0] - x[1]);
        let p = [0.123, -0.77, 0.0];
        assert_relative_eq!(sample_linear(&f, &p), 3.0 * 0.123 + 0.77, epsilon = 1e-12);
        let c = g.center(37);
        assert_eq!(sample_linear(&f, &c), f.values()[37]);
    }
}

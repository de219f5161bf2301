//! Level-set tracking of the tumor boundary.
//!
//! `Φ < 0` inside the tumor and `Φ > 0` in the healthy tissue. The level set
//! is transported by a prescribed smooth motion `V` with a semi-Lagrangian
//! scheme, and provides the interface geometry (normal, smoothed delta and
//! Heaviside) used by the penalization.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{gradient, norm, sample_linear, Grid, Point, ScalarField, VectorField};

/// Gradient magnitude below which the normal is taken to be zero.
pub const GRADIENT_FLOOR: f64 = 1e-8;

/// Rigid part of a motion preset covers this fraction of its support radius.
pub const CORE_FRACTION: f64 = 0.6;

/// Smallest admissible kernel half-width in cell widths.
pub const MIN_WIDTH_CELLS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionPreset {
    Static,
    /// Rigid rotation about the origin (about the z-axis in 3-D).
    Rotation { rate: f64 },
    /// Radial expansion `V = rate·x`, tapered to zero at `support`.
    Expansion { rate: f64, support: f64 },
}

impl fmt::Display for MotionPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotionPreset::Static => write!(f, "static"),
            MotionPreset::Rotation { rate } => write!(f, "rotation({rate:?})"),
            MotionPreset::Expansion { rate, support } => {
                write!(f, "expansion({rate:?}, {support:?})")
            }
        }
    }
}

impl FromStr for MotionPreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "static" {
            return Ok(MotionPreset::Static);
        }
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| format!("unknown motion preset `{s}`"))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("missing `)` in motion preset `{s}`"))?;
        let args: Vec<f64> = args
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad number `{}` in motion preset: {e}", a.trim()))
            })
            .collect::<std::result::Result<_, _>>()?;
        match (name.trim(), args.as_slice()) {
            ("rotation", [rate]) => Ok(MotionPreset::Rotation { rate: *rate }),
            ("expansion", [rate, support]) => Ok(MotionPreset::Expansion {
                rate: *rate,
                support: *support,
            }),
            (n, a) => Err(format!(
                "motion preset `{n}` does not take {} argument(s)",
                a.len()
            )),
        }
    }
}

/// Closed-form smooth velocity `V(t, x)`, compactly supported in
/// `|x| ≤ support_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrescribedMotion {
    preset: MotionPreset,
    core_radius: f64,
    support_radius: f64,
}

/// C³ cutoff: 1 on `[0, r0]`, 0 beyond `r1`, septic smoothstep in between.
fn cutoff(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        1.0
    } else if r >= r1 {
        0.0
    } else {
        let u = (r - r0) / (r1 - r0);
        let s = u.powi(4) * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u.powi(3));
        1.0 - s
    }
}

impl PrescribedMotion {
    /// Builds the motion for a reference radius `R`. Rotation is supported
    /// in `|x| ≤ R`; expansion in `|x| ≤ support`, which must not exceed `R`.
    pub fn new(preset: MotionPreset, radius: f64) -> Result<Self> {
        let support_radius = match preset {
            MotionPreset::Static => 0.0,
            MotionPreset::Rotation { rate } => {
                if !rate.is_finite() {
                    return Err(Error::invalid("rotation rate", "must be finite"));
                }
                radius
            }
            MotionPreset::Expansion { rate, support } => {
                if !rate.is_finite() {
                    return Err(Error::invalid("expansion rate", "must be finite"));
                }
                if !(support > 0.0 && support <= radius) {
                    return Err(Error::invalid(
                        "expansion support",
                        format!("must lie in (0, R = {radius}], got {support}"),
                    ));
                }
                support
            }
        };
        Ok(Self {
            preset,
            core_radius: CORE_FRACTION * support_radius,
            support_radius,
        })
    }

    pub fn none() -> Self {
        Self {
            preset: MotionPreset::Static,
            core_radius: 0.0,
            support_radius: 0.0,
        }
    }

    pub fn preset(&self) -> MotionPreset {
        self.preset
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Radius up to which the motion is exactly rigid.
    pub fn core_radius(&self) -> f64 {
        self.core_radius
    }

    /// The preset is autonomous, so `t` only enters through the signature.
    pub fn velocity(&self, _t: f64, x: &Point) -> Point {
        let r = norm(x);
        match self.preset {
            MotionPreset::Static => [0.0; 3],
            MotionPreset::Rotation { rate } => {
                let s = rate * cutoff(r, self.core_radius, self.support_radius);
                [-s * x[1], s * x[0], 0.0]
            }
            MotionPreset::Expansion { rate, .. } => {
                let s = rate * cutoff(r, self.core_radius, self.support_radius);
                [s * x[0], s * x[1], s * x[2]]
            }
        }
    }

    /// Angular speed at radius `r` for the rotation preset, zero otherwise.
    pub fn angular_speed(&self, r: f64) -> f64 {
        match self.preset {
            MotionPreset::Rotation { rate } => {
                rate * cutoff(r, self.core_radius, self.support_radius)
            }
            _ => 0.0,
        }
    }

    /// `V(t, ·)` sampled at cell centers.
    pub fn sample(&self, grid: &Grid, t: f64) -> VectorField {
        VectorField::from_fn(*grid, |x| self.velocity(t, &x))
    }
}

/// Level-set function, negative in the tumor.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    phi: ScalarField,
}

impl LevelSetField {
    pub fn new(phi: ScalarField) -> Self {
        Self { phi }
    }

    /// Signed distance to the sphere `|x - center| = radius`.
    pub fn sphere(grid: Grid, center: Point, radius: f64) -> Self {
        Self::new(ScalarField::from_fn(grid, |x| {
            let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
            norm(&d) - radius
        }))
    }

    pub fn field(&self) -> &ScalarField {
        &self.phi
    }

    pub fn into_field(self) -> ScalarField {
        self.phi
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    /// Volume of `{Φ < 0}` counted cellwise.
    pub fn enclosed_volume(&self) -> f64 {
        let inside = self.phi.values().iter().filter(|&&v| v < 0.0).count();
        inside as f64 * self.grid().cell_volume()
    }

    /// True when `|∇Φ|` stays above `min_gradient` on every cell within
    /// `band_cells` cell widths of the zero level.
    pub fn band_is_regular(&self, band_cells: f64, min_gradient: f64) -> bool {
        let h = self.grid().spacing();
        let mag = gradient(&self.phi).magnitude();
        self.phi
            .values()
            .iter()
            .zip(mag.values())
            .all(|(&p, &g)| p.abs() > band_cells * h || g > min_gradient)
    }
}

/// Semi-Lagrangian transport `∂_t Φ + V·∇Φ = 0` over `[t, t + dt]`.
///
/// Each cell center is traced back along the characteristic with an
/// explicit midpoint step, and `Φ` is interpolated multilinearly at the
/// foot point.
pub fn advect_levelset(
    phi: &LevelSetField,
    motion: &PrescribedMotion,
    t: f64,
    dt: f64,
) -> Result<LevelSetField> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    let grid = *phi.grid();
    let src = phi.field();
    let mut out = ScalarField::zeros(grid);
    let t1 = t + dt;
    let tm = t + 0.5 * dt;
    for (c, o) in out.values_mut().iter_mut().enumerate() {
        let x = grid.center(c);
        let v1 = motion.velocity(t1, &x);
        if v1 == [0.0; 3] && motion.velocity(tm, &x) == [0.0; 3] {
            *o = src.values()[c];
            continue;
        }
        let mid = [
            x[0] - 0.5 * dt * v1[0],
            x[1] - 0.5 * dt * v1[1],
            x[2] - 0.5 * dt * v1[2],
        ];
        let vm = motion.velocity(tm, &mid);
        let foot = [x[0] - dt * vm[0], x[1] - dt * vm[1], x[2] - dt * vm[2]];
        *o = sample_linear(src, &foot);
    }
    Ok(LevelSetField::new(out))
}

/// Outward unit normal `∇Φ / max(|∇Φ|, floor)`.
pub fn interface_normal(phi: &LevelSetField) -> VectorField {
    let mut grad = gradient(phi.field());
    let mag = grad.magnitude();
    let dim = phi.grid().dim();
    for a in 0..dim {
        for (g, &m) in grad.component_mut(a).iter_mut().zip(mag.values()) {
            *g = if m < GRADIENT_FLOOR { 0.0 } else { *g / m };
        }
    }
    grad
}

/// Cosine kernel `(1 + cos(πs/w)) / (2w)` on `|s| ≤ w`; integrates to one.
#[inline]
pub fn smoothed_delta(s: f64, w: f64) -> f64 {
    if s.abs() > w {
        0.0
    } else {
        (1.0 + (PI * s / w).cos()) / (2.0 * w)
    }
}

/// Antiderivative of [`smoothed_delta`]: 0 below `-w`, 1 above `w`.
#[inline]
pub fn smoothed_heaviside(s: f64, w: f64) -> f64 {
    if s <= -w {
        0.0
    } else if s >= w {
        1.0
    } else {
        0.5 * (1.0 + s / w + (PI * s / w).sin() / PI)
    }
}

fn check_width(grid: &Grid, w: f64) -> Result<()> {
    let min = MIN_WIDTH_CELLS * grid.spacing();
    if !(w >= min * (1.0 - 1e-12)) {
        return Err(Error::WidthTooSmall { width: w, min });
    }
    Ok(())
}

/// Volumetric surface measure `δ_w(Φ)|∇Φ|`.
pub fn surface_delta(phi: &LevelSetField, w: f64) -> Result<ScalarField> {
    check_width(phi.grid(), w)?;
    let mag = gradient(phi.field()).magnitude();
    Ok(phi
        .field()
        .zip_map(&mag, |p, g| if p.abs() > w { 0.0 } else { smoothed_delta(p, w) * g }))
}

/// Smoothed characteristic function of the tumor, `H_w(-Φ)`.
pub fn inside_indicator(phi: &LevelSetField, w: f64) -> Result<ScalarField> {
    check_width(phi.grid(), w)?;
    Ok(phi.field().map(|p| smoothed_heaviside(-p, w)))
}

/// Smoothed characteristic function of the healthy tissue, `H_w(Φ)`.
pub fn outside_indicator(phi: &LevelSetField, w: f64) -> Result<ScalarField> {
    check_width(phi.grid(), w)?;
    Ok(phi.field().map(|p| smoothed_heaviside(p, w)))
}

/// Classical RK4 integration of `dX/dt = V(t, X)` from `t0` to `t1`.
pub fn flow_map(motion: &PrescribedMotion, x0: Point, t0: f64, t1: f64, steps: usize) -> Result<Point> {
    if steps == 0 {
        return Err(Error::invalid("steps", "at least one step is required"));
    }
    if !(t1 >= t0) {
        return Err(Error::invalid("t1", "must not precede t0"));
    }
    let dt = (t1 - t0) / steps as f64;
    let axpy = |x: &Point, a: f64, k: &Point| [x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2]];
    let mut x = x0;
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        let k1 = motion.velocity(t, &x);
        let k2 = motion.velocity(t + 0.5 * dt, &axpy(&x, 0.5 * dt, &k1));
        let k3 = motion.velocity(t + 0.5 * dt, &axpy(&x, 0.5 * dt, &k2));
        let k4 = motion.velocity(t + dt, &axpy(&x, dt, &k3));
        for a in 0..3 {
            x[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
    }
    Ok(x)
}

/// Fixed-point reinitialization toward a signed distance function.
///
/// Pseudo-time iteration of `∂_τ Φ + S(Φ₀)(|∇Φ| - 1) = 0` with a Godunov
/// upwind gradient and `Δτ = h/2`. Not used unless a run enables it.
pub fn reinitialize(phi: &LevelSetField, iterations: usize) -> LevelSetField {
    let grid = *phi.grid();
    let h = grid.spacing();
    let n = grid.cells_per_axis();
    let phi0 = phi.field().values().to_vec();
    let sign: Vec<f64> = phi0.iter().map(|&p| p / (p * p + h * h).sqrt()).collect();
    let mut cur = phi0.clone();
    let dtau = 0.5 * h;
    for _ in 0..iterations {
        let mut next = cur.clone();
        for c in 0..grid.cell_count() {
            let ijk = grid.coords(c);
            let mut g2 = 0.0;
            for (a, &i) in ijk.iter().enumerate().take(grid.dim()) {
                let s = grid.stride(a);
                let back = if i > 0 { (cur[c] - cur[c - s]) / h } else { 0.0 };
                let fwd = if i + 1 < n { (cur[c + s] - cur[c]) / h } else { 0.0 };
                g2 += if sign[c] > 0.0 {
                    back.max(0.0).powi(2).max(fwd.min(0.0).powi(2))
                } else {
                    back.min(0.0).powi(2).max(fwd.max(0.0).powi(2))
                };
            }
            next[c] = cur[c] - dtau * sign[c] * (g2.sqrt() - 1.0);
        }
        cur = next;
    }
    LevelSetField::new(ScalarField::from_values(grid, cur).expect("same grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Grid {
        Grid::new(1.0, n, 2).unwrap()
    }

    #[test]
    fn motion_preset_parsing() {
        assert_eq!("static".parse::<MotionPreset>().unwrap(), MotionPreset::Static);
        assert_eq!(
            "rotation(0.5)".parse::<MotionPreset>().unwrap(),
            MotionPreset::Rotation { rate: 0.5 }
        );
        assert_eq!(
            " expansion(0.1, 0.9) ".parse::<MotionPreset>().unwrap(),
            MotionPreset::Expansion { rate: 0.1, support: 0.9 }
        );
        assert!("expansion(0.1)".parse::<MotionPreset>().is_err());
        assert!("spin(1)".parse::<MotionPreset>().is_err());
        let p = MotionPreset::Expansion { rate: 0.1, support: 0.9 };
        assert_eq!(p.to_string().parse::<MotionPreset>().unwrap(), p);
    }

    #[test]
    fn motion_support_is_respected() {
        let rot = PrescribedMotion::new(MotionPreset::Rotation { rate: 2.0 }, 1.0).unwrap();
        assert_eq!(rot.velocity(0.0, &[1.01, 0.0, 0.0]), [0.0; 3]);
        assert_eq!(rot.velocity(0.0, &[0.3, 0.0, 0.0]), [0.0, 0.6, 0.0]);
        let exp = PrescribedMotion::new(MotionPreset::Expansion { rate: 0.1, support: 0.9 }, 1.0).unwrap();
        assert_eq!(exp.velocity(0.0, &[0.0, 0.95, 0.0]), [0.0; 3]);
        assert!(PrescribedMotion::new(MotionPreset::Expansion { rate: 0.1, support: 1.5 }, 1.0).is_err());
    }

    #[test]
    fn zero_velocity_is_identity() {
        let g = grid(32);
        let phi = LevelSetField::sphere(g, [0.2, -0.1, 0.0], 0.5);
        let out = advect_levelset(&phi, &PrescribedMotion::none(), 0.0, 10.0).unwrap();
        assert_eq!(out, phi);
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let g = grid(16);
        let phi = LevelSetField::sphere(g, [0.0; 3], 0.5);
        assert!(advect_levelset(&phi, &PrescribedMotion::none(), 0.0, 0.0).is_err());
    }

    #[test]
    fn normal_examples() {
        let g = grid(64);
        let lin = LevelSetField::new(ScalarField::from_fn(g, |x| x[0]));
        let n = interface_normal(&lin);
        for c in 0..g.cell_count() {
            assert_relative_eq!(n.component(0)[c], 1.0, epsilon = 1e-12);
            assert_relative_eq!(n.component(1)[c], 0.0, epsilon = 1e-12);
        }
        let flat = LevelSetField::new(ScalarField::filled(g, 0.3));
        let n = interface_normal(&flat);
        assert!(n.components().iter().flatten().all(|&v| v == 0.0));

        // circle of radius 0.5: the cell nearest (0.5, 0) sits at (0.53125, 0.03125)
        let circ = LevelSetField::sphere(g, [0.0; 3], 0.5);
        let n = interface_normal(&circ);
        let c = g.index([40, 32, 0]);
        let x = g.center(c);
        let r = norm(&x);
        assert!((n.component(0)[c] - x[0] / r).abs() < g.spacing());
        assert!((n.component(1)[c] - x[1] / r).abs() < g.spacing());
        assert!((n.component(0)[c] - 1.0).abs() < 2.0 * g.spacing());
    }

    #[test]
    fn kernels_integrate_to_one_and_partition_unity() {
        let w = 0.3;
        let m = 20_000;
        let ds = 2.0 * w / m as f64;
        let total: f64 = (0..m).map(|i| smoothed_delta(-w + (i as f64 + 0.5) * ds, w) * ds).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-8);
        for i in 0..=100 {
            let s = -0.5 + i as f64 * 0.01;
            assert_relative_eq!(smoothed_heaviside(s, w) + smoothed_heaviside(-s, w), 1.0, epsilon = 1e-15);
        }
        assert_eq!(smoothed_heaviside(0.0, w), 0.5);
    }

    #[test]
    fn circle_perimeter_from_surface_delta() {
        let g = grid(128);
        let phi = LevelSetField::sphere(g, [0.0; 3], 0.5);
        let delta = surface_delta(&phi, 2.0 * g.spacing()).unwrap();
        let perim = integrate(&delta);
        assert!((perim - PI).abs() / PI < 0.05, "perimeter {perim}");
    }

    #[test]
    fn surface_delta_without_interface_and_width_check() {
        let g = grid(32);
        let phi = LevelSetField::new(ScalarField::filled(g, 1.0));
        let d = surface_delta(&phi, 2.0 * g.spacing()).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
        assert!(matches!(
            surface_delta(&phi, g.spacing()),
            Err(Error::WidthTooSmall { .. })
        ));
        assert!(inside_indicator(&phi, g.spacing()).is_err());
    }

    #[test]
    fn indicator_examples() {
        let g = grid(16);
        let w = 2.0 * g.spacing();
        let inside = inside_indicator(&LevelSetField::new(ScalarField::filled(g, -1.0)), w).unwrap();
        assert!(inside.values().iter().all(|&v| v == 1.0));
        let outside = inside_indicator(&LevelSetField::new(ScalarField::filled(g, 1.0)), w).unwrap();
        assert!(outside.values().iter().all(|&v| v == 0.0));
        let mut f = ScalarField::filled(g, 1.0);
        f.values_mut()[3] = 0.0;
        let ind = inside_indicator(&LevelSetField::new(f), w).unwrap();
        assert_eq!(ind.values()[3], 0.5);
    }

    #[test]
    fn flow_map_examples() {
        let none = PrescribedMotion::none();
        let x0 = [0.3, -0.2, 0.0];
        assert_eq!(flow_map(&none, x0, 0.0, 5.0, 10).unwrap(), x0);

        let rate = 1.3;
        let rot = PrescribedMotion::new(MotionPreset::Rotation { rate }, 1.0).unwrap();
        let quarter = PI / (2.0 * rate);
        let x = flow_map(&rot, x0, 0.0, quarter, 1000).unwrap();
        assert!((x[0] - 0.2).abs() < 1e-8 && (x[1] - 0.3).abs() < 1e-8, "{x:?}");

        let exp = PrescribedMotion::new(MotionPreset::Expansion { rate: 0.4, support: 1.0 }, 1.0).unwrap();
        let x0 = [0.1, 0.15, 0.0];
        let t = 1.5;
        let x = flow_map(&exp, x0, 0.0, t, 200).unwrap();
        let expected = norm(&x0) * (0.4 * t).exp();
        assert!((norm(&x) - expected).abs() < 1e-6);
        assert!(flow_map(&exp, x0, 1.0, 0.0, 5).is_err());
        assert!(flow_map(&exp, x0, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn reinitialize_keeps_signed_distance() {
        let g = grid(64);
        let sd = LevelSetField::sphere(g, [0.0; 3], 0.6);
        // a squashed copy with the same zero set
        let squashed = LevelSetField::new(sd.field().map(|p| 3.0 * p));
        let re = reinitialize(&squashed, 80);
        let h = g.spacing();
        for c in 0..g.cell_count() {
            let p = sd.field().values()[c];
            if p.abs() < 4.0 * h {
                let e = (re.field().values()[c] - p).abs();
                // first-order Godunov: O(h) away from the zero level
                assert!(e < h, "cell {c} phi {p} err {e} h {h}");
            }
        }
    }

    #[test]
    fn band_regularity() {
        let g = grid(32);
        let sd = LevelSetField::sphere(g, [0.0; 3], 0.6);
        assert!(sd.band_is_regular(3.0, 0.1));
        let mut flat = sd.field().clone();
        for v in flat.values_mut() {
            if v.abs() < 0.2 {
                *v = 0.0;
            }
        }
        assert!(!LevelSetField::new(flat).band_is_regular(3.0, 0.1));
    }
}

//! Focused Gaussian trap beam, the trap potential it creates for a ground
//! sublevel, and the geometry of equipotential surfaces.
//!
//! The beam propagates along `x`; `y` and `z` are transverse. The potential
//! is `U = h · Δ_ground(x, y, z)`, i.e. the ground-state light shift times
//! Planck's constant, which is negative for a red-detuned trap.

use std::f64::consts::PI;

use crate::atomic_data::{Catalog, HyperfineState, CONSTANTS};
use crate::error::{Error, Result};
use crate::numerics::{simpson, Grid};
use crate::stark::shift_per_intensity;

/// Ideal TEM00 beam, linearly polarized along the quantization axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamGeometry {
    power_w: f64,
    waist_m: f64,
    wavelength_m: f64,
    focus_x_m: f64,
}

impl BeamGeometry {
    pub fn new(power_w: f64, waist_m: f64, wavelength_m: f64, focus_x_m: f64) -> Result<Self> {
        if !(power_w.is_finite() && power_w >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beam power must be >= 0, got {power_w}"
            )));
        }
        if !(waist_m.is_finite() && waist_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beam waist must be > 0, got {waist_m}"
            )));
        }
        if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beam wavelength must be > 0, got {wavelength_m}"
            )));
        }
        if !focus_x_m.is_finite() {
            return Err(Error::InvalidParameter(
                "focus position must be finite".into(),
            ));
        }
        Ok(BeamGeometry {
            power_w,
            waist_m,
            wavelength_m,
            focus_x_m,
        })
    }

    pub fn power_w(&self) -> f64 {
        self.power_w
    }

    pub fn waist_m(&self) -> f64 {
        self.waist_m
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn focus_x_m(&self) -> f64 {
        self.focus_x_m
    }

    pub fn with_power(&self, power_w: f64) -> Result<Self> {
        BeamGeometry::new(power_w, self.waist_m, self.wavelength_m, self.focus_x_m)
    }

    pub fn with_focus(&self, focus_x_m: f64) -> Result<Self> {
        BeamGeometry::new(self.power_w, self.waist_m, self.wavelength_m, focus_x_m)
    }

    /// `x_R = π w0² / λ`.
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist_m * self.waist_m / self.wavelength_m
    }

    /// 1/e² radius at axial position `x`.
    pub fn radius_at(&self, x: f64) -> f64 {
        let s = (x - self.focus_x_m) / self.rayleigh_range();
        self.waist_m * (1.0 + s * s).sqrt()
    }

    pub fn peak_intensity(&self) -> f64 {
        2.0 * self.power_w / (PI * self.waist_m * self.waist_m)
    }

    /// Intensity in W/m².
    pub fn intensity(&self, x: f64, y: f64, z: f64) -> f64 {
        let w = self.radius_at(x);
        let w2 = w * w;
        2.0 * self.power_w / (PI * w2) * (-2.0 * (y * y + z * z) / w2).exp()
    }
}

/// Trap potential of one ground sublevel in a given beam.
#[derive(Clone, Debug)]
pub struct TrapPotential<'a> {
    beam: BeamGeometry,
    ground_state: HyperfineState,
    catalog: &'a Catalog,
    shift_hz_per_intensity: f64,
}

impl<'a> TrapPotential<'a> {
    pub fn new(
        catalog: &'a Catalog,
        beam: BeamGeometry,
        ground_state: HyperfineState,
    ) -> Result<Self> {
        let shift_hz_per_intensity =
            shift_per_intensity(catalog, beam.wavelength_m(), &ground_state)?;
        Ok(TrapPotential {
            beam,
            ground_state,
            catalog,
            shift_hz_per_intensity,
        })
    }

    pub fn beam(&self) -> &BeamGeometry {
        &self.beam
    }

    pub fn ground_state(&self) -> &HyperfineState {
        &self.ground_state
    }

    pub fn catalog(&self) -> &'a Catalog {
        self.catalog
    }

    /// Same state and catalog in another beam; the per-intensity shift only
    /// depends on the trap wavelength.
    pub fn with_beam(&self, beam: BeamGeometry) -> Result<Self> {
        if beam.wavelength_m() == self.beam.wavelength_m() {
            Ok(TrapPotential {
                beam,
                ..self.clone()
            })
        } else {
            TrapPotential::new(self.catalog, beam, self.ground_state.clone())
        }
    }

    /// Potential energy in J.
    pub fn potential(&self, x: f64, y: f64, z: f64) -> f64 {
        CONSTANTS.h * self.shift_hz_per_intensity * self.beam.intensity(x, y, z)
    }

    /// On-axis potential in J.
    pub fn on_axis(&self, x: f64) -> f64 {
        self.potential(x, 0.0, 0.0)
    }

    /// Depth `|U|` at the focus, in J.
    pub fn depth_joules(&self) -> f64 {
        (CONSTANTS.h * self.shift_hz_per_intensity * self.beam.peak_intensity()).abs()
    }

    /// Trap depth expressed as a temperature in mK.
    pub fn trap_depth_mk(&self) -> f64 {
        self.depth_joules() / CONSTANTS.k_b * 1e3
    }

    /// Half-length of the equipotential surface along the beam axis.
    fn half_length(&self, level: f64) -> f64 {
        let ratio = self.depth_joules() / level;
        self.beam.rayleigh_range() * (ratio - 1.0).max(0.0).sqrt()
    }

    fn checked_level(&self, u_level: f64) -> Result<f64> {
        let level = u_level.abs();
        let depth = self.depth_joules();
        if !(level.is_finite() && level > 0.0) {
            return Err(Error::InvalidParameter(
                "equipotential level must be non-zero".into(),
            ));
        }
        // Allow a relative rounding margin so `level == depth` degenerates cleanly.
        if level > depth * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::LevelBelowTrapMinimum { level, depth });
        }
        Ok(level.min(depth))
    }

    /// Squared radius `r(x)²` of the surface `|U| = level`, analytically
    /// continued (negative) outside the surface's axial extent.
    fn radius_squared(&self, x: f64, level: f64) -> f64 {
        let w = self.beam.radius_at(x);
        let axis = self.depth_joules() * (self.beam.waist_m() / w).powi(2);
        0.5 * w * w * (axis / level).ln()
    }

    /// Cross-section `(x, r)` of the surface `|U| = |u_level|` sampled at
    /// `samples` axial points across its full extent.
    pub fn equipotential_profile(&self, u_level: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
        let level = self.checked_level(u_level)?;
        let half = self.half_length(level);
        let focus = self.beam.focus_x_m();
        if half == 0.0 || samples < 2 {
            return Ok(vec![(focus, 0.0)]);
        }
        let grid = Grid::new(focus - half, focus + half, samples)?;
        Ok(grid
            .points()
            .map(|x| (x, self.radius_squared(x, level).max(0.0).sqrt()))
            .collect())
    }

    /// Area of the surface `|U| = k_B T` (see [`equipotential_area_level`]).
    ///
    /// [`equipotential_area_level`]: TrapPotential::equipotential_area_level
    pub fn equipotential_area(&self, t_mot_k: f64) -> Result<f64> {
        self.equipotential_area_level(CONSTANTS.k_b * t_mot_k, None, AreaQuadrature::default())
    }

    /// Surface-of-revolution area `∫ 2π r √(1 + r'²) dx` of `|U| = |u_level|`.
    ///
    /// With `window = Some((lo, hi))` only the part with `lo <= x <= hi` is
    /// counted. The integrand is written as `2π √(g + g'²/4)` with `g = r²`,
    /// which stays finite at the tips where `r' → ∞`; `g'` comes from
    /// centered differences.
    pub fn equipotential_area_level(
        &self,
        u_level: f64,
        window: Option<(f64, f64)>,
        quad: AreaQuadrature,
    ) -> Result<f64> {
        let level = self.checked_level(u_level)?;
        let half = self.half_length(level);
        let focus = self.beam.focus_x_m();
        let (mut a, mut b) = (focus - half, focus + half);
        if let Some((lo, hi)) = window {
            a = a.max(lo);
            b = b.min(hi);
        }
        if half == 0.0 || b <= a {
            return Ok(0.0);
        }
        let fd_step = 1e-6 * half.max(self.beam.waist_m());
        let integrand = |x: f64| {
            let g = self.radius_squared(x, level);
            let dg = (self.radius_squared(x + fd_step, level)
                - self.radius_squared(x - fd_step, level))
                / (2.0 * fd_step);
            2.0 * PI * (g.max(0.0) + 0.25 * dg * dg).sqrt()
        };
        let mut n = quad.points;
        let mut prev = simpson(integrand, a, b, n);
        for _ in 0..quad.max_refinements {
            n = 2 * n - 1;
            let next = simpson(integrand, a, b, n);
            if (next - prev).abs() <= quad.rel_tol * next.abs() {
                return Ok(next);
            }
            prev = next;
        }
        Ok(prev)
    }
}

/// Quadrature settings for equipotential areas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaQuadrature {
    pub points: usize,
    pub rel_tol: f64,
    pub max_refinements: u32,
}

impl Default for AreaQuadrature {
    fn default() -> Self {
        AreaQuadrature {
            points: 2001,
            rel_tol: 1e-3,
            max_refinements: 6,
        }
    }
}

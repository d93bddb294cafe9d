//! Light shifts of hyperfine sublevels in a far-detuned, linearly polarized
//! trap beam (polarization along the quantization axis).
//!
//! For a sublevel `(F, mF)` the shift in Hz is
//!
//! ```text
//! Δ = -(3π c² I / 2h) Σ_{F' mF'} α β / |ω_FF'|³ (2F+1)(2F'+1)(2J'+1)
//!       (F' 1 F; mF' 0 mF)² {J J' 1; F' F I_nuc}²
//! α = 1/(ω_FF' + ω) + 1/(ω_FF' − ω)
//! β = (2J+1)/(2J'+1) · 2.02613e18 · D² / λ³      (λ in Å, D in e·a0)
//! ```
//!
//! `β` is the partial spontaneous decay rate of the line. `ω_FF'` is signed:
//! negative when the partner level lies below the shifted one. The shift is
//! the product of the local intensity and a position-independent sum, so the
//! sum is evaluated once per sublevel ([`shift_per_intensity`]).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::angular::{wigner3j, wigner6j, HalfInt};
use crate::atomic_data::{Catalog, Coupling, HyperfineState, Transition, ANGSTROM, CONSTANTS};
use crate::beam::BeamGeometry;
use crate::error::{Error, Result};
use crate::numerics::Grid;

/// Smallest `|ω_FF' ∓ ω|` accepted by [`alpha_factor`], in rad/s.
pub const DEFAULT_RESONANCE_EPSILON: f64 = 2.0 * PI * 1.0e6;

/// Light shift of one sublevel at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftResult {
    pub state: HyperfineState,
    /// Shift in Hz; negative when the level is lowered.
    pub shift_hz: f64,
    pub position: [f64; 3],
}

/// Co- plus counter-rotating detuning factor `1/(ω_FF'+ω) + 1/(ω_FF'−ω)`.
pub fn alpha_factor(omega_line: f64, omega_trap: f64) -> Result<f64> {
    alpha_factor_with_epsilon(omega_line, omega_trap, DEFAULT_RESONANCE_EPSILON)
}

pub fn alpha_factor_with_epsilon(omega_line: f64, omega_trap: f64, epsilon: f64) -> Result<f64> {
    let plus = omega_line + omega_trap;
    let minus = omega_line - omega_trap;
    if plus.abs() < epsilon || minus.abs() < epsilon {
        return Err(Error::Resonance(format!(
            "omega_line={omega_line:e} rad/s, omega_trap={omega_trap:e} rad/s"
        )));
    }
    Ok(1.0 / plus + 1.0 / minus)
}

/// Partial decay rate `β` of a catalog line, seen from its lower level.
pub fn beta_factor(t: &Transition) -> f64 {
    let ratio = f64::from(t.lower.j.multiplicity()) / f64::from(t.upper.j.multiplicity());
    let lambda_angstrom = t.wavelength_m() / ANGSTROM;
    ratio * CONSTANTS.beta_conversion * t.dipole_au * t.dipole_au / lambda_angstrom.powi(3)
}

/// `β` seen from the level being shifted. For a downward coupling the
/// reduced element is re-expressed as `<J_upper||er||J_lower>`, which keeps
/// the squared sublevel coupling symmetric between the two ends.
fn beta_for(coupling: &Coupling<'_>) -> f64 {
    let t = coupling.transition;
    if !coupling.downward {
        return beta_factor(t);
    }
    let (j_state, j_partner) = (t.upper.j, t.lower.j);
    let d_sq = t.dipole_au * t.dipole_au * f64::from(j_partner.multiplicity())
        / f64::from(j_state.multiplicity());
    let lambda_angstrom = t.wavelength_m() / ANGSTROM;
    f64::from(j_state.multiplicity()) / f64::from(j_partner.multiplicity())
        * CONSTANTS.beta_conversion
        * d_sq
        / lambda_angstrom.powi(3)
}

/// Light shift of `state` (which must carry `mF`) per unit trap intensity,
/// in Hz per W/m².
pub fn shift_per_intensity(
    catalog: &Catalog,
    trap_wavelength_m: f64,
    state: &HyperfineState,
) -> Result<f64> {
    let mf = state
        .mf
        .ok_or_else(|| Error::Domain(format!("{state}: light shift needs mF")))?;
    state.check_coupling(catalog.nuclear_spin())?;
    let couplings = catalog.couplings(state);
    if couplings.is_empty() {
        return Err(Error::UnknownState(state.to_string()));
    }
    let omega_trap = 2.0 * PI * CONSTANTS.c / trap_wavelength_m;
    let (f, j) = (state.f, state.j);
    let mut sum = 0.0;
    for c in &couplings {
        let partner = c.partner();
        let omega = c.signed_angular_frequency();
        let alpha = alpha_factor(omega, omega_trap)
            .map_err(|_| Error::Resonance(c.transition.to_string()))?;
        let beta = beta_for(c);
        let six_j = wigner6j(
            j,
            partner.j,
            HalfInt::ONE,
            partner.f,
            f,
            catalog.nuclear_spin(),
        )?;
        if six_j == 0.0 {
            continue;
        }
        let mut angular = 0.0;
        for mfp in partner.f.projections() {
            let three_j = wigner3j(partner.f, HalfInt::ONE, f, mfp, HalfInt::ZERO, mf)?;
            angular += three_j * three_j;
        }
        let degeneracy = f64::from(f.multiplicity())
            * f64::from(partner.f.multiplicity())
            * f64::from(partner.j.multiplicity());
        sum += alpha * beta / omega.abs().powi(3) * degeneracy * angular * six_j * six_j;
    }
    Ok(-3.0 * PI * CONSTANTS.c * CONSTANTS.c / (2.0 * CONSTANTS.h) * sum)
}

/// Light shift of `state` at `(x, y, z)` in the field of `beam`.
pub fn light_shift(
    catalog: &Catalog,
    beam: &BeamGeometry,
    state: &HyperfineState,
    x: f64,
    y: f64,
    z: f64,
) -> Result<ShiftResult> {
    let per_intensity = shift_per_intensity(catalog, beam.wavelength_m(), state)?;
    Ok(ShiftResult {
        state: state.clone(),
        shift_hz: per_intensity * beam.intensity(x, y, z),
        position: [x, y, z],
    })
}

/// Cartesian axis through the beam focus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidParameter(format!("unknown axis `{other}`"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl Axis {
    /// Point at coordinate `s` along this axis through the beam focus.
    pub fn point(self, beam: &BeamGeometry, s: f64) -> [f64; 3] {
        match self {
            Axis::X => [s, 0.0, 0.0],
            Axis::Y => [beam.focus_x_m(), s, 0.0],
            Axis::Z => [beam.focus_x_m(), 0.0, s],
        }
    }
}

/// Light shift sampled along `axis` through the focus. Coordinates along the
/// propagation axis are absolute; transverse ones are measured from the axis.
pub fn shift_profile(
    catalog: &Catalog,
    beam: &BeamGeometry,
    state: &HyperfineState,
    axis: Axis,
    samples: &Grid,
) -> Result<Vec<ShiftResult>> {
    let per_intensity = shift_per_intensity(catalog, beam.wavelength_m(), state)?;
    Ok(samples
        .points()
        .map(|s| {
            let [x, y, z] = axis.point(beam, s);
            ShiftResult {
                state: state.clone(),
                shift_hz: per_intensity * beam.intensity(x, y, z),
                position: [x, y, z],
            }
        })
        .collect())
}

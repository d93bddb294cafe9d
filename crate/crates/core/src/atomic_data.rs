//! Transition catalog and physical constants.
//!
//! A catalog is a plain text file, one transition per line:
//!
//! ```text
//! # comment
//! atom Rb87 nuclear_2I 3
//! 5S1/2 1 4 5P3/2 3 6 780.2460209 4.2275 6.0666
//! ```
//!
//! Columns after the header are `lower_term lower_2J lower_2F upper_term
//! upper_2J upper_2F wavelength_nm D_au [linewidth_MHz]`. Angular momenta are
//! written doubled so half-integers stay exact. Wavelengths are vacuum values,
//! `D` is the reduced dipole element `<J_lower||er||J_upper>` in atomic units
//! and the optional linewidth is the natural `Gamma / 2pi` in MHz.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use crate::angular::HalfInt;
use crate::error::{Error, Result};

/// Fixed physical constants (CODATA 2018 exact values).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Speed of light, m/s.
    pub c: f64,
    /// Planck constant, J s.
    pub h: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Converts `D^2 / lambda^3` (D in e*a0, lambda in Angstrom) into a
    /// spontaneous decay rate in 1/s.
    pub beta_conversion: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    c: 299_792_458.0,
    h: 6.626_070_15e-34,
    hbar: 6.626_070_15e-34 / (2.0 * std::f64::consts::PI),
    k_b: 1.380_649e-23,
    beta_conversion: 2.026_13e18,
};

/// Meters per Angstrom; the unit `beta_conversion` expects wavelengths in.
pub const ANGSTROM: f64 = 1e-10;

/// A hyperfine level `(term, J, F)` with an optional magnetic sublevel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HyperfineState {
    pub term: String,
    pub j: HalfInt,
    pub f: HalfInt,
    /// `None` stands for every sublevel of `F`.
    pub mf: Option<HalfInt>,
}

impl HyperfineState {
    pub fn new(term: impl Into<String>, j: HalfInt, f: HalfInt) -> Self {
        HyperfineState {
            term: term.into(),
            j,
            f,
            mf: None,
        }
    }

    pub fn with_mf(&self, mf: HalfInt) -> Result<Self> {
        if !self.f.admits(mf) {
            return Err(Error::Domain(format!(
                "mF={mf} is not a sublevel of F={}",
                self.f
            )));
        }
        Ok(HyperfineState {
            mf: Some(mf),
            ..self.clone()
        })
    }

    /// Same level ignoring `mF`.
    pub fn same_level(&self, other: &HyperfineState) -> bool {
        self.term == other.term && self.j == other.j && self.f == other.f
    }

    /// Level without `mF`.
    pub fn level(&self) -> HyperfineState {
        HyperfineState {
            mf: None,
            ..self.clone()
        }
    }

    /// Checks `|J - I| <= F <= J + I` with matching parity.
    pub fn check_coupling(&self, nuclear_spin: HalfInt) -> Result<()> {
        let (j, f, i) = (self.j.twice(), self.f.twice(), nuclear_spin.twice());
        if j < 0 || f < 0 {
            return Err(Error::Domain(format!("{self}: negative angular momentum")));
        }
        if f < (j - i).abs() || f > j + i || (j + i - f) % 2 != 0 {
            return Err(Error::Domain(format!(
                "{self}: F inconsistent with J={} and I={nuclear_spin}",
                self.j
            )));
        }
        if let Some(mf) = self.mf {
            if !self.f.admits(mf) {
                return Err(Error::Domain(format!("{self}: |mF| > F")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for HyperfineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} F={}", self.term, self.f)?;
        if let Some(mf) = self.mf {
            write!(f, " mF={mf}")?;
        }
        Ok(())
    }
}

/// One dipole-allowed catalog line.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub lower: HyperfineState,
    pub upper: HyperfineState,
    /// Vacuum wavelength in nm.
    pub wavelength_nm: f64,
    /// Reduced dipole element `<J_lower||er||J_upper>` in e*a0.
    pub dipole_au: f64,
    /// Natural linewidth `Gamma / 2pi` in MHz, if known.
    pub linewidth_mhz: Option<f64>,
}

impl Transition {
    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_nm * 1e-9
    }

    /// Unperturbed transition angular frequency `2 pi c / lambda`.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * CONSTANTS.c / self.wavelength_m()
    }

    /// Natural linewidth in rad/s.
    pub fn linewidth_rad_s(&self) -> Option<f64> {
        self.linewidth_mhz
            .map(|mhz| 2.0 * std::f64::consts::PI * mhz * 1e6)
    }

    /// Checks wavelength, dipole element and dipole selection rules.
    pub fn validate(&self) -> Result<()> {
        let fail = |message: &str| {
            Err(Error::InvalidTransition {
                transition: self.to_string(),
                message: message.to_string(),
            })
        };
        if !(self.wavelength_nm.is_finite() && self.wavelength_nm > 0.0) {
            return fail("wavelength must be positive");
        }
        if !(self.dipole_au.is_finite() && self.dipole_au >= 0.0) {
            return fail("dipole moment must be non-negative");
        }
        if let Some(g) = self.linewidth_mhz {
            if !(g.is_finite() && g > 0.0) {
                return fail("linewidth must be positive");
            }
        }
        if self.lower.mf.is_some() || self.upper.mf.is_some() {
            return fail("catalog states carry no mF");
        }
        if self.lower.same_level(&self.upper) {
            return fail("lower and upper levels coincide");
        }
        let df = (self.upper.f.twice() - self.lower.f.twice()).abs();
        let dj = (self.upper.j.twice() - self.lower.j.twice()).abs();
        if df > 2 {
            return fail("|dF| > 1 is dipole forbidden");
        }
        if dj > 2 {
            return fail("|dJ| > 1 is dipole forbidden");
        }
        if self.lower.f.twice() == 0 && self.upper.f.twice() == 0 {
            return fail("F=0 -> F'=0 is dipole forbidden");
        }
        if self.lower.j.twice() == 0 && self.upper.j.twice() == 0 {
            return fail("J=0 -> J'=0 is dipole forbidden");
        }
        Ok(())
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} ({} nm)",
            self.lower, self.upper, self.wavelength_nm
        )
    }
}

/// A validated, immutable set of transitions for one atomic species.
#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    atom: String,
    nuclear_spin: HalfInt,
    transitions: Vec<Transition>,
}

/// How a catalog line couples to a given level.
#[derive(Clone, Copy, Debug)]
pub struct Coupling<'a> {
    pub transition: &'a Transition,
    /// `true` when the queried level is the upper end of the line.
    pub downward: bool,
}

impl<'a> Coupling<'a> {
    /// The level at the other end of the line.
    pub fn partner(&self) -> &'a HyperfineState {
        if self.downward {
            &self.transition.lower
        } else {
            &self.transition.upper
        }
    }

    /// Transition angular frequency seen from the queried level: positive for
    /// an upward coupling, negative for a downward one.
    pub fn signed_angular_frequency(&self) -> f64 {
        let w = self.transition.angular_frequency();
        if self.downward {
            -w
        } else {
            w
        }
    }
}

const BUNDLED_RB87: &str = include_str!("../data/rb87.cat");

impl Catalog {
    pub fn new(
        atom: impl Into<String>,
        nuclear_spin: HalfInt,
        transitions: Vec<Transition>,
    ) -> Result<Self> {
        let catalog = Catalog {
            atom: atom.into(),
            nuclear_spin,
            transitions,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    /// Rb-87 D1/D2 hyperfine lines shipped with the crate.
    pub fn bundled_rb87() -> Self {
        Catalog::parse(BUNDLED_RB87).expect("bundled catalog is valid")
    }

    pub fn bundled_rb87_text() -> &'static str {
        BUNDLED_RB87
    }

    pub fn atom(&self) -> &str {
        &self.atom
    }

    pub fn nuclear_spin(&self) -> HalfInt {
        self.nuclear_spin
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    fn validate(&self) -> Result<()> {
        if self.atom.is_empty() || self.atom.chars().any(char::is_whitespace) {
            return Err(Error::InvalidCatalog(format!(
                "bad atom label `{}`",
                self.atom
            )));
        }
        if self.nuclear_spin.twice() < 0 {
            return Err(Error::InvalidCatalog("negative nuclear spin".into()));
        }
        for (idx, t) in self.transitions.iter().enumerate() {
            t.validate()?;
            for state in [&t.lower, &t.upper] {
                if state.term.is_empty() || state.term.chars().any(char::is_whitespace) {
                    return Err(Error::InvalidTransition {
                        transition: t.to_string(),
                        message: "bad term label".into(),
                    });
                }
                state
                    .check_coupling(self.nuclear_spin)
                    .map_err(|e| Error::InvalidTransition {
                        transition: t.to_string(),
                        message: e.to_string(),
                    })?;
            }
            for other in &self.transitions[..idx] {
                if other.lower == t.lower && other.upper == t.upper {
                    return Err(Error::InvalidTransition {
                        transition: t.to_string(),
                        message: "duplicate (lower, upper) pair".into(),
                    });
                }
            }
        }
        // A term label must always carry the same J.
        let mut terms: Vec<(&str, HalfInt)> = Vec::new();
        for s in self.transitions.iter().flat_map(|t| [&t.lower, &t.upper]) {
            match terms.iter().find(|(name, _)| *name == s.term) {
                Some((_, j)) if *j != s.j => {
                    return Err(Error::InvalidCatalog(format!(
                        "term {} appears with J={} and J={}",
                        s.term, j, s.j
                    )))
                }
                Some(_) => {}
                None => terms.push((&s.term, s.j)),
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Catalog::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(String, HalfInt)> = None;
        let mut transitions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let cols: Vec<&str> = content.split_whitespace().collect();
            let perr = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if cols[0] == "atom" {
                if header.is_some() {
                    return Err(perr("duplicate atom header".into()));
                }
                if cols.len() != 4 || cols[2] != "nuclear_2I" {
                    return Err(perr("expected `atom <label> nuclear_2I <value>`".into()));
                }
                let two_i: i32 = cols[3]
                    .parse()
                    .map_err(|_| perr(format!("bad nuclear_2I `{}`", cols[3])))?;
                header = Some((cols[1].to_string(), HalfInt::from_twice(two_i)));
                continue;
            }
            if header.is_none() {
                return Err(perr("transition before `atom` header".into()));
            }
            if cols.len() != 8 && cols.len() != 9 {
                return Err(perr(format!(
                    "expected 8 or 9 columns, found {}",
                    cols.len()
                )));
            }
            let int = |s: &str, what: &str| -> Result<HalfInt> {
                s.parse::<i32>()
                    .map(HalfInt::from_twice)
                    .map_err(|_| perr(format!("bad {what} `{s}`")))
            };
            let real = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| perr(format!("bad {what} `{s}`")))
            };
            let lower = HyperfineState::new(
                cols[0],
                int(cols[1], "lower_2J")?,
                int(cols[2], "lower_2F")?,
            );
            let upper = HyperfineState::new(
                cols[3],
                int(cols[4], "upper_2J")?,
                int(cols[5], "upper_2F")?,
            );
            let linewidth_mhz = match cols.get(8) {
                Some(s) => Some(real(s, "linewidth_MHz")?),
                None => None,
            };
            transitions.push(Transition {
                lower,
                upper,
                wavelength_nm: real(cols[6], "wavelength_nm")?,
                dipole_au: real(cols[7], "D_au")?,
                linewidth_mhz,
            });
        }
        let (atom, nuclear_spin) = header.ok_or(Error::Parse {
            line: 0,
            message: "missing `atom` header".into(),
        })?;
        Catalog::new(atom, nuclear_spin, transitions)
    }

    /// Canonical text form; parsing it yields an identical catalog.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "atom {} nuclear_2I {}",
            self.atom,
            self.nuclear_spin.twice()
        );
        for t in &self.transitions {
            let _ = write!(
                out,
                "{} {} {} {} {} {} {} {}",
                t.lower.term,
                t.lower.j.twice(),
                t.lower.f.twice(),
                t.upper.term,
                t.upper.j.twice(),
                t.upper.f.twice(),
                t.wavelength_nm,
                t.dipole_au
            );
            if let Some(g) = t.linewidth_mhz {
                let _ = write!(out, " {g}");
            }
            out.push('\n');
        }
        out
    }

    /// Lines whose lower level is `(term, J, F)` of `lower`, in file order.
    pub fn transitions_from(&self, lower: &HyperfineState) -> Vec<&Transition> {
        self.transitions
            .iter()
            .filter(|t| t.lower.same_level(lower))
            .collect()
    }

    /// Every line touching the level of `state`, from either end.
    pub fn couplings(&self, state: &HyperfineState) -> Vec<Coupling<'_>> {
        self.transitions
            .iter()
            .filter_map(|t| {
                if t.lower.same_level(state) {
                    Some(Coupling {
                        transition: t,
                        downward: false,
                    })
                } else if t.upper.same_level(state) {
                    Some(Coupling {
                        transition: t,
                        downward: true,
                    })
                } else {
                    None
                }
            })
            .collect()
    }

    /// Finds the line between two levels, ignoring `mF`.
    pub fn find(&self, lower: &HyperfineState, upper: &HyperfineState) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| t.lower.same_level(lower) && t.upper.same_level(upper))
    }
}

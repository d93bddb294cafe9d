//! Light shifts of alkali hyperfine levels in a focused Gaussian dipole trap
//! and their effect on resonant absorption imaging.
//!
//! The crate is layered bottom-up:
//!
//! * [`angular`]: exact Wigner 3j/6j symbols.
//! * [`atomic_data`]: transition catalog and constants.
//! * [`stark`]: sublevel light shifts.
//! * [`beam`]: Gaussian beam, trap potential, equipotential surfaces.
//! * [`absorption`]: Stark-modified probe cross-sections.
//! * [`imaging`]: OD image synthesis and atom-number estimation.
//!
//! Interchangeable strategies (probe polarization, ground-state population,
//! `n0` inversion) are registered by name in [`registry::Registry`] tables.

pub mod absorption;
pub mod angular;
pub mod atomic_data;
pub mod beam;
pub mod error;
pub mod imaging;
pub mod numerics;
pub mod registry;
pub mod stark;

pub use angular::HalfInt;
pub use atomic_data::{Catalog, HyperfineState, Transition, CONSTANTS};
pub use beam::{BeamGeometry, TrapPotential};
pub use error::{Error, Result};

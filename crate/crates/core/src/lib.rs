//! Electron-nuclear spin level kinetics for dynamic nuclear polarization.
//!
//! The crate diagonalizes an isotropic S·I spin Hamiltonian, derives thermal
//! populations and the EPR/NMR transition catalog, integrates population rate
//! equations under relaxation, CW drives and instantaneous pulses, and runs
//! ENDOR-based polarization protocols (continuous-wave and pulsed). Synthetic
//! EPR and ENDOR spectra are rendered from population states.

pub mod config;
pub mod cli;
pub mod constants;
pub mod eigen;
pub mod error;
pub mod format;
pub mod hamiltonian;
pub mod kinetics;
pub mod levels;
pub mod metrics;
pub mod population;
pub mod protocols;
pub mod provision;
pub mod spectra;
pub mod spin;
pub mod wigner;

pub use error::{Error, ErrorClass, Result};
pub use levels::{EnergyLevels, Transition, TransitionKind};
pub use population::PopulationState;
pub use spin::{HalfInt, Label, SpinSystem};

//! Simulation of ion qubits held in separated traps and coupled through their
//! axial vibrations.
//!
//! The crate is organised bottom-up:
//!
//! - [`fockspace`]: truncated Fock-space states, ladder operators, tensor
//!   products and a time-ordered propagator.
//! - [`laser_ion`]: beyond-Lamb-Dicke sideband Rabi frequencies, closed-form
//!   sideband evolution, the single-pulse carrier CNOT solver and a full
//!   (non rotating-wave) interaction-picture propagator.
//! - [`coulomb`]: inter-trap coupling strength, frequency renormalisation,
//!   exchange dynamics and the full Coulomb Hamiltonian.
//! - [`sweep`]: linear trap-frequency ramps, the adiabaticity parameter and
//!   numerical sweep simulation in the instantaneous basis.
//! - [`protocol`]: the five-step separated-trap CNOT and its extension to a
//!   chain of traps.
//!
//! All frequencies are angular (rad/s), all times in seconds and all lengths
//! in metres.

pub mod constants;
pub mod coulomb;
mod error;
pub mod fockspace;
pub mod laser_ion;
pub mod protocol;
pub mod sweep;

pub use error::{Error, Result};
pub use fockspace::C64;

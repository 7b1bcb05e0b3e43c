//! Physical constants (CODATA 2018, 10 significant digits) and ion species.

use std::f64::consts::TAU;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854187813e-12;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660539067e-27;
/// Mass of a 9Be+ ion in atomic mass units.
pub const BE9_MASS_U: f64 = 9.012;

/// Converts a frequency given as f = omega / 2pi (Hz) to rad/s.
#[inline]
pub fn angular(frequency_hz: f64) -> f64 {
    TAU * frequency_hz
}

/// Converts an angular frequency (rad/s) to Hz.
#[inline]
pub fn cyclic(omega: f64) -> f64 {
    omega / TAU
}

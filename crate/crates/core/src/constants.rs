//! Physical constants (CODATA 2018) in the unit system used throughout the crate:
//! frequencies in MHz, fields in tesla, temperatures in kelvin.

/// Bohr magneton over Planck's constant, MHz per tesla.
pub const MU_B_OVER_H: f64 = 13_996.244_936_1;

/// Planck's constant over Boltzmann's constant, kelvin per MHz.
pub const H_OVER_KB: f64 = 4.799_243_073_366_221e-5;

/// Free-electron g-value.
pub const G_FREE_ELECTRON: f64 = 2.002_319_304_362_56;

/// 14N nuclear gyromagnetic ratio, MHz per tesla.
pub const GAMMA_N14: f64 = 3.077_706;

/// 15N nuclear gyromagnetic ratio, MHz per tesla.
pub const GAMMA_N15: f64 = -4.317_267;

/// Electron Zeeman frequency for a given g-value and field.
#[inline]
pub fn electron_larmor(g: f64, field: f64) -> f64 {
    g * MU_B_OVER_H * field
}

/// Boltzmann exponent h·ν/(k_B·T) for a frequency in MHz.
#[inline]
pub fn boltzmann_exponent(freq_mhz: f64, temperature: f64) -> f64 {
    H_OVER_KB * freq_mhz / temperature
}

//! Natural units: the reference vacuum wavelength and the speed of light are
//! both 1, so the transition frequency is ω₀ = 2π.
//!
//! Distances handed to or reported by the public API are in the dimensionless
//! round-trip variable ζ = ω₀z/(πc) = 2z/λ₀. The grid works in plain
//! simulation lengths. Decay rates are reported with the common positive
//! prefactor 2ω₀²/(ħε₀c²) set to 1.

use std::f64::consts::PI;

pub const LAMBDA0: f64 = 1.0;
pub const C: f64 = 1.0;
pub const OMEGA0: f64 = 2.0 * PI * C / LAMBDA0;

/// Wavenumber at the transition frequency.
pub const K0: f64 = OMEGA0 / C;

/// Simulation length → ζ.
#[inline]
pub fn zeta(length: f64) -> f64 {
    OMEGA0 * length / (PI * C)
}

/// ζ → simulation length.
#[inline]
pub fn length(zeta: f64) -> f64 {
    zeta * PI * C / OMEGA0
}

/// Vacuum value of Im G(r, r, ω) along each axis, ω/(6πc).
#[inline]
pub fn vacuum_im_g(omega: f64) -> f64 {
    omega / (6.0 * PI * C)
}

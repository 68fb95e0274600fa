//! Three-dimensional FDTD engine used to extract G(r″, r_atom, ω₀).
//!
//! A Yee lattice in natural units (λ₀ = c = ε₀ = μ₀ = 1) with convolutional
//! PML absorbers, dispersionless dielectrics and PEC cells. A point current
//! with a Gaussian-modulated waveform drives one E-component; a running DFT
//! at ω₀ divided by the DFT of the current gives one column of the Green's
//! tensor.

mod engine;
pub mod geometry;
mod greens;
pub mod lattice;

use std::fmt;
use std::str::FromStr;

use crate::units::OMEGA0;
use crate::{Error, Result};

pub use engine::{run_point_source, Monitor, PointSourceResponse};
pub use geometry::{halfspace_proxy, rasterize, BlockIndex, Medium, Region, VoxelGeometry};
pub use greens::{calibrate, greens_field, greens_field_in, GreensField, GreensOptions};
pub use lattice::{CellBox, Lattice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["x", "y", "z"][self.index()])
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdtdConfig {
    /// Voxels per vacuum wavelength.
    pub resolution: usize,
    /// Half-width of the non-absorbing box, in λ₀.
    pub box_half_extent: f64,
    /// PML thickness outside the box, in λ₀.
    pub pml_thickness: f64,
    /// c·dt/dx.
    pub courant_factor: f64,
    pub source_center_freq: f64,
    /// Spectral standard deviation of the pulse relative to its centre.
    pub source_fractional_bandwidth: f64,
    /// Run ends once the field energy over the last period falls below this
    /// fraction of its peak, at the source and at each probe point.
    pub decay_threshold: f64,
    pub max_steps: usize,
    /// Evaluate the DFT at the frequency whose axial lattice wavenumber
    /// equals the vacuum one, cancelling most of the Yee phase error.
    pub dispersion_compensation: bool,
}

impl Default for FdtdConfig {
    fn default() -> Self {
        Self {
            resolution: 12,
            box_half_extent: 2.0,
            pml_thickness: 1.0,
            courant_factor: 0.5,
            source_center_freq: OMEGA0,
            source_fractional_bandwidth: 0.4,
            decay_threshold: 1e-10,
            max_steps: 20_000,
            dispersion_compensation: true,
        }
    }
}

impl FdtdConfig {
    pub fn with_resolution(resolution: usize) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.resolution < 4 {
            return bad(format!("resolution must be >= 4, got {}", self.resolution));
        }
        if !(self.courant_factor > 0.0 && self.courant_factor <= 1.0 / 3f64.sqrt()) {
            return bad(format!(
                "courant factor must lie in (0, 1/sqrt(3)], got {}",
                self.courant_factor
            ));
        }
        let res = self.resolution as f64;
        for (name, v) in [
            ("box_half_extent", self.box_half_extent),
            ("pml_thickness", self.pml_thickness),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
            if (v * res - (v * res).round()).abs() > 1e-9 || (v * res).round() < 2.0 {
                return bad(format!(
                    "{name} = {v} is not a whole number (>= 2) of cells at {} ppw",
                    self.resolution
                ));
            }
        }
        if !(self.source_center_freq > 0.0) {
            return bad("source centre frequency must be positive".into());
        }
        if !(self.source_fractional_bandwidth > 0.0 && self.source_fractional_bandwidth <= 1.0) {
            return bad(format!(
                "fractional bandwidth must lie in (0, 1], got {}",
                self.source_fractional_bandwidth
            ));
        }
        if !(self.decay_threshold > 0.0 && self.decay_threshold < 1.0) {
            return bad(format!(
                "decay threshold must lie in (0, 1), got {}",
                self.decay_threshold
            ));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn dt(&self) -> f64 {
        self.courant_factor * self.dx()
    }

    /// Frequency at which fields are transformed: ω₀, or with compensation
    /// the ω satisfying sin(ω dt/2) = S sin(ω₀ dx/2) for Courant number S.
    pub fn dft_frequency(&self) -> f64 {
        let w = self.source_center_freq;
        if !self.dispersion_compensation {
            return w;
        }
        let s = self.courant_factor;
        2.0 / self.dt() * (s * (0.5 * w * self.dx()).sin()).asin()
    }
}

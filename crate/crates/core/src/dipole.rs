//! Transition dipole pairs of the Λ system and their K/N matrices.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::linalg::{CVec3, ComplexMatrix3};
use crate::{Error, Result};

/// Plane in which the two circular dipoles rotate, relative to the
/// optimisation plane (xy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    /// Rotation in the yz plane.
    Perpendicular,
    /// Rotation in the xy plane.
    Parallel,
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rotation::Perpendicular => "perpendicular",
            Rotation::Parallel => "parallel",
        })
    }
}

impl FromStr for Rotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perpendicular" => Ok(Rotation::Perpendicular),
            "parallel" => Ok(Rotation::Parallel),
            other => Err(Error::InvalidArgument(format!(
                "unknown rotation '{other}' (expected perpendicular or parallel)"
            ))),
        }
    }
}

/// The two transition dipoles d (|0⟩→|1⟩) and μ (|0⟩→|2⟩) with
/// K = d*⊗μ and N = d*⊗d + μ*⊗μ.
#[derive(Debug, Clone, PartialEq)]
pub struct DipolePair {
    d: CVec3,
    mu: CVec3,
    k: ComplexMatrix3,
    n: ComplexMatrix3,
}

impl DipolePair {
    pub fn new(d: CVec3, mu: CVec3) -> Result<Self> {
        if d.norm_squared() + mu.norm_squared() <= 0.0 {
            return Err(Error::InvalidArgument(
                "dipole pair must have non-zero total strength".into(),
            ));
        }
        let (k, n) = dipole_matrices(&d, &mu);
        Ok(Self { d, mu, k, n })
    }

    pub fn d(&self) -> &CVec3 {
        &self.d
    }

    pub fn mu(&self) -> &CVec3 {
        &self.mu
    }

    pub fn k(&self) -> &ComplexMatrix3 {
        &self.k
    }

    pub fn n(&self) -> &ComplexMatrix3 {
        &self.n
    }

    /// Axes on which either dipole has a non-zero component. Only these
    /// source orientations contribute to any contraction with K or N.
    pub fn support(&self) -> [bool; 3] {
        std::array::from_fn(|i| self.d[i].norm() > 0.0 || self.mu[i].norm() > 0.0)
    }

    /// Both dipoles multiplied by a common positive factor.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let s = Complex64::new(s, 0.0);
        Self::new(self.d * s, self.mu * s)
    }
}

/// K = d*⊗μ and N = d*⊗d + μ*⊗μ.
pub fn dipole_matrices(d: &CVec3, mu: &CVec3) -> (ComplexMatrix3, ComplexMatrix3) {
    let dc = d.conjugate();
    let mc = mu.conjugate();
    let k = ComplexMatrix3::outer(&dc, mu);
    let n = ComplexMatrix3::outer(&dc, d) + ComplexMatrix3::outer(&mc, mu);
    (k, n)
}

/// Orthogonal circular dipoles of magnitudes `d` and `mu` rotating in the
/// plane selected by `rotation`; d*·μ = 0 in both cases.
pub fn standard_dipoles(rotation: Rotation, d: f64, mu: f64) -> Result<DipolePair> {
    if !(d > 0.0 && mu > 0.0) || !d.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "dipole magnitudes must be positive, got d = {d}, mu = {mu}"
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let (dv, mv) = match rotation {
        Rotation::Perpendicular => (CVec3::new(zero, one, i), CVec3::new(zero, one, -i)),
        Rotation::Parallel => (CVec3::new(one, i, zero), CVec3::new(one, -i, zero)),
    };
    DipolePair::new(
        dv * Complex64::new(d * FRAC_1_SQRT_2, 0.0),
        mv * Complex64::new(mu * FRAC_1_SQRT_2, 0.0),
    )
}

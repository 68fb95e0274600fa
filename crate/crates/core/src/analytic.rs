//! Closed-form dyadic Green's tensors: free space, and the scattering part for
//! a perfectly reflecting plane at z = 0 evaluated at equal points on the
//! z-axis. These serve as the analytic references for every FDTD comparison.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::linalg::ComplexMatrix3;
use crate::units::C;
use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Diagonal of the equal-point scattering tensor above a perfect reflector;
/// the off-diagonal entries vanish identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpaceScatterDiag {
    /// G⁽¹⁾ₓₓ = G⁽¹⁾ᵧᵧ.
    pub gxx: Complex64,
    pub gzz: Complex64,
}

impl HalfSpaceScatterDiag {
    pub fn to_matrix(&self) -> ComplexMatrix3 {
        let mut m = ComplexMatrix3::zeros();
        m[(0, 0)] = self.gxx;
        m[(1, 1)] = self.gxx;
        m[(2, 2)] = self.gzz;
        m
    }
}

/// Free-space Green's tensor G⁽⁰⁾(r, r′, ω) without the contact term.
///
/// The tensor is singular at r = r′; use [`vacuum_im_greens_equal`] for the
/// finite imaginary part there.
pub fn vacuum_greens(r: &Vec3, r_prime: &Vec3, omega: f64) -> Result<ComplexMatrix3> {
    let sep = r - r_prime;
    let dist = sep.norm();
    if dist == 0.0 {
        return Err(Error::Domain(
            "vacuum Green's tensor is singular at coincident points; use vacuum_im_greens_equal"
                .into(),
        ));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let k = omega / C;
    let kr = k * dist;
    let i = Complex64::i();
    let phase = (i * kr).exp();
    let pre = -phase / (4.0 * PI * k * k * dist.powi(3));
    let a = pre * (1.0 - i * kr - kr * kr);
    let b = -pre * (3.0 - 3.0 * i * kr - kr * kr);
    let u = sep / dist;
    let mut g = ComplexMatrix3::zeros();
    for p in 0..3 {
        for q in 0..3 {
            let delta = if p == q { 1.0 } else { 0.0 };
            g[(p, q)] = a * delta + b * (u[p] * u[q]);
        }
    }
    Ok(g)
}

/// Im G⁽⁰⁾(r, r, ω) = (ω/6πc)·𝕀₃, returned as a real-valued matrix.
pub fn vacuum_im_greens_equal(omega: f64) -> ComplexMatrix3 {
    let v = omega / (6.0 * PI * C);
    ComplexMatrix3::from_real_diagonal([v, v, v])
}

/// Equal-point scattering tensor of a perfect reflector at height ζ on the
/// z-axis.
pub fn reflector_scatter_equal(zeta: f64, omega: f64) -> Result<HalfSpaceScatterDiag> {
    check_height(zeta)?;
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    let z = zeta * PI * C / omega;
    let i = Complex64::i();
    let pz = PI * zeta;
    let phase = (2.0 * i * pz).exp();
    let gxx = phase * (1.0 - 2.0 * i * pz - 4.0 * pz * pz) / (32.0 * PI.powi(3) * zeta * zeta * z);
    let gzz = phase * (1.0 - 2.0 * i * pz) / (16.0 * PI.powi(3) * zeta * zeta * z);
    Ok(HalfSpaceScatterDiag { gxx, gzz })
}

/// Im G(r, r, ω) at height ζ above a perfect reflector, assembled from the
/// explicit trigonometric form rather than from [`reflector_scatter_equal`].
pub fn reflector_im_greens_equal(zeta: f64, omega: f64) -> Result<ComplexMatrix3> {
    check_height(zeta)?;
    let z = zeta * PI * C / omega;
    let x = 2.0 * PI * zeta;
    let (s, c) = x.sin_cos();
    let pi3 = PI.powi(3);
    let vac = omega / (6.0 * PI * C);
    let lateral = ((1.0 - x * x) * s - x * c) / (32.0 * pi3 * zeta * zeta * z);
    let normal = (s - x * c) / (16.0 * pi3 * zeta * zeta * z);
    Ok(ComplexMatrix3::from_real_diagonal([
        vac + lateral,
        vac + lateral,
        vac + normal,
    ]))
}

fn check_height(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "atom must lie strictly above the reflector, got zeta = {zeta}"
        )))
    }
}

//! Λ-system observables: decay rates, cross-coupling, steady-state coherence,
//! the perfect-reflector closed form, its antinodes, and a master-equation
//! integrator used to cross-check the steady state.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::dipole::DipolePair;
use crate::linalg::ComplexMatrix3;
use crate::units::OMEGA0;
use crate::{Error, Result};

/// Decay rates γ₁, γ₂ and cross-coupling κ₁₂, in units where the common
/// prefactor 2ω₀²/(ħε₀c²) is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa12: Complex64,
}

impl RateSet {
    /// Checks γ₁, γ₂ ≥ 0 and the Cauchy–Schwarz bound |κ₁₂| ≤ √(γ₁γ₂).
    pub fn new(gamma1: f64, gamma2: f64, kappa12: Complex64) -> Result<Self> {
        if !(gamma1 >= 0.0 && gamma2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "decay rates must be non-negative, got {gamma1}, {gamma2}"
            )));
        }
        let bound = (gamma1 * gamma2).sqrt();
        if kappa12.norm() > bound + 1e-12 * (gamma1 + gamma2).max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "|kappa12| = {} exceeds sqrt(gamma1 gamma2) = {bound}",
                kappa12.norm()
            )));
        }
        Ok(Self {
            gamma1,
            gamma2,
            kappa12,
        })
    }

    pub fn total(&self) -> f64 {
        self.gamma1 + self.gamma2
    }

    /// κ₁₂/(γ₁ + γ₂).
    pub fn steady_coherence(&self) -> Complex64 {
        self.kappa12 / self.total()
    }
}

/// Density matrix over {|0⟩, |1⟩, |2⟩}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3(Matrix3<Complex64>);

impl DensityMatrix3 {
    const TOL: f64 = 1e-10;

    pub fn new(m: Matrix3<Complex64>) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > Self::TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > Self::TOL {
            return Err(Error::InvalidArgument(format!("density matrix trace is {tr}")));
        }
        for i in 0..3 {
            let p = m[(i, i)].re;
            if !(-Self::TOL..=1.0 + Self::TOL).contains(&p) {
                return Err(Error::InvalidArgument(format!("population {i} = {p} outside [0, 1]")));
            }
        }
        Ok(Self(m))
    }

    /// Pure state |i⟩⟨i|.
    pub fn basis(i: usize) -> Self {
        let mut m = Matrix3::zeros();
        m[(i, i)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.0
    }
}

fn real_part(im_g: &ComplexMatrix3) -> ComplexMatrix3 {
    im_g.re()
}

fn check_environment(im_g: &ComplexMatrix3) -> Result<ComplexMatrix3> {
    let g = real_part(im_g);
    let scale = g.max_abs();
    if !g.is_finite() {
        return Err(Error::NonPhysicalEnvironment("Im G has non-finite entries".into()));
    }
    if g.asymmetry() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonPhysicalEnvironment(format!(
            "Im G is not symmetric (asymmetry {:e}); the medium must be reciprocal",
            g.asymmetry()
        )));
    }
    let ev = g.hermitian_eigenvalues();
    let tr = g.trace().re;
    if ev[0] < -1e-9 * tr.abs() {
        return Err(Error::NonPhysicalEnvironment(format!(
            "Im G has negative eigenvalue {:e} (trace {tr:e})",
            ev[0]
        )));
    }
    Ok(g)
}

/// γ₁ = d*·ImG·d, γ₂ = μ*·ImG·μ, κ₁₂ = d*·ImG·μ.
pub fn rates_from_greens(im_g: &ComplexMatrix3, pair: &DipolePair) -> Result<RateSet> {
    let g = check_environment(im_g)?;
    let gamma1 = g.sandwich(pair.d(), pair.d()).re;
    let gamma2 = g.sandwich(pair.mu(), pair.mu()).re;
    let kappa12 = g.sandwich(pair.d(), pair.mu());
    Ok(RateSet {
        gamma1: gamma1.max(0.0),
        gamma2: gamma2.max(0.0),
        kappa12,
    })
}

/// ρ₁₂ = (K⊙ImG)/(N⊙ImG).
pub fn steady_coherence(im_g: &ComplexMatrix3, pair: &DipolePair) -> Result<Complex64> {
    let g = real_part(im_g);
    let den = pair.n().contract(&g).re;
    if !(den > 0.0) {
        return Err(Error::DegenerateEnvironment(format!(
            "total decay rate N⊙ImG = {den:e} is not positive"
        )));
    }
    Ok(pair.k().contract(&g) / den)
}

/// Coherence induced at height ζ above a perfect reflector for the
/// perpendicular circular pair with magnitudes `d` and `mu`.
pub fn reflector_coherence(zeta: f64, d: f64, mu: f64) -> Result<f64> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::Domain(format!(
            "atom must lie strictly above the reflector, got zeta = {zeta}"
        )));
    }
    let norm = d * d + mu * mu;
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("d and mu cannot both vanish".into()));
    }
    let prefactor = 2.0 * d * mu / norm;
    let x = 2.0 * PI * zeta;
    if x < 1e-2 {
        // Numerator and denominator both vanish as x³; use their series.
        let x2 = x * x;
        let num = -4.0 + 0.6 * x2 - x2 * x2 / 35.0;
        let den = 8.0 + 0.4 * x2 - x2 * x2 / 35.0;
        return Ok(prefactor * num / den);
    }
    let (s, c) = x.sin_cos();
    let num = 3.0 * x * c - 3.0 * (x * x + 1.0) * s;
    let den = 8.0 * x.powi(3) - 6.0 * (x * x - 3.0) * s - 18.0 * x * c;
    Ok(prefactor * num / den)
}

/// Positions ζₙ (n = 1..=count) of the local maxima of |ρ₁₂| above a perfect
/// reflector, excluding the one at the surface.
pub fn antinodes(count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("antinode count must be at least 1".into()));
    }
    const STEP: f64 = 1e-8;
    const HALF_WIDTH: f64 = 0.15;
    let f = |z: f64| reflector_coherence(z, 1.0, 1.0).map(f64::abs);
    let slope = |z: f64| -> Result<f64> { Ok((f(z + STEP)? - f(z - STEP)?) / (2.0 * STEP)) };

    let mut out = Vec::with_capacity(count);
    for n in 1..=count {
        let centre = 0.5 * (n as f64 + 0.5);
        let (mut lo, mut hi) = (centre - HALF_WIDTH, centre + HALF_WIDTH);
        let (s_lo, s_hi) = (slope(lo)?, slope(hi)?);
        if !(s_lo > 0.0 && s_hi < 0.0) {
            return Err(Error::Numerical(format!(
                "no maximum bracketed for antinode {n} in [{lo}, {hi}] (slopes {s_lo:e}, {s_hi:e})"
            )));
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if slope(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

fn master_rhs(rates: &RateSet, rho: &Matrix3<Complex64>) -> Matrix3<Complex64> {
    let i = Complex64::i();
    let half = Complex64::new(0.5, 0.0);
    let decay = i * OMEGA0 + half * rates.total();
    let kappa21 = rates.kappa12.conj();

    // −[iω₀ + (γ₁+γ₂)/2]|0⟩⟨0|ρ + ρ₀₀[γ₁/2|1⟩⟨1| + γ₂/2|2⟩⟨2| + κ₂₁/2|2⟩⟨1| + κ₁₂/2|1⟩⟨2|]
    let mut a = Matrix3::zeros();
    for col in 0..3 {
        a[(0, col)] = -decay * rho[(0, col)];
    }
    let p00 = rho[(0, 0)];
    a[(1, 1)] += half * rates.gamma1 * p00;
    a[(2, 2)] += half * rates.gamma2 * p00;
    a[(2, 1)] += half * kappa21 * p00;
    a[(1, 2)] += half * rates.kappa12 * p00;
    a + a.adjoint()
}

/// Integrates the Λ-system master equation with classical RK4 at fixed step.
pub fn evolve_master(
    rates: &RateSet,
    rho0: &DensityMatrix3,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix3> {
    DensityMatrix3::new(rho0.0)?;
    if !(dt > 0.0 && t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and t_final >= 0, got dt = {dt}, t_final = {t_final}"
        )));
    }
    if dt * rates.total() >= 0.1 {
        return Err(Error::InvalidArgument(format!(
            "step too large: dt·(γ₁+γ₂) = {} must be below 0.1",
            dt * rates.total()
        )));
    }
    let steps = (t_final / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let hc = Complex64::new(h, 0.0);
    let mut rho = rho0.0;
    for _ in 0..steps {
        let k1 = master_rhs(rates, &rho);
        let k2 = master_rhs(rates, &(rho + k1 * (hc * 0.5)));
        let k3 = master_rhs(rates, &(rho + k2 * (hc * 0.5)));
        let k4 = master_rhs(rates, &(rho + k3 * hc));
        rho += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * (hc / 6.0);
    }
    Ok(DensityMatrix3(rho))
}

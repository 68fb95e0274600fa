//! Adjoint gradient of the coherence and the placement merit density.
//!
//! All positive real prefactors are dropped; only the sign and the argmax
//! of a merit field carry meaning.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic::{vacuum_greens, vacuum_im_greens_equal, Vec3};
use crate::coherence::steady_coherence;
use crate::dipole::DipolePair;
use crate::fdtd::{BlockIndex, GreensField, Lattice, Region};
use crate::linalg::ComplexMatrix3;
use crate::units::zeta;
use crate::{Error, Result};

/// Below this |ρ₁₂| the phase of ρ₁₂ is taken as zero.
pub const SUBGRADIENT_THRESHOLD: f64 = 1e-14;

/// ∂|ρ₁₂|/∂G in the Wirtinger sense, contracted with ⊙.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceGradient {
    pub gradient: ComplexMatrix3,
    pub rho: Complex64,
    /// |ρ₁₂| was below [`SUBGRADIENT_THRESHOLD`] and the phase-free direction
    /// was used.
    pub subgradient: bool,
}

/// Gradient of |ρ₁₂| with respect to G, (ρ*/|ρ|)·(1/2i)·[K(N⊙ImG) − N(K⊙ImG)]/(N⊙ImG)².
///
/// For a perturbation δG changing Im G by δImG, Δ|ρ₁₂| ≈ 2·Re[gradient ⊙ δG].
pub fn coherence_gradient(im_g: &ComplexMatrix3, pair: &DipolePair) -> Result<CoherenceGradient> {
    let g = im_g.re();
    let rho = steady_coherence(&g, pair)?;
    let den = pair.n().contract(&g);
    let num = pair.k().contract(&g);
    let d_rho = (pair.k().scale(den) - pair.n().scale(num)).scale(1.0 / (Complex64::new(0.0, 2.0) * den * den));
    let mag = rho.norm();
    let (gradient, subgradient) = if mag < SUBGRADIENT_THRESHOLD {
        (d_rho, true)
    } else {
        (d_rho.scale(rho.conj() / mag), false)
    };
    Ok(CoherenceGradient {
        gradient,
        rho,
        subgradient,
    })
}

/// δF = Re[gradient ⊙ Gᵀ(r″,r)·G(r″,r)] for an already computed gradient.
pub fn merit_from_gradient(gradient: &ComplexMatrix3, greens_col: &ComplexMatrix3) -> f64 {
    let gg = greens_col.transpose() * *greens_col;
    gradient.contract(&gg).re
}

/// Merit density of a small dielectric at r″ given the equal-point tensor at
/// the atom and G(r″, r_atom).
pub fn merit_density(
    g_at_atom: &ComplexMatrix3,
    greens_col: &ComplexMatrix3,
    pair: &DipolePair,
) -> Result<f64> {
    let grad = coherence_gradient(&g_at_atom.im(), pair)?;
    Ok(merit_from_gradient(&grad.gradient, greens_col))
}

/// Position relative to the atom in ζ units, with χ = π|ζ″|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiCoordinates {
    pub zeta_pp: [f64; 3],
    pub chi: f64,
}

impl ChiCoordinates {
    pub fn new(zeta_pp: [f64; 3]) -> Self {
        let r = zeta_pp.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            zeta_pp,
            chi: PI * r,
        }
    }
}

/// Closed-form vacuum merit for the perpendicular pair at the origin,
///
/// 2[P cos2χ − Q sin2χ]ζ_y″ζ_z″ + [Q cos2χ + P sin2χ](ζ_z″² − ζ_y″²),
/// P = χ⁴ + χ² − 3, Q = 2χ(χ² + 3),
///
/// divided by χ⁸ so that it equals [`merit_density`] with vacuum tensors up
/// to a single positive constant.
pub fn vacuum_merit_density(zeta_pp: [f64; 3]) -> Result<f64> {
    let c = ChiCoordinates::new(zeta_pp);
    if c.chi == 0.0 || !c.chi.is_finite() {
        return Err(Error::Domain(
            "vacuum merit is singular at the atom (chi = 0)".into(),
        ));
    }
    let chi = c.chi;
    let [_, zy, zz] = zeta_pp;
    let chi2 = chi * chi;
    let p = chi2 * chi2 + chi2 - 3.0;
    let q = 2.0 * chi * (chi2 + 3.0);
    let (s, co) = (2.0 * chi).sin_cos();
    let f = 2.0 * (p * co - q * s) * zy * zz + (q * co + p * s) * (zz * zz - zy * zy);
    Ok(f / chi2.powi(4))
}

/// Block merit per candidate, in lexicographic candidate order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeritField {
    pub region: Region,
    pub candidates: Vec<BlockIndex>,
    pub values: Vec<f64>,
}

impl MeritField {
    /// Largest merit; ties go to the lowest index.
    pub fn argmax(&self) -> Option<(BlockIndex, f64)> {
        let mut best: Option<(BlockIndex, f64)> = None;
        for (&b, &v) in self.candidates.iter().zip(&self.values) {
            if best.map_or(true, |(_, bv)| v > bv) {
                best = Some((b, v));
            }
        }
        best
    }

    pub fn get(&self, b: BlockIndex) -> Option<f64> {
        self.candidates
            .binary_search(&b)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn positive(&self) -> Vec<BlockIndex> {
        self.candidates
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v > 0.0)
            .map(|(&b, _)| b)
            .collect()
    }
}

fn sorted(candidates: &[BlockIndex]) -> Vec<BlockIndex> {
    let mut c = candidates.to_vec();
    c.sort();
    c.dedup();
    c
}

/// Sums the merit density over the voxel centres of each candidate block,
/// using G(r″, r_atom) from an FDTD field.
pub fn merit_field_over_region(
    greens: &GreensField,
    g_at_atom: &ComplexMatrix3,
    pair: &DipolePair,
    region: &Region,
    candidates: &[BlockIndex],
) -> Result<MeritField> {
    let grad = coherence_gradient(&g_at_atom.im(), pair)?.gradient;
    let candidates = sorted(candidates);
    let values = candidates
        .par_iter()
        .map(|&b| {
            let cells = region.block_cells(b, &greens.lattice)?;
            let mut sum = 0.0;
            for cell in cells.iter() {
                let g = greens.at_cell(cell).ok_or_else(|| {
                    Error::MissingData(format!(
                        "Green's field has no value at voxel {cell:?} of block {b}"
                    ))
                })?;
                sum += merit_from_gradient(&grad, g);
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MeritField {
        region: *region,
        candidates,
        values,
    })
}

/// Block merit from the analytic vacuum tensors for an atom at `atom`
/// (physical coordinates), summed over the voxel centres of each block.
pub fn vacuum_merit_field(
    lattice: &Lattice,
    atom: [f64; 3],
    pair: &DipolePair,
    region: &Region,
    candidates: &[BlockIndex],
    omega: f64,
) -> Result<MeritField> {
    let grad = coherence_gradient(&vacuum_im_greens_equal(omega), pair)?.gradient;
    let r = Vec3::from(atom);
    let candidates = sorted(candidates);
    let values = candidates
        .par_iter()
        .map(|&b| {
            let cells = region.block_cells(b, lattice)?;
            let mut sum = 0.0;
            for cell in cells.iter() {
                let rpp = Vec3::from(lattice.cell_centre(cell));
                let g = vacuum_greens(&rpp, &r, omega)?;
                sum += merit_from_gradient(&grad, &g);
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MeritField {
        region: *region,
        candidates,
        values,
    })
}

/// ζ″ of a physical point relative to the atom.
pub fn zeta_offset(point: [f64; 3], atom: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| zeta(point[i] - atom[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipole::{standard_dipoles, Rotation};
    use crate::linalg::CVec3;
    use crate::units::{length, OMEGA0};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn perp() -> DipolePair {
        standard_dipoles(Rotation::Perpendicular, 1.0, 1.0).unwrap()
    }

    fn random_psd(rng: &mut ChaCha8Rng) -> ComplexMatrix3 {
        let a: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
            }
        }
        ComplexMatrix3::from_real_rows(m)
    }

    fn random_pair(rng: &mut ChaCha8Rng) -> DipolePair {
        let mut v = || CVec3::from_fn(|_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let d = v();
        let mu = v();
        DipolePair::new(d, mu).unwrap()
    }

    fn sym_basis() -> Vec<ComplexMatrix3> {
        let mut out = Vec::new();
        for i in 0..3 {
            for j in i..3 {
                let mut m = [[0.0; 3]; 3];
                m[i][j] = 1.0;
                m[j][i] = 1.0;
                out.push(ComplexMatrix3::from_real_rows(m));
            }
        }
        out
    }

    #[test]
    fn finite_difference_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        let i = Complex64::i();
        for _ in 0..100 {
            let g = random_psd(&mut rng);
            let pair = random_pair(&mut rng);
            let grad = coherence_gradient(&g, &pair).unwrap();
            assert!(!grad.subgradient);
            let (mut err, mut norm) = (0.0, 0.0);
            for e in sym_basis() {
                let plus = steady_coherence(&(g + e.scale_real(h)), &pair).unwrap().norm();
                let minus = steady_coherence(&(g - e.scale_real(h)), &pair).unwrap().norm();
                let fd = (plus - minus) / (2.0 * h);
                let pred = 2.0 * grad.gradient.contract(&e.scale(i)).re;
                err += (fd - pred).powi(2);
                norm += pred * pred;
            }
            assert!(err.sqrt() < 1e-4 * norm.sqrt(), "{} vs {}", err.sqrt(), norm.sqrt());
        }
    }

    #[test]
    fn vacuum_gradient_is_k_over_2i_trn() {
        let pair = perp();
        let g = vacuum_im_greens_equal(OMEGA0);
        let grad = coherence_gradient(&g, &pair).unwrap();
        assert!(grad.subgradient);
        let den = pair.n().contract(&g);
        let want = pair.k().scale(1.0 / (Complex64::new(0.0, 2.0) * den));
        assert!((grad.gradient - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn gradient_is_homogeneous_of_degree_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let g = random_psd(&mut rng);
            let pair = random_pair(&mut rng);
            let lambda = rng.gen_range(0.1..10.0);
            let a = coherence_gradient(&g, &pair).unwrap().gradient;
            let b = coherence_gradient(&g.scale_real(lambda), &pair).unwrap().gradient;
            assert!((b.scale_real(lambda) - a).norm() < 1e-12 * a.norm());
        }
    }

    #[test]
    fn zero_greens_column_gives_zero_merit() {
        let g = vacuum_im_greens_equal(OMEGA0).scale(Complex64::i());
        assert_eq!(merit_density(&g, &ComplexMatrix3::zeros(), &perp()).unwrap(), 0.0);
    }

    fn vacuum_merit_at(zpp: [f64; 3], pair: &DipolePair) -> f64 {
        let g_atom = vacuum_im_greens_equal(OMEGA0).scale(Complex64::i());
        let r = Vec3::new(length(zpp[0]), length(zpp[1]), length(zpp[2]));
        let col = vacuum_greens(&r, &Vec3::zeros(), OMEGA0).unwrap();
        merit_density(&g_atom, &col, pair).unwrap()
    }

    #[test]
    fn merit_matches_closed_form_up_to_one_constant() {
        let pair = perp();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut constant = None;
        for _ in 0..1000 {
            let zpp: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let closed = vacuum_merit_density(zpp).unwrap();
            let full = vacuum_merit_at(zpp, &pair);
            if closed.abs() < 1e-9 {
                continue;
            }
            let ratio = full / closed;
            let c = *constant.get_or_insert(ratio);
            assert!(c > 0.0);
            assert!((ratio - c).abs() < 1e-10 * c, "ratio {ratio} vs {c}");
        }
    }

    #[test]
    fn x_axis_is_a_zero() {
        for x in [-2.0, -0.3, 0.01, 1.7] {
            assert_eq!(vacuum_merit_density([x, 0.0, 0.0]).unwrap(), 0.0);
            assert!(vacuum_merit_at([x, 0.0, 0.0], &perp()).abs() < 1e-12);
        }
        assert!(matches!(vacuum_merit_density([0.0; 3]), Err(Error::Domain(_))));
    }

    #[test]
    fn swap_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (x, a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let f_ab = vacuum_merit_density([x, a, b]).unwrap();
            let f_ba = vacuum_merit_density([x, b, a]).unwrap();
            let chi = ChiCoordinates::new([x, a, b]).chi;
            let chi2 = chi * chi;
            let p = chi2 * chi2 + chi2 - 3.0;
            let q = 2.0 * chi * (chi2 + 3.0);
            let first = 2.0 * (p * (2.0 * chi).cos() - q * (2.0 * chi).sin()) * a * b / chi2.powi(4);
            assert!((f_ab + f_ba - 2.0 * first).abs() < 1e-12 * (1.0 + first.abs()));
        }
    }

    #[test]
    fn diagonal_closed_form() {
        for a in [0.1, 0.37, 1.0, 2.2] {
            let chi = PI * 2f64.sqrt() * a;
            let chi2 = chi * chi;
            let want = 2.0
                * a
                * a
                * ((chi2 * chi2 + chi2 - 3.0) * (2.0 * chi).cos() - 2.0 * chi * (chi2 + 3.0) * (2.0 * chi).sin())
                / chi2.powi(4);
            let got = vacuum_merit_density([0.0, a, a]).unwrap();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1e-300));
        }
    }

    #[test]
    fn merit_sign_invariant_under_dipole_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let base = perp();
        let big = base.scaled(7.5).unwrap();
        for _ in 0..200 {
            let zpp: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let a = vacuum_merit_at(zpp, &base);
            let b = vacuum_merit_at(zpp, &big);
            assert_eq!(a > 0.0, b > 0.0);
            assert!((b - a).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn merit_field_argmax_breaks_ties_low() {
        let m = MeritField {
            region: Region::default(),
            candidates: vec![
                BlockIndex::new(0, 1, 0),
                BlockIndex::new(2, 0, 0),
                BlockIndex::new(3, 3, 0),
            ],
            values: vec![1.0, 2.0, 2.0],
        };
        assert_eq!(m.argmax(), Some((BlockIndex::new(2, 0, 0), 2.0)));
        assert_eq!(m.positive().len(), 3);
        assert_eq!(m.get(BlockIndex::new(3, 3, 0)), Some(2.0));
    }

    #[test]
    fn vacuum_field_argmax_lies_in_a_positive_lobe() {
        let config = crate::fdtd::FdtdConfig::default();
        let lattice = Lattice::from_config(&config);
        let region = Region::default();
        let atom = [0.0, 0.0, length(0.7627)];
        let all: Vec<_> = region.candidates().collect();
        let field = vacuum_merit_field(&lattice, atom, &perp(), &region, &all, OMEGA0).unwrap();
        let (best, v) = field.argmax().unwrap();
        assert!(v > 0.0);
        // Dense closed-form check over the block's voxel centres.
        let cells = region.block_cells(best, &lattice).unwrap();
        let dense: f64 = cells
            .iter()
            .map(|c| vacuum_merit_density(zeta_offset(lattice.cell_centre(c), atom)).unwrap())
            .sum();
        assert!(dense > 0.0);
        for b in &all {
            let cells = region.block_cells(*b, &lattice).unwrap();
            let other: f64 = cells
                .iter()
                .map(|c| vacuum_merit_density(zeta_offset(lattice.cell_centre(c), atom)).unwrap())
                .sum();
            assert!(other <= dense * (1.0 + 1e-9));
        }
    }
}

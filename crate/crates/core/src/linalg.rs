//! 3×3 complex tensors: Green's tensors and the K/N dipole matrices.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

pub type CVec3 = Vector3<Complex64>;

/// A 3×3 complex matrix indexed `(row, col)` over the Cartesian axes x, y, z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix3(pub Matrix3<Complex64>);

impl Default for ComplexMatrix3 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl ComplexMatrix3 {
    pub fn zeros() -> Self {
        Self(Matrix3::zeros())
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn from_real_diagonal(d: [f64; 3]) -> Self {
        let mut m = Self::zeros();
        for (i, v) in d.into_iter().enumerate() {
            m.0[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn from_rows(rows: [[Complex64; 3]; 3]) -> Self {
        Self(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: [[f64; 3]; 3]) -> Self {
        Self(Matrix3::from_fn(|i, j| Complex64::new(rows[i][j], 0.0)))
    }

    /// Column `j` set to `v`; the remaining columns are left unchanged.
    pub fn set_column(&mut self, j: usize, v: &CVec3) {
        self.0.set_column(j, v);
    }

    pub fn column(&self, j: usize) -> CVec3 {
        self.0.column(j).into_owned()
    }

    /// Outer product a ⊗ b, (a ⊗ b)ᵢⱼ = aᵢbⱼ (no conjugation).
    pub fn outer(a: &CVec3, b: &CVec3) -> Self {
        Self(a * b.transpose())
    }

    /// Unconjugated elementwise contraction A ⊙ B = Σᵢⱼ AᵢⱼBᵢⱼ.
    pub fn contract(&self, other: &Self) -> Complex64 {
        self.0.component_mul(&other.0).sum()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Real part, returned as a matrix with zero imaginary entries.
    pub fn re(&self) -> Self {
        Self(self.0.map(|z| Complex64::new(z.re, 0.0)))
    }

    /// Imaginary part, returned as a matrix with zero imaginary entries.
    pub fn im(&self) -> Self {
        Self(self.0.map(|z| Complex64::new(z.im, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0 * Complex64::new(s, 0.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest |Aᵢⱼ − Aⱼᵢ|.
    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest |Aᵢⱼ − conj(Aⱼᵢ)|.
    pub fn non_hermiticity(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest |Im Aᵢⱼ|.
    pub fn max_imag(&self) -> f64 {
        self.0.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 3] {
        let h = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2]]
    }

    /// `v† · A · w` with the conjugate taken on the left vector.
    pub fn sandwich(&self, v: &CVec3, w: &CVec3) -> Complex64 {
        (v.adjoint() * self.0 * w)[(0, 0)]
    }
}

impl Index<(usize, usize)> for ComplexMatrix3 {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix3 {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.0[idx]
    }
}

impl Add for ComplexMatrix3 {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for ComplexMatrix3 {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

/// Matrix product.
impl Mul for ComplexMatrix3 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Mul<CVec3> for ComplexMatrix3 {
    type Output = CVec3;

    fn mul(self, rhs: CVec3) -> CVec3 {
        self.0 * rhs
    }
}

//! Environment-induced coherence in atomic Λ systems and the adjoint
//! inverse design of dielectric structures that enhance it.
//!
//! The crate is organised bottom-up:
//!
//! * [`units`], [`linalg`] and [`dipole`] hold the natural-unit convention,
//!   the 3×3 complex tensor type and the K/N dipole matrices.
//! * [`analytic`] evaluates closed-form Green's tensors for vacuum and for a
//!   perfectly reflecting plane.
//! * [`coherence`] turns an equal-point Green's tensor into decay rates,
//!   cross-coupling and the steady-state coherence ρ₁₂.
//! * [`adjoint`] provides the gradient of |ρ₁₂| and the placement merit field.
//! * [`fdtd`] is a Yee-lattice solver with CPML absorbers used to extract
//!   Green's tensors for arbitrary block geometries.
//! * [`optimizer`] runs the iterative block-placement loop and the
//!   single-pass variant; [`validation`] estimates the numerical error budget.
//! * [`io`] reads and writes the tabular text formats.

pub mod adjoint;
pub mod analytic;
pub mod coherence;
pub mod dipole;
pub mod error;
pub mod fdtd;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod units;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::{CVec3, ComplexMatrix3};

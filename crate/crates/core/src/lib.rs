//! Thin prime sets `P ⊆ primes` with relative density δ, the Euler products
//! `ζ_P(s) = ∏_{p∈P} (1 − p^{−s})^{−1/δ}` and their quadratic twists, the
//! continuation kernel `f_P` with `ζ_P = ζ · exp(f_P)`, and finite-window
//! checks that such sets are additive bases.
//!
//! Numerics are generic over [`scalar::Real`] (`f32`/`f64`); the aliases
//! below fix the common choice.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod additive_basis;
pub mod certified;
pub mod characters;
pub mod error;
pub mod highprec;
pub mod prime_engine;
pub mod random_model;
pub mod scalar;
pub mod thin_sets;
pub mod zeta;

pub use additive_basis::{
    basis_certificate, congruence_solvability, haselgrove_decompose, minimal_h_cover, prop_statue_check,
    shiu_scan, sumset_layers, vinny_decompose, BasisCertificate, Bitmap, CoverageReport, Decomposition,
    ResidueMode, ShiuRun, SolvabilityTable,
};
pub use certified::{CertifiedValue, CompensatedSum};
pub use characters::CharacterSpec;
pub use error::{Error, Result};
pub use highprec::Enclosure;
pub use prime_engine::{sieve, PrimeCache, PrimeTable};
pub use random_model::{SignAssignment, SignSource};
pub use scalar::Real;
pub use thin_sets::{Density, ErrorTermProfile, SetDescriptor, SetKind, Sign};
pub use zeta::{QuadraticCheck, RelationCheck, TruncationParams};

pub type CertifiedF64 = CertifiedValue<f64>;
pub type CertifiedF32 = CertifiedValue<f32>;
pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;

//! Exact and numerical tooling for GKZ hypergeometric data on the projective line.
//!
//! The exact side (integer/rational linear algebra, operator generation, lattice
//! volume, the curve-side rank prediction, and the twisted cokernel calculus) is
//! generic over [`scalar::ExactScalar`]; the numerical side (period integrals)
//! is generic over [`scalar::FloatScalar`]. The aliases below fix the default
//! instantiations used throughout the CLI and tests.

pub mod cokernel;
pub mod curve;
pub mod linalg;
pub mod periods;
pub mod scalar;
pub mod system;
pub mod volume;

pub use num_bigint::BigInt;
pub use num_complex::Complex;
pub use num_rational::Ratio;

/// Default exact integer.
pub type Int = BigInt;
/// Default exact rational.
pub type Rat = Ratio<Int>;
/// Default floating point scalar.
pub type Real = f64;
/// Default complex scalar.
pub type Cplx = Complex<Real>;

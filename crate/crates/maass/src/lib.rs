//! Maass waveforms of real weight for the eta multiplier on PSL(2,Z) and the
//! theta multiplier on Gamma0(4), computed with Hejhal's method.
//!
//! The exact layers (`arithmetic`, `multipliers`) are generic over the
//! integer type and `special_functions` over the floating type; the solver is
//! written against `f64`.

pub mod arithmetic;
pub mod geometry;
pub mod multipliers;
pub mod operators;
pub mod scalar;
pub mod solver;
pub mod special_functions;
pub mod spectra;

pub use num_bigint::BigInt;
pub use num_complex::Complex64;

/// Exact rational with arbitrary-precision parts.
pub type Rational = num_rational::BigRational;
/// Integer 2x2 matrix with arbitrary-precision entries.
pub type IntMatrix2 = arithmetic::Matrix2<BigInt>;
/// Whittaker evaluator in double precision.
pub type Whittaker = special_functions::WhittakerEvaluator<f64>;

//! Stratified Monte Carlo estimators of the supremum and the integral of a
//! function, their exact finite-sample laws for step-function integrands, and
//! decision procedures for the stochastic, convex and majorization orders
//! that compare them.
//!
//! The core is generic over [`Scalar`]; the aliases below fix the two
//! instantiations used in practice: exact rationals and `f64`.

pub mod error;
pub mod estimators;
pub mod exact_dist;
pub mod function_model;
pub mod cli;
pub mod measure_space;
pub mod orders;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Arbitrary-precision rational used by the exact engine.
pub type Rational = num_rational::BigRational;

pub type ExactPartition = measure_space::Partition<Rational>;
pub type ExactFn = function_model::PiecewiseConstantFn<Rational>;
pub type ExactDist = exact_dist::DiscreteDist<Rational>;
pub type ExactCensoredCdf = exact_dist::CensoredSupCdf<Rational>;
pub type ExactNoise = function_model::NoiseSpec<Rational>;

pub type FloatPartition = measure_space::Partition<f64>;
pub type FloatFn = function_model::PiecewiseConstantFn<f64>;
pub type FloatDist = exact_dist::DiscreteDist<f64>;

//! Share-constrained multi-resource allocation for network slices.
//!
//! [`model`] holds the instance description and weight policies, [`engines`]
//! the allocation disciplines.
//!
//! The exact parts are generic over [`Scalar`](scalar::Scalar) (floats and
//! rationals); the convex solvers need [`Real`](scalar::Real). The aliases
//! below fix the common choices.

pub mod analysis;
pub mod engines;
pub mod model;
pub mod oracle;
pub mod sampling;
pub mod scalar;
pub mod sim;

pub use num_rational::Ratio;

pub type Instance = model::Instance<f64>;
pub type InstanceSpec = model::InstanceSpec<f64>;
pub type ClassWeights = model::ClassWeights<f64>;
pub type Allocation = model::Allocation<f64>;
pub type SolveResult = engines::SolveResult<f64>;

/// Exact rational scalar for water-filling and weight policies.
pub type Rational = Ratio<i128>;
pub type RationalInstance = model::Instance<Rational>;
pub type RationalWeights = model::ClassWeights<Rational>;

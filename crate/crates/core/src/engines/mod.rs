//! Allocation disciplines.
//!
//! * [`solve_alpha_scs`]: share-constrained alpha-fair allocation, solved in
//!   the dual over resource prices.
//! * [`maxmin_waterfill`]: weighted max-min by progressive filling, the
//!   `alpha -> infinity` limit of the above.
//! * [`class_alpha_fair`]: the classical weighted alpha-fair baseline.
//! * [`static_partition`]: every slice confined to its share of each resource.
//! * [`drf_weights`], [`dps_weights`]: weightings fed to the water-fill.

mod convex;
mod linalg;
mod price;
mod waterfill;
mod weights;

pub use convex::{
    class_alpha_fair, solve_alpha_scs, solve_alpha_scs_warm, solve_capped, static_partition,
    PartitionResult,
};
pub use waterfill::{
    bottleneck_certificate, maxmin_waterfill, maxmin_waterfill_capped, CertificateViolation,
};
pub use weights::{dominant_share_factor, dps_weights, drf_unconstrained_weights, drf_weights};

use crate::model::{Allocation, ModelError};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on both the capacity violation and the complementary
    /// slackness residual `max_c (d_c^r nu_r / p_c) |1 - load_r|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `|alpha - 1|` below this uses the logarithmic (proportional-fair) form.
    pub log_switch: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100_000,
            log_switch: 1e-6,
        }
    }
}

impl SolverOptions {
    fn check(&self) -> Result<(), EngineError> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(EngineError::InvalidOptions);
        }
        Ok(())
    }
}

/// Optimality residuals of a solve, in unit-capacity terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    pub feasibility: f64,
    pub complementary_slackness: f64,
    pub stationarity: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.feasibility
            .max(self.complementary_slackness)
            .max(self.stationarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub allocation: Allocation<T>,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl<T> SolveResult<T> {
    pub fn rates(&self) -> &[T] {
        &self.allocation.rates
    }

    pub fn duals(&self) -> Option<&[T]> {
        self.allocation.duals.as_deref()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("all class weights are zero")]
    AllZeroWeights,
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("solver options out of range")]
    InvalidOptions,
    #[error(
        "price iteration did not converge after {iterations} iterations (residuals {residuals:?})"
    )]
    NonConvergence {
        iterations: usize,
        residuals: Residuals,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

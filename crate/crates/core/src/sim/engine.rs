use crate::engines::{
    dps_weights, drf_unconstrained_weights, drf_weights, maxmin_waterfill, solve_alpha_scs,
    solve_alpha_scs_warm, static_partition, EngineError, SolverOptions,
};
use crate::model::{scwa_weights, Instance, PopulationState, ScwaPolicy};
use std::fmt;

/// Allocation discipline driving a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EngineSpec {
    /// alpha-SCS with equal intra-slice weights.
    Scs { alpha: f64 },
    /// Weighted max-min water-filling with equal intra-slice weights.
    MaxminScs,
    /// Water-filling with dominant-resource weights.
    Drf,
    /// Water-filling with per-user share weights.
    Dps,
    /// Water-filling with per-user `s_v` times dominant-share weights.
    DrfUnconstrained,
    /// Each slice confined to its share of every resource.
    StaticPartition { alpha: f64 },
}

impl EngineSpec {
    /// Engine from its token; `alpha` is used by the alpha-parameterized
    /// engines only.
    pub fn parse(token: &str, alpha: f64) -> Option<Self> {
        Some(match token {
            "scs" => Self::Scs { alpha },
            "maxmin-scs" => Self::MaxminScs,
            "drf" => Self::Drf,
            "dps" => Self::Dps,
            "dps:drf_unconstrained" => Self::DrfUnconstrained,
            "static-partition" => Self::StaticPartition { alpha },
            _ => return None,
        })
    }

    pub const TOKENS: [&'static str; 6] = [
        "scs",
        "maxmin-scs",
        "drf",
        "dps",
        "dps:drf_unconstrained",
        "static-partition",
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Self::Scs { .. } => "scs",
            Self::MaxminScs => "maxmin-scs",
            Self::Drf => "drf",
            Self::Dps => "dps",
            Self::DrfUnconstrained => "dps:drf_unconstrained",
            Self::StaticPartition { .. } => "static-partition",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Self::Scs { alpha } | Self::StaticPartition { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Class rates for a population; also returns resource prices when the
    /// engine produces them (for warm starts).
    pub fn allocate(
        &self,
        instance: &Instance<f64>,
        pop: &PopulationState,
        warm: Option<&[f64]>,
        opts: &SolverOptions,
    ) -> Result<(Vec<f64>, Option<Vec<f64>>), EngineError> {
        if pop.counts.iter().all(|n| *n == 0) {
            return Ok((vec![0.0; instance.num_classes()], None));
        }
        let scwa = || scwa_weights(instance, pop, ScwaPolicy::EqualIntraSlice);
        Ok(match *self {
            Self::Scs { alpha } => {
                let q = scwa();
                let res = match warm.map(|p| solve_alpha_scs_warm(instance, &q, alpha, opts, p)) {
                    Some(Ok(res)) => res,
                    _ => solve_alpha_scs(instance, &q, alpha, opts)?,
                };
                (res.allocation.rates, res.allocation.duals)
            }
            Self::StaticPartition { alpha } => (
                static_partition(instance, &scwa(), alpha, opts)?.rates,
                None,
            ),
            Self::MaxminScs => (maxmin_waterfill(instance, &scwa()).allocation.rates, None),
            Self::Drf => (
                maxmin_waterfill(instance, &drf_weights(instance, pop))
                    .allocation
                    .rates,
                None,
            ),
            Self::Dps => (
                maxmin_waterfill(instance, &dps_weights(instance, pop))
                    .allocation
                    .rates,
                None,
            ),
            Self::DrfUnconstrained => (
                maxmin_waterfill(instance, &drf_unconstrained_weights(instance, pop))
                    .allocation
                    .rates,
                None,
            ),
        })
    }
}

impl fmt::Display for EngineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha() {
            Some(a) => write!(f, "{}(alpha={a})", self.token()),
            None => f.write_str(self.token()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_round_trip() {
        for t in EngineSpec::TOKENS {
            assert_eq!(EngineSpec::parse(t, 1.0).unwrap().token(), t);
        }
        assert_eq!(EngineSpec::parse("foo", 1.0), None);
    }
}

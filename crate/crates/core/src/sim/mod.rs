//! Event-driven simulation of elastic traffic on a sliced network.
//!
//! Users arrive per class as Poisson processes, carry a random workload and
//! share their class rate equally. Rates are piecewise constant between
//! events and re-solved (memoized per population vector) after each one.

mod allocator;
mod busy;
mod engine;
mod metrics;
mod replicate;
mod run;
mod stability;

pub use allocator::Allocator;
pub use busy::{busy_fractions, BusyFractions};
pub use engine::EngineSpec;
pub use metrics::{Metrics, SliceMetrics};
pub use replicate::{replicate, EngineSummary, Estimate};
pub use run::{
    run_simulation, ActiveUser, DepartureRecord, Event, EventKind, Horizon, ResidualMode,
    RunOutput, Scenario, SimState, Trace, TraceEvent,
};
pub use stability::{max_effective_load, stability_probe, StabilityReport, StabilityVerdict};

use crate::engines::EngineError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("engine failed at event {event}: {source}")]
    Engine {
        event: u64,
        #[source]
        source: EngineError,
    },
    #[error("allocation at event {event} overloads resource {resource} (usage {usage})")]
    Infeasible {
        event: u64,
        resource: usize,
        usage: f64,
    },
    #[error("user {user} left after {served} units of service, workload {workload}")]
    WorkConservation {
        user: u64,
        served: f64,
        workload: f64,
    },
    #[error("empty measurement window")]
    EmptyWindow,
    #[error("replication needs at least two seeds, got {0}")]
    TooFewSeeds(usize),
}

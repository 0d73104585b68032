use super::{run_simulation, EngineSpec, Metrics, Scenario, SimError};
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityVerdict {
    /// Fourth-quarter mean population at most 1.2 times the second.
    ConsistentWithStable,
    /// Ratio at least 2.
    Growing,
    Inconclusive,
}

impl StabilityVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ConsistentWithStable => "consistent-with-stable",
            Self::Growing => "growing",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `max_r sum_c rho_c d_c^r`.
    pub max_effective_load: f64,
    pub verdict: StabilityVerdict,
    /// Fourth- over second-quarter mean population.
    pub ratio: f64,
    pub metrics: Metrics,
}

/// `max_r sum_c rho_c d_c^r` with `rho_c = arrival rate * mean workload`.
pub fn max_effective_load(instance: &Instance<f64>) -> f64 {
    let mut load = vec![0.0; instance.num_resources()];
    for c in 0..instance.num_classes() {
        let rho = instance.traffic(c).intensity();
        for (l, d) in load.iter_mut().zip(instance.demand(c)) {
            *l += rho * d;
        }
    }
    load.into_iter().fold(0.0, f64::max)
}

/// Runs `scenario` under `engine` over the whole horizon (no warmup, so
/// the quarters split the full run) and compares the mean population of
/// the fourth quarter against the second.
pub fn stability_probe(
    scenario: &Scenario,
    engine: EngineSpec,
) -> Result<StabilityReport, SimError> {
    let mut sc = scenario.with_engine(engine);
    sc.warmup = 0.0;
    let out = run_simulation(&sc)?;
    let (q2, q4) = out.metrics.quarter_populations;
    let ratio = if q2 > 0.0 {
        q4 / q2
    } else if q4 > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(StabilityReport {
        max_effective_load: max_effective_load(&scenario.instance),
        verdict: out.metrics.stability,
        ratio,
        metrics: out.metrics,
    })
}

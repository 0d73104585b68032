use super::{run_simulation, EngineSpec, Metrics, Scenario, SimError};
use rayon::prelude::*;

/// Sample mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            half_width: 1.96 * (var / n).sqrt(),
            samples: xs.len(),
        }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn disjoint(&self, other: &Self) -> bool {
        self.hi() < other.lo() || other.hi() < self.lo()
    }
}

#[derive(Debug, Clone)]
pub struct EngineSummary {
    pub engine: EngineSpec,
    /// One run per seed, in seed order.
    pub runs: Vec<Metrics>,
    /// Every field of [`Metrics::named_values`].
    pub estimates: Vec<(String, Estimate)>,
}

impl EngineSummary {
    pub fn estimate(&self, name: &str) -> Option<Estimate> {
        self.estimates
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| *e)
    }
}

/// Runs every engine on every seed (in parallel) and summarizes each
/// engine's metrics across seeds.
pub fn replicate(
    scenario: &Scenario,
    engines: &[EngineSpec],
    seeds: &[u64],
) -> Result<Vec<EngineSummary>, SimError> {
    if seeds.len() < 2 {
        return Err(SimError::TooFewSeeds(seeds.len()));
    }
    let cells: Vec<(usize, u64)> = (0..engines.len())
        .flat_map(|e| seeds.iter().map(move |s| (e, *s)))
        .collect();
    let results: Vec<Metrics> = cells
        .par_iter()
        .map(|&(e, seed)| {
            let sc = scenario.with_engine(engines[e]).with_seed(seed);
            run_simulation(&sc).map(|o| o.metrics)
        })
        .collect::<Result<_, _>>()?;
    let slice_ids: Vec<String> = scenario
        .instance
        .slices()
        .iter()
        .map(|s| s.id.clone())
        .collect();
    Ok(engines
        .iter()
        .zip(results.chunks(seeds.len()))
        .map(|(engine, runs)| {
            let named: Vec<Vec<(String, f64)>> =
                runs.iter().map(|m| m.named_values(&slice_ids)).collect();
            let estimates = named[0]
                .iter()
                .enumerate()
                .map(|(i, (name, _))| {
                    let xs: Vec<f64> = named.iter().map(|row| row[i].1).collect();
                    (name.clone(), Estimate::from_samples(&xs))
                })
                .collect();
            EngineSummary {
                engine: *engine,
                runs: runs.to_vec(),
                estimates,
            }
        })
        .collect())
}

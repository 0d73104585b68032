use super::EngineSpec;
use crate::engines::{EngineError, SolverOptions};
use crate::model::{Instance, PopulationState};
use std::collections::HashMap;

/// Memoized class rates per population vector. Each distinct allocation
/// gets a stable id in order of first use.
pub struct Allocator<'a> {
    instance: &'a Instance<f64>,
    engine: EngineSpec,
    opts: SolverOptions,
    index: HashMap<Vec<u32>, usize>,
    rates: Vec<Vec<f64>>,
    last_prices: Option<Vec<f64>>,
}

impl<'a> Allocator<'a> {
    pub fn new(instance: &'a Instance<f64>, engine: EngineSpec, opts: SolverOptions) -> Self {
        Self {
            instance,
            engine,
            opts,
            index: HashMap::new(),
            rates: Vec::new(),
            last_prices: None,
        }
    }

    /// Allocation id and class rates for `counts`.
    pub fn get(&mut self, counts: &[u32]) -> Result<(usize, &[f64]), EngineError> {
        if let Some(&id) = self.index.get(counts) {
            return Ok((id, &self.rates[id]));
        }
        let pop = PopulationState::new(counts.to_vec());
        let (rates, prices) =
            self.engine
                .allocate(self.instance, &pop, self.last_prices.as_deref(), &self.opts)?;
        if prices.is_some() {
            self.last_prices = prices;
        }
        let id = self.rates.len();
        self.rates.push(rates);
        self.index.insert(counts.to_vec(), id);
        Ok((id, &self.rates[id]))
    }

    pub fn distinct(&self) -> usize {
        self.rates.len()
    }
}

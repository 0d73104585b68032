//! Property suites over random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scs_core::analysis::{
    elasticity_report, envy_report, factorize, protection_report, surrogate_report, AnalysisError,
};
use scs_core::engines::{solve_alpha_scs, SolverOptions};
use scs_core::model::PopulationState;
use scs_core::oracle::variational_check;
use scs_core::sampling::{
    random_instance, random_parallel_instance, random_scwa_weights, rescale_to_unit_demands,
    InstanceShape,
};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Protection,
    Envy,
    Surrogate,
    Factorization,
    Elasticity,
    Variational,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Protection,
        Suite::Envy,
        Suite::Surrogate,
        Suite::Factorization,
        Suite::Elasticity,
        Suite::Variational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Protection => "protection",
            Suite::Envy => "envy",
            Suite::Surrogate => "surrogate",
            Suite::Factorization => "factorization",
            Suite::Elasticity => "elasticity",
            Suite::Variational => "variational",
        }
    }

    pub fn default_instances(self) -> usize {
        match self {
            Suite::Protection | Suite::Envy => 500,
            Suite::Surrogate | Suite::Variational => 200,
            Suite::Factorization => 1000,
            Suite::Elasticity => 50,
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite: {s}"))
    }
}

/// Direction of a check: the worst value must stay above or below `limit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    AtLeast(f64),
    AtMost(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub limit: Limit,
}

impl Check {
    fn min(name: impl Into<String>, limit: f64) -> Self {
        Self {
            name: name.into(),
            worst: f64::INFINITY,
            limit: Limit::AtLeast(limit),
        }
    }

    fn max(name: impl Into<String>, limit: f64) -> Self {
        Self {
            name: name.into(),
            worst: f64::NEG_INFINITY,
            limit: Limit::AtMost(limit),
        }
    }

    fn observe(&mut self, x: f64) {
        self.worst = match self.limit {
            Limit::AtLeast(_) => self.worst.min(x),
            Limit::AtMost(_) => self.worst.max(x),
        };
    }

    pub fn passed(&self) -> bool {
        match self.limit {
            Limit::AtLeast(l) => self.worst >= l,
            Limit::AtMost(l) => self.worst <= l,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, l) = match self.limit {
            Limit::AtLeast(l) => (">=", l),
            Limit::AtMost(l) => ("<=", l),
        };
        write!(
            f,
            "{:<44} worst {:>12.4e}  (need {op} {l:e})  {}",
            self.name,
            self.worst,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suite: Suite,
    pub instances: usize,
    pub meta_seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "suite {} ({} instances, meta-seed {})",
            self.suite.name(),
            self.instances,
            self.meta_seed
        )?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Runs `suite` over `instances` random cases drawn from `meta_seed`.
pub fn run_suite(
    suite: Suite,
    instances: usize,
    meta_seed: u64,
) -> Result<VerifyReport, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(meta_seed);
    let shape = InstanceShape::default();
    let opts = SolverOptions::default();
    let checks = match suite {
        Suite::Protection => {
            let mut at_one = Check::min("alpha=1 slice utility gain (slack)", -1e-9);
            let mut half = Check::min("alpha=0.5 partition gain bound (slack)", -1e-6);
            let mut two = Check::min("alpha=2 partition gain bound (slack)", -1e-6);
            for _ in 0..instances {
                let inst = random_instance(&mut rng, &shape);
                let q = random_scwa_weights(&mut rng, &inst);
                for (alpha, check) in [(1.0, &mut at_one), (0.5, &mut half), (2.0, &mut two)] {
                    for rep in protection_report(&inst, &q, alpha, &opts)? {
                        check.observe(rep.slack);
                    }
                }
            }
            vec![at_one, half, two]
        }
        Suite::Envy => {
            let mut checks: Vec<Check> = [0.5, 1.0, 2.0]
                .iter()
                .map(|a| Check::min(format!("alpha={a} envy bound (slack)"), -1e-6))
                .collect();
            let mut identity = Check::max("alpha=1 bound minus share difference", 1e-9);
            for _ in 0..instances {
                let inst = random_instance(&mut rng, &shape);
                let q = random_scwa_weights(&mut rng, &inst);
                let nv = inst.num_slices();
                for (k, alpha) in [0.5, 1.0, 2.0].into_iter().enumerate() {
                    for v in 0..nv {
                        for w in (0..nv).filter(|&w| w != v) {
                            let rep = envy_report(&inst, &q, alpha, v, w, &opts)?;
                            checks[k].observe(rep.slack);
                            if alpha == 1.0 {
                                identity
                                    .observe((rep.bound - (inst.share(w) - inst.share(v))).abs());
                            }
                        }
                    }
                }
            }
            checks.push(identity);
            checks
        }
        Suite::Surrogate => {
            let tight = SolverOptions {
                tolerance: 1e-13,
                ..opts
            };
            let mut lower = Check::min("surrogate loss (non-negative)", -1e-12);
            let mut upper = Check::min("surrogate loss bound (slack)", -1e-6);
            for _ in 0..instances {
                let inst = rescale_to_unit_demands(&random_instance(&mut rng, &shape));
                let q = random_scwa_weights(&mut rng, &inst);
                let rep = surrogate_report(&inst, &q, &tight)?;
                lower.observe(rep.bound.gap);
                upper.observe(rep.bound.slack);
            }
            vec![lower, upper]
        }
        Suite::Factorization => {
            let mut err = Check::max("relative reconstruction error", 1e-8);
            let mut sum = Check::max("|sum of slice weights - 1|", 1e-12);
            for _ in 0..instances {
                let n = rng.random_range(2..=6);
                let nv = rng.random_range(1..=3usize.min(n));
                let slice_of: Vec<usize> = (0..n)
                    .map(|c| if c < nv { c } else { rng.random_range(0..nv) })
                    .collect();
                let raw: Vec<f64> = (0..nv).map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let shares: Vec<f64> = raw.iter().map(|x| x / total).collect();
                let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
                let mut sums = vec![0.0; nv];
                for c in 0..n {
                    sums[slice_of[c]] += w[c];
                }
                let q: Vec<f64> = (0..n)
                    .map(|c| shares[slice_of[c]] * w[c] / sums[slice_of[c]])
                    .collect();
                let phi: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..2.0)).collect();
                let alpha = rng.random_range(0.1..5.0);
                let rep = factorize(&phi, &q, &slice_of, &shares, alpha)?;
                err.observe(rep.relative_error);
                sum.observe((rep.slice_weights.iter().sum::<f64>() - 1.0).abs());
            }
            vec![err, sum]
        }
        Suite::Elasticity => {
            let mut drops = Check::max("non-monotone rate sequences", 0.0);
            let mut prop = Check::max("proportional split error", 1e-6);
            for _ in 0..instances {
                let inst = random_parallel_instance(&mut rng, &shape);
                let base = PopulationState::new(
                    (0..inst.num_classes())
                        .map(|_| rng.random_range(1..=3))
                        .collect(),
                );
                let c = rng.random_range(0..inst.num_classes());
                let mut bad = 0.0;
                for alpha in [0.5, 1.0, 2.0] {
                    let rep = elasticity_report(&inst, &base, c, 10, alpha, &opts)?;
                    if !rep.monotone {
                        bad += 1.0;
                    }
                    prop.observe(rep.proportionality_error);
                }
                drops.observe(bad);
            }
            vec![drops, prop]
        }
        Suite::Variational => {
            let mut checks: Vec<Check> = [0.5, 1.0, 2.0]
                .iter()
                .map(|a| Check::max(format!("alpha={a} first-order residual"), 1e-6))
                .collect();
            for i in 0..instances {
                let inst = random_instance(&mut rng, &shape);
                let q = random_scwa_weights(&mut rng, &inst);
                for (k, alpha) in [0.5, 1.0, 2.0].into_iter().enumerate() {
                    let sol = solve_alpha_scs(&inst, &q, alpha, &opts)?;
                    let rep = variational_check(&inst, sol.rates(), &q, alpha, 200, i as u64);
                    checks[k].observe(rep.worst);
                }
            }
            checks
        }
    };
    Ok(VerifyReport {
        suite,
        instances,
        meta_seed,
        checks,
    })
}

use super::price::PriceProblem;
use super::{EngineError, Residuals, SolveResult, SolverOptions};
use crate::model::{Allocation, ClassWeights, Instance};
use crate::scalar::Real;

/// Share-constrained alpha-fair allocation on unit capacities.
pub fn solve_alpha_scs<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    alpha: T,
    opts: &SolverOptions,
) -> Result<SolveResult<T>, EngineError> {
    if q.is_all_zero() {
        return Err(EngineError::AllZeroWeights);
    }
    let caps = vec![T::one(); instance.num_resources()];
    solve_capped(instance, q, alpha, &caps, None, opts, None)
}

/// As [`solve_alpha_scs`], starting the price iteration from `prices`
/// (typically the duals of a neighbouring population).
pub fn solve_alpha_scs_warm<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    alpha: T,
    opts: &SolverOptions,
    prices: &[T],
) -> Result<SolveResult<T>, EngineError> {
    if q.is_all_zero() {
        return Err(EngineError::AllZeroWeights);
    }
    let caps = vec![T::one(); instance.num_resources()];
    solve_capped(instance, q, alpha, &caps, None, opts, Some(prices))
}

/// Weighted alpha-fair utility `sum_c q_c phi_c^(1-alpha) / (1-alpha)`.
///
/// Its optimum is the SCS optimum for weights `q^(1/alpha)`, so it reuses
/// the same price solver.
pub fn class_alpha_fair<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    alpha: T,
    opts: &SolverOptions,
) -> Result<SolveResult<T>, EngineError> {
    check_alpha(alpha)?;
    if q.is_all_zero() {
        return Err(EngineError::AllZeroWeights);
    }
    let w: Vec<T> = q
        .values()
        .iter()
        .map(|v| {
            if *v > T::zero() {
                v.powf(T::one() / alpha)
            } else {
                T::zero()
            }
        })
        .collect();
    let caps = vec![T::one(); instance.num_resources()];
    solve_weighted(instance, &w, alpha, &caps, None, opts, None)
}

/// SCS problem restricted to the classes in `include` (all when `None`)
/// against per-resource capacities `caps`.
///
/// Classes that need a zero-capacity resource are pinned at zero rate.
/// Returned duals are in the units of `caps`.
pub fn solve_capped<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    alpha: T,
    caps: &[T],
    include: Option<&[bool]>,
    opts: &SolverOptions,
    warm: Option<&[T]>,
) -> Result<SolveResult<T>, EngineError> {
    solve_weighted(instance, q.values(), alpha, caps, include, opts, warm)
}

fn check_alpha<T: Real>(alpha: T) -> Result<(), EngineError> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(EngineError::InvalidAlpha(alpha.as_f64()));
    }
    Ok(())
}

fn solve_weighted<T: Real>(
    instance: &Instance<T>,
    w: &[T],
    alpha: T,
    caps: &[T],
    include: Option<&[bool]>,
    opts: &SolverOptions,
    warm: Option<&[T]>,
) -> Result<SolveResult<T>, EngineError> {
    opts.check()?;
    check_alpha(alpha)?;
    let nc = instance.num_classes();
    let nr = instance.num_resources();
    if w.len() != nc || caps.len() != nr || include.is_some_and(|m| m.len() != nc) {
        return Err(EngineError::InvalidOptions);
    }

    let participates = |c: usize| {
        w[c] > T::zero()
            && include.is_none_or(|m| m[c])
            && instance.resources_of(c).all(|r| caps[r] > T::zero())
    };
    let members: Vec<usize> = (0..nc).filter(|&c| participates(c)).collect();

    let mut local = vec![usize::MAX; nr];
    let mut global = Vec::new();
    for &c in &members {
        for r in instance.resources_of(c) {
            if local[r] == usize::MAX {
                local[r] = global.len();
                global.push(r);
            }
        }
    }
    let demand: Vec<Vec<(usize, T)>> = members
        .iter()
        .map(|&c| {
            instance
                .resources_of(c)
                .map(|r| (local[r], instance.demand(c)[r] / caps[r]))
                .collect()
        })
        .collect();
    let weights: Vec<T> = members.iter().map(|&c| w[c]).collect();
    let log_form = (alpha.as_f64() - 1.0).abs() < opts.log_switch;
    let problem = PriceProblem::new(demand, weights, global.len(), alpha, log_form);

    let start: Option<Vec<T>> = warm
        .filter(|p| p.len() == nr)
        .map(|p| global.iter().map(|&r| p[r] * caps[r]).collect());
    let sol = problem.solve(start.as_deref(), opts)?;

    let mut rates = vec![T::zero(); nc];
    for (&c, phi) in members.iter().zip(&sol.rates) {
        rates[c] = *phi;
    }
    // Newton stops within tolerance of the capacity; pull the last bit of
    // overshoot back so the result is feasible outright.
    let mut peak = T::zero();
    for (r, cap) in caps.iter().enumerate() {
        if *cap > T::zero() {
            let load = instance
                .classes_using(r)
                .fold(T::zero(), |a, c| a + instance.demand(c)[r] * rates[c])
                / *cap;
            peak = peak.max(load);
        }
    }
    let mut residuals = sol.residuals;
    if peak > T::one() {
        for phi in rates.iter_mut() {
            *phi /= peak;
        }
        residuals = Residuals {
            stationarity: residuals.stationarity.max(peak.as_f64() - 1.0),
            ..residuals
        };
    }

    let mut duals = vec![T::zero(); nr];
    for (i, &r) in global.iter().enumerate() {
        duals[r] = sol.prices[i] / caps[r];
    }
    Ok(SolveResult {
        allocation: Allocation {
            rates,
            duals: Some(duals),
            bottlenecks: None,
        },
        iterations: sol.iterations,
        residuals,
    })
}

/// Per-slice results of static partitioning and the combined rate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult<T> {
    pub per_slice: Vec<SolveResult<T>>,
    pub rates: Vec<T>,
}

/// Every slice solves its own SCS problem inside a `s_v` fraction of
/// every resource.
pub fn static_partition<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    alpha: T,
    opts: &SolverOptions,
) -> Result<PartitionResult<T>, EngineError> {
    let nc = instance.num_classes();
    let mut per_slice = Vec::with_capacity(instance.num_slices());
    let mut rates = vec![T::zero(); nc];
    for v in 0..instance.num_slices() {
        let caps = vec![instance.share(v); instance.num_resources()];
        let mask: Vec<bool> = (0..nc).map(|c| instance.slice_of(c) == v).collect();
        let res = solve_capped(instance, q, alpha, &caps, Some(&mask), opts, None)?;
        for c in instance.classes_of_slice(v) {
            rates[c] = res.allocation.rates[c];
        }
        per_slice.push(res);
    }
    Ok(PartitionResult { per_slice, rates })
}

//! Fairness measures and numeric checks of the protection, envy-freeness,
//! surrogate and elasticity properties of share-constrained allocation.

use crate::engines::{
    maxmin_waterfill, solve_alpha_scs, solve_capped, static_partition, EngineError, SolverOptions,
};
use crate::model::{scwa_weights, ClassWeights, Instance, PopulationState, ScwaPolicy};
use crate::scalar::{lit, Real};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("vectors have different lengths ({0} vs {1})")]
    Length(usize, usize),
    #[error("{which} sums to {sum}, expected 1")]
    NotNormalized { which: &'static str, sum: f64 },
    #[error("slice {slice} has zero aggregate rate")]
    ZeroSliceAggregate { slice: usize },
    #[error("weights of slice {slice} sum to {got}, share is {share}")]
    NotShareConstrained { slice: usize, got: f64, share: f64 },
    #[error(
        "class {class} has demand {demand} < 1 on resource {resource}; rescale rate units first"
    )]
    DemandBelowOne {
        class: usize,
        resource: usize,
        demand: f64,
    },
    #[error("unknown slice index {0}")]
    UnknownSlice(usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

fn is_one(alpha: f64) -> bool {
    (alpha - 1.0).abs() < 1e-12
}

/// Closeness of a normalized vector `x` to a normalized vector `y`:
/// `exp(-KL(x || y))` at `alpha = 1`, `(sum_i x_i (y_i/x_i)^(1-alpha))^(1/alpha)`
/// otherwise. Terms with `x_i = 0` vanish.
pub fn f_alpha<T: Real>(x: &[T], y: &[T], alpha: T) -> Result<T, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::Length(x.len(), y.len()));
    }
    for (which, v) in [("x", x), ("y", y)] {
        let sum = v.iter().fold(T::zero(), |a, b| a + *b).as_f64();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(AnalysisError::NotNormalized { which, sum });
        }
    }
    Ok(f_alpha_unchecked(x, y, alpha))
}

fn f_alpha_unchecked<T: Real>(x: &[T], y: &[T], alpha: T) -> T {
    let pairs = x.iter().zip(y).filter(|(a, _)| **a > T::zero());
    if is_one(alpha.as_f64()) {
        let kl = pairs.fold(T::zero(), |acc, (a, b)| acc + *a * (*a / *b).ln());
        (-kl).exp()
    } else {
        let sum = pairs.fold(T::zero(), |acc, (a, b)| {
            acc + (alpha * a.ln() + (T::one() - alpha) * b.ln()).exp()
        });
        sum.powf(T::one() / alpha)
    }
}

/// Per-slice utilities `U^v = sum_{c in v} q_c (phi_c/q_c)^(1-alpha)/(1-alpha)`
/// (`q_c log(phi_c/q_c)` at `alpha = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SliceUtilities {
    pub alpha: f64,
    pub per_slice: Vec<f64>,
}

impl SliceUtilities {
    /// Sum over slices (the log form at `alpha = 1`).
    pub fn total(&self) -> f64 {
        self.per_slice.iter().sum()
    }

    /// The combined criterion: `exp(total)` at `alpha = 1`, `total` otherwise.
    pub fn combined(&self) -> f64 {
        if is_one(self.alpha) {
            self.total().exp()
        } else {
            self.total()
        }
    }
}

fn class_utility<T: Real>(phi: T, q: T, alpha: T) -> f64 {
    if !(q > T::zero()) {
        return 0.0;
    }
    let a = alpha.as_f64();
    if !(phi > T::zero()) {
        // Zero rate: -inf for alpha >= 1, zero below.
        return if a >= 1.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    let ratio = phi / q;
    if is_one(a) {
        (q * ratio.ln()).as_f64()
    } else {
        (q * ratio.powf(T::one() - alpha) / (T::one() - alpha)).as_f64()
    }
}

pub fn utility<T: Real>(
    instance: &Instance<T>,
    phi: &[T],
    q: &ClassWeights<T>,
    alpha: T,
) -> SliceUtilities {
    let mut per_slice = vec![0.0; instance.num_slices()];
    for c in 0..instance.num_classes() {
        per_slice[instance.slice_of(c)] += class_utility(phi[c], q.get(c), alpha);
    }
    SliceUtilities {
        alpha: alpha.as_f64(),
        per_slice,
    }
}

/// Utility of one slice, counting only its own classes.
pub fn slice_utility<T: Real>(
    instance: &Instance<T>,
    phi: &[T],
    q: &ClassWeights<T>,
    alpha: T,
    slice: usize,
) -> f64 {
    instance
        .classes_of_slice(slice)
        .map(|c| class_utility(phi[c], q.get(c), alpha))
        .sum()
}

/// Decomposition of the combined utility into efficiency, inter-slice
/// fairness and intra-slice fairness.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    pub lambda: f64,
    pub efficiency: f64,
    pub f_inter: f64,
    pub f_intra: f64,
    /// Fairness weight of each slice; sums to one.
    pub slice_weights: Vec<f64>,
    /// `efficiency * (f_inter * f_intra)^alpha`.
    pub reconstructed: f64,
    /// The combined utility evaluated directly.
    pub direct: f64,
    pub relative_error: f64,
}

/// Factorizes the combined utility of `phi` under weights `q`.
///
/// `q` must be share-constrained with every slice active
/// (`sum_{c in v} q_c = s_v`), which makes `sum_c q_c = 1`. The closeness
/// terms compare weights against rates: inter-slice `f(s; gamma~)`, and per
/// slice `f(q~^v; phi~^v)`; in that argument order the identity is exact.
pub fn factorize<T: Real>(
    phi: &[T],
    q: &[T],
    slice_of: &[usize],
    shares: &[T],
    alpha: T,
) -> Result<FactorizationReport, AnalysisError> {
    let n = phi.len();
    if q.len() != n {
        return Err(AnalysisError::Length(n, q.len()));
    }
    if slice_of.len() != n {
        return Err(AnalysisError::Length(n, slice_of.len()));
    }
    let nv = shares.len();
    if let Some(&v) = slice_of.iter().find(|&&v| v >= nv) {
        return Err(AnalysisError::UnknownSlice(v));
    }
    let mut gamma = vec![T::zero(); nv];
    let mut qsum = vec![T::zero(); nv];
    for c in 0..n {
        gamma[slice_of[c]] += phi[c];
        qsum[slice_of[c]] += q[c];
    }
    for v in 0..nv {
        if !(gamma[v] > T::zero()) {
            return Err(AnalysisError::ZeroSliceAggregate { slice: v });
        }
        if (qsum[v] - shares[v]).abs().as_f64() > NORMALIZATION_TOLERANCE {
            return Err(AnalysisError::NotShareConstrained {
                slice: v,
                got: qsum[v].as_f64(),
                share: shares[v].as_f64(),
            });
        }
    }
    let lambda = gamma.iter().fold(T::zero(), |a, b| a + *b);
    let gamma_n: Vec<T> = gamma.iter().map(|g| *g / lambda).collect();
    let one = T::one();
    let log_form = is_one(alpha.as_f64());

    let f_inter = f_alpha_unchecked(shares, &gamma_n, alpha);
    let raw_t: Vec<T> = (0..nv)
        .map(|v| {
            if log_form {
                shares[v]
            } else {
                (alpha * shares[v].ln() + (one - alpha) * gamma_n[v].ln()).exp()
            }
        })
        .collect();
    let t_total = raw_t.iter().fold(T::zero(), |a, b| a + *b);
    let t: Vec<T> = raw_t.iter().map(|x| *x / t_total).collect();

    let mut intra = Vec::with_capacity(nv);
    for v in 0..nv {
        let members: Vec<usize> = (0..n).filter(|&c| slice_of[c] == v).collect();
        let qn: Vec<T> = members.iter().map(|&c| q[c] / shares[v]).collect();
        let pn: Vec<T> = members.iter().map(|&c| phi[c] / gamma[v]).collect();
        intra.push(f_alpha_unchecked(&qn, &pn, alpha));
    }
    let f_intra = if log_form {
        t.iter()
            .zip(&intra)
            .fold(T::zero(), |a, (tv, f)| a + *tv * f.ln())
            .exp()
    } else {
        t.iter()
            .zip(&intra)
            .fold(T::zero(), |a, (tv, f)| a + *tv * f.powf(alpha))
            .powf(one / alpha)
    };

    let (efficiency, reconstructed, direct, relative_error) = if log_form {
        let log_direct = (0..n)
            .filter(|&c| q[c] > T::zero())
            .fold(T::zero(), |a, c| a + q[c] * (phi[c] / q[c]).ln());
        let log_recon = lambda.ln() + f_inter.ln() + f_intra.ln();
        (
            lambda,
            log_recon.exp(),
            log_direct.exp(),
            (log_recon - log_direct).exp_m1().abs(),
        )
    } else {
        let efficiency = lambda.powf(one - alpha) / (one - alpha);
        let direct = (0..n)
            .filter(|&c| q[c] > T::zero())
            .fold(T::zero(), |a, c| {
                a + (alpha * q[c].ln() + (one - alpha) * phi[c].ln()).exp()
            })
            / (one - alpha);
        let reconstructed = efficiency * (f_inter * f_intra).powf(alpha);
        (
            efficiency,
            reconstructed,
            direct,
            ((reconstructed - direct) / direct).abs(),
        )
    };

    Ok(FactorizationReport {
        lambda: lambda.as_f64(),
        efficiency: efficiency.as_f64(),
        f_inter: f_inter.as_f64(),
        f_intra: f_intra.as_f64(),
        slice_weights: t.iter().map(|x| x.as_f64()).collect(),
        reconstructed: reconstructed.as_f64(),
        direct: direct.as_f64(),
        relative_error: relative_error.as_f64(),
    })
}

/// A measured utility gap against a theoretical upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub alpha: f64,
    pub slice: String,
    pub other: Option<String>,
    pub gap: f64,
    pub bound: f64,
    /// `bound - gap`; `+inf` when the compared allocation has `-inf` utility.
    pub slack: f64,
}

impl BoundReport {
    fn new(alpha: f64, slice: String, other: Option<String>, gap: f64, bound: f64) -> Self {
        let slack = if gap == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            bound - gap
        };
        Self {
            alpha,
            slice,
            other,
            gap,
            bound,
            slack,
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

/// `sum_{c in classes} q_c (sum_r d_c^r nu_r)^((alpha-1)/alpha)`, in log space.
fn charged_weight<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    prices: &[T],
    alpha: T,
    classes: impl Iterator<Item = usize>,
) -> f64 {
    let expo = (alpha - T::one()) / alpha;
    classes
        .filter(|&c| q.get(c) > T::zero())
        .map(|c| {
            let p = instance
                .demand(c)
                .iter()
                .zip(prices)
                .fold(T::zero(), |a, (d, nu)| a + *d * *nu);
            (q.get(c) * (expo * p.ln()).exp()).as_f64()
        })
        .sum()
}

/// Per slice: utility under static partitioning minus utility under SCS,
/// against the shadow-price bound `s_v sum_c q_c p_c - sum_{c in v} q_c p_c`
/// with `p_c = (sum_r d_c^r nu_r*)^((alpha-1)/alpha)`. At `alpha = 1` the
/// bound is zero.
pub fn protection_report<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    alpha: T,
    opts: &SolverOptions,
) -> Result<Vec<BoundReport>, AnalysisError> {
    let scs = solve_alpha_scs(instance, q, alpha, opts)?;
    let part = static_partition(instance, q, alpha, opts)?;
    let prices = scs.duals().expect("price solver returns duals");
    let everyone = charged_weight(instance, q, prices, alpha, 0..instance.num_classes());
    Ok((0..instance.num_slices())
        .map(|v| {
            let gap = slice_utility(instance, &part.rates, q, alpha, v)
                - slice_utility(instance, scs.rates(), q, alpha, v);
            let own = charged_weight(instance, q, prices, alpha, instance.classes_of_slice(v));
            let bound = instance.share(v).as_f64() * everyone - own;
            BoundReport::new(
                alpha.as_f64(),
                instance.slices()[v].id.clone(),
                None,
                gap,
                bound,
            )
        })
        .collect())
}

/// Slice `v` re-optimized inside the resources slice `other` holds under
/// SCS, against the bound `sum_{c in other} q_c p_c - sum_{c in v} q_c p_c`
/// (`s_other - s_v` at `alpha = 1`).
pub fn envy_report<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    alpha: T,
    v: usize,
    other: usize,
    opts: &SolverOptions,
) -> Result<BoundReport, AnalysisError> {
    let nv = instance.num_slices();
    for s in [v, other] {
        if s >= nv {
            return Err(AnalysisError::UnknownSlice(s));
        }
    }
    let scs = solve_alpha_scs(instance, q, alpha, opts)?;
    let mut caps = vec![T::zero(); instance.num_resources()];
    for c in instance.classes_of_slice(other) {
        for (cap, d) in caps.iter_mut().zip(instance.demand(c)) {
            *cap += *d * scs.rates()[c];
        }
    }
    let mask: Vec<bool> = (0..instance.num_classes())
        .map(|c| instance.slice_of(c) == v)
        .collect();
    let swapped = solve_capped(instance, q, alpha, &caps, Some(&mask), opts, None)?;
    let gap = slice_utility(instance, swapped.rates(), q, alpha, v)
        - slice_utility(instance, scs.rates(), q, alpha, v);
    let prices = scs.duals().expect("price solver returns duals");
    let bound = charged_weight(instance, q, prices, alpha, instance.classes_of_slice(other))
        - charged_weight(instance, q, prices, alpha, instance.classes_of_slice(v));
    Ok(BoundReport::new(
        alpha.as_f64(),
        instance.slices()[v].id.clone(),
        Some(instance.slices()[other].id.clone()),
        gap,
        bound,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateReport {
    /// `Psi(phi^1) - Psi(phi^inf)` against `sum_c q_c D_c - sum_c q_c`.
    pub bound: BoundReport,
    /// `max_c D_c - 1`, the bound's ceiling when the weights sum to one.
    pub cap: f64,
}

/// Loss in `Psi = sum_c q_c log phi_c` from using the weighted max-min
/// allocation in place of the proportionally fair one.
///
/// Requires every positive demand to be at least one.
pub fn surrogate_report<T: Real>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    opts: &SolverOptions,
) -> Result<SurrogateReport, AnalysisError> {
    for c in 0..instance.num_classes() {
        for r in instance.resources_of(c) {
            let d = instance.demand(c)[r];
            if d < T::one() - lit(1e-12) {
                return Err(AnalysisError::DemandBelowOne {
                    class: c,
                    resource: r,
                    demand: d.as_f64(),
                });
            }
        }
    }
    let pf = solve_alpha_scs(instance, q, T::one(), opts)?;
    let wf = maxmin_waterfill(instance, q);
    let psi = |phi: &[T]| -> f64 {
        (0..instance.num_classes())
            .filter(|&c| q.get(c) > T::zero())
            .map(|c| (q.get(c) * phi[c].ln()).as_f64())
            .sum()
    };
    let gap = psi(pf.rates()) - psi(wf.rates());
    let weighted: Vec<usize> = (0..instance.num_classes())
        .filter(|&c| q.get(c) > T::zero())
        .collect();
    let bound: f64 = weighted
        .iter()
        .map(|&c| (q.get(c) * (instance.total_demand(c) - T::one())).as_f64())
        .sum();
    let cap = weighted
        .iter()
        .map(|&c| instance.total_demand(c).as_f64() - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SurrogateReport {
        bound: BoundReport::new(1.0, "all".into(), None, gap, bound),
        cap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityReport {
    pub class: usize,
    /// `phi_c` for `n_c = 1, 2, ...`.
    pub rates: Vec<f64>,
    pub monotone: bool,
    /// Largest absolute difference between each class's share of a
    /// resource and the share predicted from its weight.
    pub proportionality_error: f64,
}

/// Sweeps the population of `class` from 1 to `max_n` (other counts fixed)
/// under equal intra-slice weights.
///
/// On instances where every class uses a single resource, resource `r`
/// splits as `q_c d_c^(1-1/alpha)`; at `alpha = 1` this is `s_v n_c / n^v`.
/// The reported proportionality error compares against that split.
pub fn elasticity_report<T: Real>(
    instance: &Instance<T>,
    base: &PopulationState,
    class: usize,
    max_n: u32,
    alpha: T,
    opts: &SolverOptions,
) -> Result<ElasticityReport, AnalysisError> {
    let mut rates = Vec::with_capacity(max_n as usize);
    let mut error = 0.0f64;
    let expo = T::one() - T::one() / alpha;
    for n in 1..=max_n {
        let mut pop = base.clone();
        pop.counts[class] = n;
        let q = scwa_weights(instance, &pop, ScwaPolicy::EqualIntraSlice);
        let res = solve_alpha_scs(instance, &q, alpha, opts)?;
        let phi = res.rates();
        rates.push(phi[class].as_f64());
        let usage = instance.usage(phi);
        for r in 0..instance.num_resources() {
            let on: Vec<usize> = instance
                .classes_using(r)
                .filter(|&c| q.get(c) > T::zero())
                .collect();
            let score = |c: usize| q.get(c) * instance.demand(c)[r].powf(expo);
            let total = on.iter().fold(T::zero(), |a, &c| a + score(c));
            for &c in &on {
                let predicted = score(c) / total * usage[r];
                let actual = instance.demand(c)[r] * phi[c];
                error = error.max((actual - predicted).abs().as_f64());
            }
        }
    }
    let monotone = rates.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    Ok(ElasticityReport {
        class,
        rates,
        monotone,
        proportionality_error: error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::table1_instance;

    #[test]
    fn f_alpha_values() {
        let x = [0.5, 0.5];
        let y = [0.25, 0.75];
        assert!((f_alpha(&x, &y, 2.0).unwrap() - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((f_alpha(&x, &y, 1.0).unwrap() - (4.0f64 / 3.0).powf(-0.5)).abs() < 1e-12);
        for a in [0.3, 1.0, 2.0, 7.0] {
            assert!((f_alpha(&y, &y, a).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn f_alpha_rejects_bad_input() {
        assert_eq!(
            f_alpha(&[0.5, 0.5], &[1.0], 1.0),
            Err(AnalysisError::Length(2, 1))
        );
        assert!(matches!(
            f_alpha(&[0.5, 0.6], &[0.5, 0.5], 1.0),
            Err(AnalysisError::NotNormalized { which: "x", .. })
        ));
    }

    #[test]
    fn aligned_rates_have_zero_log_utility() {
        let inst = table1_instance::<f64>();
        let q = ClassWeights::exogenous(&inst, vec![0.25, 0.25, 0.5]).unwrap();
        let u = utility(&inst, q.values(), &q, 1.0);
        assert_eq!(u.per_slice, vec![0.0, 0.0]);
        let u2 = utility(&inst, q.values(), &q, 2.0);
        assert!((u2.per_slice[0] + 0.5).abs() < 1e-15 && (u2.per_slice[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn table1_utilities() {
        let inst = table1_instance::<f64>();
        let q = ClassWeights::exogenous(&inst, vec![0.25, 0.25, 0.5]).unwrap();
        let u = utility(&inst, &[0.4, 1.0 / 3.0, 2.0 / 3.0], &q, 1.0);
        let want1 = 0.25 * 1.6f64.ln() + 0.25 * (4.0f64 / 3.0).ln();
        let want2 = 0.5 * (4.0f64 / 3.0).ln();
        assert!((u.per_slice[0] - want1).abs() < 1e-15);
        assert!((u.per_slice[1] - want2).abs() < 1e-15);
        assert!((u.combined() - (want1 + want2).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_is_minus_infinity() {
        let inst = table1_instance::<f64>();
        let q = ClassWeights::exogenous(&inst, vec![0.25, 0.25, 0.5]).unwrap();
        let u = utility(&inst, &[0.0, 0.5, 0.5], &q, 1.0);
        assert_eq!(u.per_slice[0], f64::NEG_INFINITY);
        let u = utility(&inst, &[0.0, 0.5, 0.5], &q, 0.5);
        assert!(u.per_slice[0].is_finite());
    }

    #[test]
    fn aligned_factorization() {
        let q = [0.2, 0.3, 0.5];
        let slice_of = [0, 0, 1];
        let shares = [0.5, 0.5];
        for alpha in [0.5, 1.0, 2.0] {
            let phi: Vec<f64> = q.iter().map(|x| x * 1.7).collect();
            let rep = factorize(&phi, &q, &slice_of, &shares, alpha).unwrap();
            assert!((rep.f_inter - 1.0).abs() < 1e-12);
            assert!((rep.f_intra - 1.0).abs() < 1e-12);
            assert!((rep.reconstructed - rep.efficiency).abs() < 1e-12 * rep.efficiency.abs());
            assert!(rep.relative_error < 1e-12);
        }
    }

    #[test]
    fn factorization_needs_share_constrained_weights() {
        assert!(matches!(
            factorize(&[0.5, 0.5], &[0.3, 0.3], &[0, 1], &[0.5, 0.5], 1.0),
            Err(AnalysisError::NotShareConstrained { .. })
        ));
        assert!(matches!(
            factorize(&[0.0, 0.5], &[0.5, 0.5], &[0, 1], &[0.5, 0.5], 1.0),
            Err(AnalysisError::ZeroSliceAggregate { slice: 0 })
        ));
    }

    #[test]
    fn table1_protection_and_envy() {
        let inst = table1_instance::<f64>();
        let q = ClassWeights::exogenous(&inst, vec![0.25, 0.25, 0.5]).unwrap();
        let opts = SolverOptions::default();
        for rep in protection_report(&inst, &q, 1.0, &opts).unwrap() {
            assert!(rep.gap <= 1e-9, "{rep:?}");
            assert!(rep.bound.abs() < 1e-12);
        }
        let envy = envy_report(&inst, &q, 1.0, 0, 1, &opts).unwrap();
        assert!(envy.bound.abs() < 1e-12 && envy.holds(1e-9), "{envy:?}");
    }

    #[test]
    fn surrogate_refuses_small_demands() {
        let inst = table1_instance::<f64>();
        let q = ClassWeights::exogenous(&inst, vec![0.25, 0.25, 0.5]).unwrap();
        assert!(matches!(
            surrogate_report(&inst, &q, &SolverOptions::default()),
            Err(AnalysisError::DemandBelowOne { class: 1, .. })
        ));
    }
}

//! Weightings for the water-fill baselines. Each user carries a weight; a
//! class weighs `n_c` times its per-user weight.

use crate::model::{from_count, ClassWeights, Instance, PopulationState, WeightPolicy};
use crate::scalar::Scalar;

/// `1 / max_r d_c^r`, the rate at which class `c` exhausts its dominant
/// resource.
pub fn dominant_share_factor<T: Scalar>(instance: &Instance<T>, class: usize) -> T {
    T::one() / instance.dominant_demand(class)
}

fn per_user<T: Scalar>(
    instance: &Instance<T>,
    pop: &PopulationState,
    policy: WeightPolicy,
    user_weight: impl Fn(usize, u32) -> T,
) -> ClassWeights<T> {
    assert_eq!(pop.counts.len(), instance.num_classes());
    let totals = pop.slice_totals(instance);
    let values = pop
        .counts
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            if n == 0 {
                T::zero()
            } else {
                from_count::<T>(n) * user_weight(c, totals[instance.slice_of(c)])
            }
        })
        .collect();
    ClassWeights::unconstrained(values, policy).expect("non-negative by construction")
}

/// Dominant-resource weights: `w_u = (s_v / n^v) delta_c`.
pub fn drf_weights<T: Scalar>(instance: &Instance<T>, pop: &PopulationState) -> ClassWeights<T> {
    per_user(instance, pop, WeightPolicy::Drf, |c, nv| {
        instance.share(instance.slice_of(c)) / from_count::<T>(nv)
            * dominant_share_factor(instance, c)
    })
}

/// Per-user share weights with no per-slice normalization: `w_u = s_v`.
pub fn dps_weights<T: Scalar>(instance: &Instance<T>, pop: &PopulationState) -> ClassWeights<T> {
    per_user(instance, pop, WeightPolicy::Dps, |c, _| {
        instance.share(instance.slice_of(c))
    })
}

/// Dominant-share scaled weights with no per-slice normalization:
/// `w_u = s_v delta_c`.
pub fn drf_unconstrained_weights<T: Scalar>(
    instance: &Instance<T>,
    pop: &PopulationState,
) -> ClassWeights<T> {
    per_user(instance, pop, WeightPolicy::DrfUnconstrained, |c, _| {
        instance.share(instance.slice_of(c)) * dominant_share_factor(instance, c)
    })
}

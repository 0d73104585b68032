use super::{Residuals, SolveResult};
use crate::model::{Allocation, ClassWeights, Instance};
use crate::scalar::Scalar;

/// Weighted max-min allocation by progressive filling on unit capacities.
pub fn maxmin_waterfill<T: Scalar>(instance: &Instance<T>, q: &ClassWeights<T>) -> SolveResult<T> {
    let caps = vec![T::one(); instance.num_resources()];
    maxmin_waterfill_capped(instance, q, &caps, None)
}

/// Progressive filling restricted to `include` against capacities `caps`.
///
/// All active classes share a common level `t` (`phi_c = q_c t`). The level
/// rises until some resource runs out; every active class on a resource
/// that ran out (up to [`Scalar::tie_tolerance`]) freezes there, with the
/// smallest such resource index recorded as its bottleneck.
pub fn maxmin_waterfill_capped<T: Scalar>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    caps: &[T],
    include: Option<&[bool]>,
) -> SolveResult<T> {
    let nc = instance.num_classes();
    let nr = instance.num_resources();
    assert_eq!(q.len(), nc, "one weight per class");
    assert_eq!(caps.len(), nr, "one capacity per resource");

    let mut rates = vec![T::zero(); nc];
    let mut bottlenecks = vec![None; nc];
    let mut active: Vec<bool> = (0..nc)
        .map(|c| q.get(c) > T::zero() && include.is_none_or(|m| m[c]))
        .collect();
    let mut frozen_use = vec![T::zero(); nr];
    let mut rounds = 0;

    while active.iter().any(|a| *a) {
        rounds += 1;
        let mut slope = vec![T::zero(); nr];
        for c in (0..nc).filter(|&c| active[c]) {
            for r in instance.resources_of(c) {
                slope[r] += instance.demand(c)[r] * q.get(c);
            }
        }
        let levels: Vec<Option<T>> = (0..nr)
            .map(|r| {
                (slope[r] > T::zero())
                    .then(|| ((caps[r] - frozen_use[r]) / slope[r]).max_of(T::zero()))
            })
            .collect();
        let level = levels
            .iter()
            .flatten()
            .copied()
            .reduce(|a, b| a.min_of(b))
            .expect("every active class uses some resource");
        let cutoff = level + level * T::tie_tolerance();
        let saturated: Vec<bool> = levels
            .iter()
            .map(|l| l.is_some_and(|l| l <= cutoff))
            .collect();

        for c in 0..nc {
            if !active[c] {
                continue;
            }
            if let Some(r) = instance.resources_of(c).find(|&r| saturated[r]) {
                active[c] = false;
                rates[c] = q.get(c) * level;
                bottlenecks[c] = Some(r);
                for r in instance.resources_of(c) {
                    frozen_use[r] += instance.demand(c)[r] * rates[c];
                }
            }
        }
    }

    SolveResult {
        allocation: Allocation {
            rates,
            duals: None,
            bottlenecks: Some(bottlenecks),
        },
        iterations: rounds,
        residuals: Residuals::default(),
    }
}

/// Why a class fails the max-min optimality witness.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateViolation {
    pub class: usize,
    pub reason: &'static str,
}

/// Checks the weighted max-min witness: every positive-weight class uses a
/// saturated resource on which its level `phi_c / q_c` is the largest among
/// the positive-weight classes there.
pub fn bottleneck_certificate<T: Scalar>(
    instance: &Instance<T>,
    q: &ClassWeights<T>,
    rates: &[T],
    tol: T,
) -> Vec<CertificateViolation> {
    let usage = instance.usage(rates);
    let level = |c: usize| rates[c] / q.get(c);
    let mut out = Vec::new();
    for c in (0..instance.num_classes()).filter(|&c| q.get(c) > T::zero()) {
        let mut any_saturated = false;
        let witnessed = instance.resources_of(c).any(|r| {
            if usage[r] < T::one() - tol {
                return false;
            }
            any_saturated = true;
            instance
                .classes_using(r)
                .filter(|&o| q.get(o) > T::zero())
                .all(|o| level(o) <= level(c) + tol)
        });
        if !witnessed {
            out.push(CertificateViolation {
                class: c,
                reason: if any_saturated {
                    "another class has a higher level on every saturated resource"
                } else {
                    "no saturated resource"
                },
            });
        }
    }
    out
}

//! Slices, user classes, resources and weight policies.
//!
//! A raw [`InstanceSpec`] carries whatever the caller wrote down: arbitrary
//! positive capacities and shares. [`validate_instance`] turns it into the
//! canonical [`Instance`] the engines work on, where every capacity is 1
//! (demands divided by the original capacity) and shares sum to 1.

use crate::scalar::{lit, Scalar};
use std::collections::HashSet;
use thiserror::Error;

/// Tolerance for the share constraint of SCWA weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;
/// Default tolerance for capacity checks.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("instance has no resources")]
    EmptyResources,
    #[error("resource {resource}: capacity must be positive")]
    NonPositiveCapacity { resource: String },
    #[error("slice {slice}: share must be positive")]
    NonPositiveShare { slice: String },
    #[error("class {class}: zero demand (needs a positive entry on some resource)")]
    ZeroDemand { class: String },
    #[error("class {class}: negative demand on resource {resource}")]
    NegativeDemand { class: String, resource: String },
    #[error("class {class}: demand vector has {got} entries, expected {expected}")]
    DemandLength {
        class: String,
        got: usize,
        expected: usize,
    },
    #[error("class {class}: references unknown slice {slice}")]
    DanglingSlice { class: String, slice: String },
    #[error("class {class}: {what}")]
    InvalidTraffic { class: String, what: &'static str },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("dimension mismatch: {what} has {got} entries, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("slice {slice}: weights sum to {got}, share is {share}")]
    ShareConstraint { slice: String, got: f64, share: f64 },
    #[error("class {class}: negative weight")]
    NegativeWeight { class: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceSpec<T> {
    pub id: String,
    pub capacity: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec<T> {
    pub id: String,
    pub share: T,
}

/// Workload size distribution of a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorkloadDist {
    /// Exponential with the class mean.
    Exponential,
    /// Every user carries exactly the class mean.
    Deterministic,
}

/// Traffic parameters; only the simulator reads them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traffic {
    /// Poisson arrival rate (users per unit time).
    pub arrival_rate: f64,
    /// Mean workload `1/mu` (work units).
    pub mean_workload: f64,
    pub workload: WorkloadDist,
}

impl Traffic {
    pub fn intensity(&self) -> f64 {
        self.arrival_rate * self.mean_workload
    }
}

impl Default for Traffic {
    fn default() -> Self {
        Self {
            arrival_rate: 0.0,
            mean_workload: 1.0,
            workload: WorkloadDist::Exponential,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserClass<T> {
    pub id: String,
    pub slice: String,
    /// Fraction of each resource consumed per unit processing rate.
    pub demand: Vec<T>,
    pub traffic: Traffic,
}

/// Caller-facing instance description, prior to normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec<T> {
    pub resources: Vec<ResourceSpec<T>>,
    pub slices: Vec<SliceSpec<T>>,
    pub classes: Vec<UserClass<T>>,
}

/// Validated instance: unit capacities, shares summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    resource_ids: Vec<String>,
    slices: Vec<SliceSpec<T>>,
    classes: Vec<UserClass<T>>,
    class_slice: Vec<usize>,
}

pub fn validate_instance<T: Scalar>(raw: &InstanceSpec<T>) -> Result<Instance<T>, ModelError> {
    if raw.resources.is_empty() {
        return Err(ModelError::EmptyResources);
    }
    let mut seen = HashSet::new();
    for (kind, id) in raw
        .resources
        .iter()
        .map(|r| ("resource", &r.id))
        .chain(raw.slices.iter().map(|s| ("slice", &s.id)))
        .chain(raw.classes.iter().map(|c| ("class", &c.id)))
    {
        if !seen.insert((kind, id.as_str())) {
            return Err(ModelError::DuplicateId(id.clone()));
        }
    }
    for r in &raw.resources {
        if r.capacity <= T::zero() {
            return Err(ModelError::NonPositiveCapacity {
                resource: r.id.clone(),
            });
        }
    }
    let mut total_share = T::zero();
    for s in &raw.slices {
        if s.share <= T::zero() {
            return Err(ModelError::NonPositiveShare {
                slice: s.id.clone(),
            });
        }
        total_share += s.share;
    }
    // Shares already summing to one up to rounding are kept as given, so
    // that validating a validated instance changes no bits.
    let inexact = T::tie_tolerance() > T::zero();
    let settled = total_share == T::one()
        || (inexact && (total_share - T::one()).magnitude() <= lit(8.0 * f64::EPSILON));
    let slices: Vec<SliceSpec<T>> = raw
        .slices
        .iter()
        .map(|s| SliceSpec {
            id: s.id.clone(),
            share: if settled {
                s.share
            } else {
                s.share / total_share
            },
        })
        .collect();

    let nr = raw.resources.len();
    let mut classes = Vec::with_capacity(raw.classes.len());
    let mut class_slice = Vec::with_capacity(raw.classes.len());
    for c in &raw.classes {
        if c.demand.len() != nr {
            return Err(ModelError::DemandLength {
                class: c.id.clone(),
                got: c.demand.len(),
                expected: nr,
            });
        }
        let slice = raw
            .slices
            .iter()
            .position(|s| s.id == c.slice)
            .ok_or_else(|| ModelError::DanglingSlice {
                class: c.id.clone(),
                slice: c.slice.clone(),
            })?;
        let mut any_positive = false;
        let mut demand = Vec::with_capacity(nr);
        for (d, r) in c.demand.iter().zip(&raw.resources) {
            if *d < T::zero() {
                return Err(ModelError::NegativeDemand {
                    class: c.id.clone(),
                    resource: r.id.clone(),
                });
            }
            any_positive |= *d > T::zero();
            demand.push(*d / r.capacity);
        }
        if !any_positive {
            return Err(ModelError::ZeroDemand {
                class: c.id.clone(),
            });
        }
        let t = &c.traffic;
        if !(t.arrival_rate >= 0.0 && t.arrival_rate.is_finite()) {
            return Err(ModelError::InvalidTraffic {
                class: c.id.clone(),
                what: "arrival rate must be finite and non-negative",
            });
        }
        if !(t.mean_workload > 0.0 && t.mean_workload.is_finite()) {
            return Err(ModelError::InvalidTraffic {
                class: c.id.clone(),
                what: "mean workload must be finite and positive",
            });
        }
        classes.push(UserClass {
            id: c.id.clone(),
            slice: c.slice.clone(),
            demand,
            traffic: *t,
        });
        class_slice.push(slice);
    }
    Ok(Instance {
        resource_ids: raw.resources.iter().map(|r| r.id.clone()).collect(),
        slices,
        classes,
        class_slice,
    })
}

impl<T: Scalar> Instance<T> {
    /// Raw description of this instance (unit capacities).
    pub fn to_spec(&self) -> InstanceSpec<T> {
        InstanceSpec {
            resources: self
                .resource_ids
                .iter()
                .map(|id| ResourceSpec {
                    id: id.clone(),
                    capacity: T::one(),
                })
                .collect(),
            slices: self.slices.clone(),
            classes: self.classes.clone(),
        }
    }

    pub fn num_resources(&self) -> usize {
        self.resource_ids.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn resource_ids(&self) -> &[String] {
        &self.resource_ids
    }

    pub fn slices(&self) -> &[SliceSpec<T>] {
        &self.slices
    }

    pub fn classes(&self) -> &[UserClass<T>] {
        &self.classes
    }

    pub fn share(&self, slice: usize) -> T {
        self.slices[slice].share
    }

    pub fn shares(&self) -> Vec<T> {
        self.slices.iter().map(|s| s.share).collect()
    }

    pub fn slice_of(&self, class: usize) -> usize {
        self.class_slice[class]
    }

    pub fn class_slices(&self) -> &[usize] {
        &self.class_slice
    }

    /// Normalized demand vector of a class.
    pub fn demand(&self, class: usize) -> &[T] {
        &self.classes[class].demand
    }

    pub fn traffic(&self, class: usize) -> &Traffic {
        &self.classes[class].traffic
    }

    pub fn classes_of_slice(&self, slice: usize) -> impl Iterator<Item = usize> + '_ {
        self.class_slice
            .iter()
            .enumerate()
            .filter(move |(_, &v)| v == slice)
            .map(|(c, _)| c)
    }

    /// Resources with positive demand from `class`.
    pub fn resources_of(&self, class: usize) -> impl Iterator<Item = usize> + '_ {
        self.classes[class]
            .demand
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > T::zero())
            .map(|(r, _)| r)
    }

    /// Classes with positive demand on `resource`.
    pub fn classes_using(&self, resource: usize) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.demand[resource] > T::zero())
            .map(|(c, _)| c)
    }

    /// Sum of a class's demand over its resources (`D_c`).
    pub fn total_demand(&self, class: usize) -> T {
        self.classes[class]
            .demand
            .iter()
            .fold(T::zero(), |acc, d| acc + *d)
    }

    /// Largest demand entry of a class (its dominant resource demand).
    pub fn dominant_demand(&self, class: usize) -> T {
        self.classes[class]
            .demand
            .iter()
            .fold(T::zero(), |acc, d| acc.max_of(*d))
    }

    /// Per-resource usage `sum_c d_c^r phi_c`.
    pub fn usage(&self, rates: &[T]) -> Vec<T> {
        let mut usage = vec![T::zero(); self.num_resources()];
        for (class, phi) in self.classes.iter().zip(rates) {
            for (u, d) in usage.iter_mut().zip(&class.demand) {
                *u += *d * *phi;
            }
        }
        usage
    }

    /// Same instance with every class's traffic replaced by `f(class, traffic)`.
    pub fn map_traffic(&self, mut f: impl FnMut(usize, &Traffic) -> Traffic) -> Self {
        let mut out = self.clone();
        for (c, class) in out.classes.iter_mut().enumerate() {
            class.traffic = f(c, &class.traffic);
        }
        out
    }

    /// Lossy conversion to `f64`, e.g. to run the float engines on an exact instance.
    pub fn to_f64(&self) -> Instance<f64> {
        Instance {
            resource_ids: self.resource_ids.clone(),
            slices: self
                .slices
                .iter()
                .map(|s| SliceSpec {
                    id: s.id.clone(),
                    share: s.share.as_f64(),
                })
                .collect(),
            classes: self
                .classes
                .iter()
                .map(|c| UserClass {
                    id: c.id.clone(),
                    slice: c.slice.clone(),
                    demand: c.demand.iter().map(|d| d.as_f64()).collect(),
                    traffic: c.traffic,
                })
                .collect(),
            class_slice: self.class_slice.clone(),
        }
    }
}

/// Number of active users per class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PopulationState {
    pub counts: Vec<u32>,
}

impl PopulationState {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn empty(num_classes: usize) -> Self {
        Self {
            counts: vec![0; num_classes],
        }
    }

    pub fn ones(num_classes: usize) -> Self {
        Self {
            counts: vec![1; num_classes],
        }
    }

    /// `n^v` for every slice.
    pub fn slice_totals<T: Scalar>(&self, instance: &Instance<T>) -> Vec<u32> {
        let mut totals = vec![0; instance.num_slices()];
        for (c, n) in self.counts.iter().enumerate() {
            totals[instance.slice_of(c)] += n;
        }
        totals
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&n| u64::from(n)).sum()
    }
}

/// How class weights were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightPolicy {
    /// Share-constrained, caller-chosen split of each share across classes.
    EqualIntraClass,
    /// Share-constrained, every user of a slice weighs `s_v / n^v`.
    EqualIntraSlice,
    /// Equal intra-slice scaled by the dominant-share factor of each class.
    Drf,
    /// Every user weighs its slice's share; no per-slice constraint.
    Dps,
    /// Every user weighs `s_v` times its dominant-share factor.
    DrfUnconstrained,
}

impl WeightPolicy {
    pub fn is_share_constrained(self) -> bool {
        matches!(self, Self::EqualIntraClass | Self::EqualIntraSlice)
    }
}

/// Per-class aggregate weights `q_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights<T> {
    values: Vec<T>,
    policy: WeightPolicy,
}

impl<T: Scalar> ClassWeights<T> {
    /// Weights produced by a policy other than the SCWA ones; no share check.
    pub fn unconstrained(values: Vec<T>, policy: WeightPolicy) -> Result<Self, ModelError> {
        if let Some(c) = values.iter().position(|q| *q < T::zero()) {
            return Err(ModelError::NegativeWeight {
                class: c.to_string(),
            });
        }
        Ok(Self { values, policy })
    }

    /// Exogenous share-constrained weights. Every slice whose classes carry
    /// positive weight must sum to its share within [`WEIGHT_TOLERANCE`].
    pub fn exogenous(instance: &Instance<T>, values: Vec<T>) -> Result<Self, ModelError> {
        if values.len() != instance.num_classes() {
            return Err(ModelError::Dimension {
                what: "weights",
                got: values.len(),
                expected: instance.num_classes(),
            });
        }
        let weights = Self::unconstrained(values, WeightPolicy::EqualIntraClass)?;
        weights.check_share_constraint(instance)?;
        Ok(weights)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn policy(&self) -> WeightPolicy {
        self.policy
    }

    pub fn get(&self, class: usize) -> T {
        self.values[class]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|q| *q <= T::zero())
    }

    pub fn total(&self) -> T {
        self.values.iter().fold(T::zero(), |a, q| a + *q)
    }

    /// Same policy, every weight multiplied by `k`.
    pub fn scaled(&self, k: T) -> Self {
        Self {
            values: self.values.iter().map(|q| *q * k).collect(),
            policy: self.policy,
        }
    }

    /// Per-slice weight sums.
    pub fn slice_sums(&self, instance: &Instance<T>) -> Vec<T> {
        let mut sums = vec![T::zero(); instance.num_slices()];
        for (c, q) in self.values.iter().enumerate() {
            sums[instance.slice_of(c)] += *q;
        }
        sums
    }

    /// Checks `sum_{c in v} q_c = s_v` for every slice with positive weight.
    pub fn check_share_constraint(&self, instance: &Instance<T>) -> Result<(), ModelError> {
        let tol: T = lit(WEIGHT_TOLERANCE);
        for (v, sum) in self.slice_sums(instance).into_iter().enumerate() {
            if sum > T::zero() && (sum - instance.share(v)).magnitude() > tol {
                return Err(ModelError::ShareConstraint {
                    slice: instance.slices()[v].id.clone(),
                    got: sum.as_f64(),
                    share: instance.share(v).as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Share-constrained weight policies accepted by [`scwa_weights`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScwaPolicy {
    /// `q_c = s_v n_c / n^v`.
    EqualIntraSlice,
    /// Each slice's share split evenly across its classes with active users.
    EqualIntraClass,
}

/// Share-constrained class weights for a population.
///
/// Empty slices keep their share idle: weights are absolute and never
/// redistributed to other slices.
pub fn scwa_weights<T: Scalar>(
    instance: &Instance<T>,
    pop: &PopulationState,
    policy: ScwaPolicy,
) -> ClassWeights<T> {
    let totals = pop.slice_totals(instance);
    let mut active_classes = vec![0u32; instance.num_slices()];
    for (c, &n) in pop.counts.iter().enumerate() {
        if n > 0 {
            active_classes[instance.slice_of(c)] += 1;
        }
    }
    let values = pop
        .counts
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            let v = instance.slice_of(c);
            if n == 0 {
                return T::zero();
            }
            match policy {
                ScwaPolicy::EqualIntraSlice => {
                    instance.share(v) * from_count::<T>(n) / from_count::<T>(totals[v])
                }
                ScwaPolicy::EqualIntraClass => {
                    instance.share(v) / from_count::<T>(active_classes[v])
                }
            }
        })
        .collect();
    ClassWeights {
        values,
        policy: match policy {
            ScwaPolicy::EqualIntraSlice => WeightPolicy::EqualIntraSlice,
            ScwaPolicy::EqualIntraClass => WeightPolicy::EqualIntraClass,
        },
    }
}

pub(crate) fn from_count<T: Scalar>(n: u32) -> T {
    T::from_u32(n).expect("count representable")
}

/// Per-class aggregate rates, with optional shadow prices and bottlenecks.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    pub rates: Vec<T>,
    pub duals: Option<Vec<T>>,
    pub bottlenecks: Option<Vec<Option<usize>>>,
}

impl<T: Scalar> Allocation<T> {
    pub fn from_rates(rates: Vec<T>) -> Self {
        Self {
            rates,
            duals: None,
            bottlenecks: None,
        }
    }

    pub fn zeros(num_classes: usize) -> Self {
        Self::from_rates(vec![T::zero(); num_classes])
    }

    /// Largest absolute rate difference to another allocation.
    pub fn max_abs_diff(&self, other: &[T]) -> f64 {
        self.rates
            .iter()
            .zip(other)
            .map(|(a, b)| (*a - *b).magnitude().as_f64())
            .fold(0.0, f64::max)
    }
}

/// Per-resource usage of an allocation and the resources it overloads.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport<T> {
    pub usage: Vec<T>,
    pub violations: Vec<usize>,
}

impl<T> FeasibilityReport<T> {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn feasibility_report<T: Scalar>(
    instance: &Instance<T>,
    alloc: &Allocation<T>,
    tol: T,
) -> Result<FeasibilityReport<T>, ModelError> {
    if alloc.rates.len() != instance.num_classes() {
        return Err(ModelError::Dimension {
            what: "allocation",
            got: alloc.rates.len(),
            expected: instance.num_classes(),
        });
    }
    let usage = instance.usage(&alloc.rates);
    let violations = usage
        .iter()
        .enumerate()
        .filter(|(_, u)| **u > T::one() + tol)
        .map(|(r, _)| r)
        .collect();
    Ok(FeasibilityReport { usage, violations })
}

/// Five-resource, three-class edge example (one user per class).
///
/// `slice1` holds classes `c1` (pure connectivity) and `c2` (analytics),
/// `slice2` holds `c3` (analytics); shares are equal.
pub fn table1_instance<T: Scalar>() -> Instance<T> {
    let d = |xs: [f64; 5]| xs.iter().map(|&x| lit::<T>(x)).collect::<Vec<_>>();
    let spec = InstanceSpec {
        resources: (1..=5)
            .map(|r| ResourceSpec {
                id: format!("r{r}"),
                capacity: T::one(),
            })
            .collect(),
        slices: vec![
            SliceSpec {
                id: "slice1".into(),
                share: lit(0.5),
            },
            SliceSpec {
                id: "slice2".into(),
                share: lit(0.5),
            },
        ],
        classes: vec![
            UserClass {
                id: "c1".into(),
                slice: "slice1".into(),
                demand: d([1.0, 1.0, 0.0, 0.0, 0.0]),
                traffic: Traffic::default(),
            },
            UserClass {
                id: "c2".into(),
                slice: "slice1".into(),
                demand: d([0.6, 0.0, 0.0, 1.0, 1.0]),
                traffic: Traffic::default(),
            },
            UserClass {
                id: "c3".into(),
                slice: "slice2".into(),
                demand: d([0.6, 0.0, 0.0, 1.0, 1.0]),
                traffic: Traffic::default(),
            },
        ],
    };
    validate_instance(&spec).expect("table 1 instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn two_slice_spec(shares: (f64, f64)) -> InstanceSpec<f64> {
        InstanceSpec {
            resources: vec![ResourceSpec {
                id: "r".into(),
                capacity: 1.0,
            }],
            slices: vec![
                SliceSpec {
                    id: "v1".into(),
                    share: shares.0,
                },
                SliceSpec {
                    id: "v2".into(),
                    share: shares.1,
                },
            ],
            classes: vec![
                UserClass {
                    id: "a".into(),
                    slice: "v1".into(),
                    demand: vec![1.0],
                    traffic: Traffic::default(),
                },
                UserClass {
                    id: "b".into(),
                    slice: "v1".into(),
                    demand: vec![1.0],
                    traffic: Traffic::default(),
                },
                UserClass {
                    id: "c".into(),
                    slice: "v2".into(),
                    demand: vec![1.0],
                    traffic: Traffic::default(),
                },
            ],
        }
    }

    #[test]
    fn table1_accepted_unchanged() {
        let inst: Instance<f64> = table1_instance();
        assert_eq!(inst.demand(0), &[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(inst.demand(1), &[0.6, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(inst.shares(), vec![0.5, 0.5]);
        let again = validate_instance(&inst.to_spec()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn shares_are_normalized() {
        let inst = validate_instance(&two_slice_spec((2.0, 2.0))).unwrap();
        assert_eq!(inst.shares(), vec![0.5, 0.5]);
    }

    #[test]
    fn capacities_rescale_demands() {
        let mut spec = two_slice_spec((1.0, 3.0));
        spec.resources[0].capacity = 4.0;
        spec.classes[0].demand = vec![2.0];
        let inst = validate_instance(&spec).unwrap();
        assert_eq!(inst.demand(0), &[0.5]);
        assert_eq!(inst.demand(1), &[0.25]);
        assert_eq!(inst.shares(), vec![0.25, 0.75]);
    }

    #[test]
    fn rejects_bad_instances() {
        let mut spec = two_slice_spec((1.0, 1.0));
        spec.classes[2].demand = vec![0.0];
        assert!(matches!(
            validate_instance(&spec),
            Err(ModelError::ZeroDemand { class }) if class == "c"
        ));

        let mut spec = two_slice_spec((1.0, 1.0));
        spec.slices[1].share = 0.0;
        assert!(matches!(
            validate_instance(&spec),
            Err(ModelError::NonPositiveShare { .. })
        ));

        let mut spec = two_slice_spec((1.0, 1.0));
        spec.classes[0].slice = "nope".into();
        assert!(matches!(
            validate_instance(&spec),
            Err(ModelError::DanglingSlice { .. })
        ));

        let mut spec = two_slice_spec((1.0, 1.0));
        spec.resources.clear();
        spec.classes.clear();
        assert_eq!(validate_instance(&spec), Err(ModelError::EmptyResources));

        let mut spec = two_slice_spec((1.0, 1.0));
        spec.classes[1].id = "a".into();
        assert!(matches!(
            validate_instance(&spec),
            Err(ModelError::DuplicateId(_))
        ));
    }

    #[test]
    fn slice_without_classes_is_allowed() {
        let mut spec = two_slice_spec((1.0, 1.0));
        spec.classes.retain(|c| c.slice == "v1");
        let inst = validate_instance(&spec).unwrap();
        assert_eq!(inst.classes_of_slice(1).count(), 0);
    }

    #[test]
    fn equal_intra_slice_weights() {
        let inst = validate_instance(&two_slice_spec((0.5, 0.5))).unwrap();
        let q = scwa_weights(
            &inst,
            &PopulationState::new(vec![1, 1, 1]),
            ScwaPolicy::EqualIntraSlice,
        );
        assert_eq!(q.values(), &[0.25, 0.25, 0.5]);

        let q = scwa_weights(
            &inst,
            &PopulationState::new(vec![2, 1, 1]),
            ScwaPolicy::EqualIntraSlice,
        );
        let want = [1.0 / 3.0, 1.0 / 6.0, 0.5];
        for (a, b) in q.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        q.check_share_constraint(&inst).unwrap();

        let q = scwa_weights(
            &inst,
            &PopulationState::new(vec![1, 1, 0]),
            ScwaPolicy::EqualIntraSlice,
        );
        assert_eq!(q.values(), &[0.25, 0.25, 0.0]);

        let q = scwa_weights::<f64>(
            &inst,
            &PopulationState::empty(3),
            ScwaPolicy::EqualIntraSlice,
        );
        assert!(q.is_all_zero());
    }

    #[test]
    fn equal_intra_class_splits_share_over_active_classes() {
        let inst = validate_instance(&two_slice_spec((0.5, 0.5))).unwrap();
        let q = scwa_weights(
            &inst,
            &PopulationState::new(vec![5, 1, 2]),
            ScwaPolicy::EqualIntraClass,
        );
        assert_eq!(q.values(), &[0.25, 0.25, 0.5]);
        let q = scwa_weights(
            &inst,
            &PopulationState::new(vec![5, 0, 2]),
            ScwaPolicy::EqualIntraClass,
        );
        assert_eq!(q.values(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn exact_weights_with_rationals() {
        let spec = InstanceSpec {
            resources: vec![ResourceSpec {
                id: "r".into(),
                capacity: Ratio::from_integer(1i128),
            }],
            slices: vec![
                SliceSpec {
                    id: "v1".into(),
                    share: Ratio::new(1i128, 3),
                },
                SliceSpec {
                    id: "v2".into(),
                    share: Ratio::new(2i128, 3),
                },
            ],
            classes: ["a", "b"]
                .iter()
                .map(|id| UserClass {
                    id: (*id).into(),
                    slice: "v1".into(),
                    demand: vec![Ratio::from_integer(1)],
                    traffic: Traffic::default(),
                })
                .collect(),
        };
        let inst = validate_instance(&spec).unwrap();
        let q = scwa_weights(
            &inst,
            &PopulationState::new(vec![2, 1]),
            ScwaPolicy::EqualIntraSlice,
        );
        assert_eq!(q.values(), &[Ratio::new(2, 9), Ratio::new(1, 9)]);
        assert_eq!(q.total(), Ratio::new(1, 3));
    }

    #[test]
    fn exogenous_weights_checked_against_shares() {
        let inst = validate_instance(&two_slice_spec((0.5, 0.5))).unwrap();
        assert!(ClassWeights::exogenous(&inst, vec![0.1, 0.4, 0.5]).is_ok());
        assert!(matches!(
            ClassWeights::exogenous(&inst, vec![0.1, 0.3, 0.5]),
            Err(ModelError::ShareConstraint { .. })
        ));
        assert!(ClassWeights::exogenous(&inst, vec![0.1, 0.4]).is_err());
    }

    #[test]
    fn table1_feasibility() {
        let inst: Instance<f64> = table1_instance();
        let report =
            feasibility_report(&inst, &Allocation::from_rates(vec![0.4, 0.5, 0.5]), 1e-9).unwrap();
        assert!(report.is_feasible());
        assert!((report.usage[0] - 1.0).abs() < 1e-15);
        assert!((report.usage[3] - 1.0).abs() < 1e-15);
        assert!((report.usage[4] - 1.0).abs() < 1e-15);

        let zero = feasibility_report(&inst, &Allocation::zeros(3), 1e-9).unwrap();
        assert!(zero.is_feasible());
        assert!(zero.usage.iter().all(|u| *u == 0.0));

        let over =
            feasibility_report(&inst, &Allocation::from_rates(vec![1.1, 0.0, 0.0]), 1e-9).unwrap();
        assert_eq!(over.violations, vec![0, 1]);
    }

    #[test]
    fn table1_feasibility_is_exact_in_rationals() {
        let inst: Instance<Ratio<i128>> = table1_instance();
        let rates = vec![Ratio::new(2, 5), Ratio::new(1, 2), Ratio::new(1, 2)];
        let report = feasibility_report(
            &inst,
            &Allocation::from_rates(rates),
            Ratio::from_integer(0),
        )
        .unwrap();
        assert_eq!(report.usage[0], Ratio::from_integer(1));
        assert!(report.is_feasible());
    }
}

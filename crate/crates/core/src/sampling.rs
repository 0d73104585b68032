//! Random desk-scale instances for property checks and the `verify` suites.

use crate::model::{
    validate_instance, ClassWeights, Instance, InstanceSpec, ResourceSpec, SliceSpec, Traffic,
    UserClass,
};
use rand::seq::index::sample;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub max_classes: usize,
    pub max_resources: usize,
    pub max_slices: usize,
    /// Positive demands are drawn from `[lo, hi)`.
    pub demand_range: (f64, f64),
}

impl Default for InstanceShape {
    fn default() -> Self {
        Self {
            max_classes: 4,
            max_resources: 3,
            max_slices: 2,
            demand_range: (0.1, 1.0),
        }
    }
}

/// Random instance: at least two classes and two slices, every class on a
/// random non-empty resource subset, every slice owning at least one class.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> Instance<f64> {
    let nr = rng.random_range(1..=shape.max_resources.max(1));
    let nc = rng.random_range(2..=shape.max_classes.max(2));
    let nv = rng.random_range(2..=shape.max_slices.max(2).min(nc));
    let (lo, hi) = shape.demand_range;
    let classes = (0..nc)
        .map(|c| {
            let used = rng.random_range(1..=nr);
            let mut demand = vec![0.0; nr];
            for r in sample(rng, nr, used) {
                demand[r] = rng.random_range(lo..hi);
            }
            // The first nv classes seed the slices so none is empty.
            let slice = if c < nv { c } else { rng.random_range(0..nv) };
            UserClass {
                id: format!("c{c}"),
                slice: format!("s{slice}"),
                demand,
                traffic: Traffic::default(),
            }
        })
        .collect();
    build(rng, nr, nv, classes)
}

/// Random instance in which every class uses exactly one resource.
pub fn random_parallel_instance<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &InstanceShape,
) -> Instance<f64> {
    let nr = rng.random_range(1..=shape.max_resources.max(1));
    let nc = rng.random_range(2..=shape.max_classes.max(2));
    let nv = rng.random_range(2..=shape.max_slices.max(2).min(nc));
    let (lo, hi) = shape.demand_range;
    let classes = (0..nc)
        .map(|c| {
            let mut demand = vec![0.0; nr];
            demand[rng.random_range(0..nr)] = rng.random_range(lo..hi);
            let slice = if c < nv { c } else { rng.random_range(0..nv) };
            UserClass {
                id: format!("c{c}"),
                slice: format!("s{slice}"),
                demand,
                traffic: Traffic::default(),
            }
        })
        .collect();
    build(rng, nr, nv, classes)
}

fn build<R: Rng + ?Sized>(
    rng: &mut R,
    nr: usize,
    nv: usize,
    classes: Vec<UserClass<f64>>,
) -> Instance<f64> {
    let spec = InstanceSpec {
        resources: (0..nr)
            .map(|r| ResourceSpec {
                id: format!("r{r}"),
                capacity: 1.0,
            })
            .collect(),
        slices: (0..nv)
            .map(|v| SliceSpec {
                id: format!("s{v}"),
                share: rng.random_range(0.05..1.0),
            })
            .collect(),
        classes,
    };
    validate_instance(&spec).expect("generated instance is valid")
}

/// Share-constrained weights splitting each slice's share across its
/// classes in random proportions.
pub fn random_scwa_weights<R: Rng + ?Sized>(
    rng: &mut R,
    instance: &Instance<f64>,
) -> ClassWeights<f64> {
    let raw: Vec<f64> = (0..instance.num_classes())
        .map(|_| rng.random_range(0.05..1.0))
        .collect();
    let mut sums = vec![0.0; instance.num_slices()];
    for (c, w) in raw.iter().enumerate() {
        sums[instance.slice_of(c)] += w;
    }
    let mut values: Vec<f64> = raw
        .iter()
        .enumerate()
        .map(|(c, w)| {
            let v = instance.slice_of(c);
            instance.share(v) * w / sums[v]
        })
        .collect();
    // Put the rounding residue of each slice on its last class so the
    // share constraint holds to the last bit that matters.
    for v in 0..instance.num_slices() {
        let members: Vec<usize> = instance.classes_of_slice(v).collect();
        if let Some((&last, rest)) = members.split_last() {
            let used: f64 = rest.iter().map(|&c| values[c]).sum();
            values[last] = instance.share(v) - used;
        }
    }
    ClassWeights::exogenous(instance, values).expect("weights sum to shares")
}

/// Same instance with rate units changed so that every positive demand is
/// at least one. Capacities stay at one.
pub fn rescale_to_unit_demands(instance: &Instance<f64>) -> Instance<f64> {
    let min = instance
        .classes()
        .iter()
        .flat_map(|c| c.demand.iter().copied())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mut spec = instance.to_spec();
    for c in &mut spec.classes {
        for d in &mut c.demand {
            *d /= min;
        }
    }
    validate_instance(&spec).expect("rescaling preserves validity")
}

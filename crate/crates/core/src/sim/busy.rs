use super::{SimError, Trace};
use crate::model::Instance;

/// `fractions[k]`: share of the window with exactly `k` busy slices. A
/// slice is busy while it has at least one active user.
#[derive(Debug, Clone, PartialEq)]
pub struct BusyFractions {
    pub fractions: Vec<f64>,
}

impl BusyFractions {
    pub fn idle(&self) -> f64 {
        self.fractions[0]
    }

    pub fn exactly(&self, k: usize) -> f64 {
        self.fractions.get(k).copied().unwrap_or(0.0)
    }
}

/// Busy-slice fractions of a recorded trace over `window`. The population
/// after the last event is taken to hold until the window end.
pub fn busy_fractions(
    trace: &Trace,
    instance: &Instance<f64>,
    window: (f64, f64),
) -> Result<BusyFractions, SimError> {
    let (a, b) = window;
    if !(b > a) {
        return Err(SimError::EmptyWindow);
    }
    let nv = instance.num_slices();
    let busy_count = |pop: &[u32]| {
        let mut per_slice = vec![0u32; nv];
        for (c, &n) in pop.iter().enumerate() {
            per_slice[instance.slice_of(c)] += n;
        }
        per_slice.iter().filter(|n| **n > 0).count()
    };
    let mut acc = vec![0.0; nv + 1];
    let mut t = trace.start;
    let mut k = busy_count(&trace.initial_population);
    for e in &trace.events {
        let (lo, hi) = (t.max(a), e.time.min(b));
        if hi > lo {
            acc[k] += hi - lo;
        }
        t = e.time;
        k = busy_count(&e.population);
    }
    if b > t.max(a) {
        acc[k] += b - t.max(a);
    }
    let len = b - a.max(trace.start);
    Ok(BusyFractions {
        fractions: acc.iter().map(|x| x / len).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        validate_instance, InstanceSpec, ResourceSpec, SliceSpec, Traffic, UserClass,
    };
    use crate::sim::{EventKind, TraceEvent};

    fn two_slices() -> Instance<f64> {
        validate_instance(&InstanceSpec {
            resources: vec![ResourceSpec {
                id: "r".into(),
                capacity: 1.0,
            }],
            slices: ["a", "b"]
                .iter()
                .map(|s| SliceSpec {
                    id: s.to_string(),
                    share: 0.5,
                })
                .collect(),
            classes: ["a", "b"]
                .iter()
                .map(|s| UserClass {
                    id: format!("c{s}"),
                    slice: s.to_string(),
                    demand: vec![1.0],
                    traffic: Traffic::default(),
                })
                .collect(),
        })
        .unwrap()
    }

    fn ev(time: f64, kind: EventKind, class: usize, pop: [u32; 2]) -> TraceEvent {
        TraceEvent {
            time,
            kind,
            class,
            population: pop.to_vec(),
            alloc_id: 0,
        }
    }

    #[test]
    fn overlapping_busy_periods() {
        let trace = Trace {
            start: 0.0,
            end: 4.0,
            initial_population: vec![1, 0],
            events: vec![
                ev(1.0, EventKind::Arrival, 1, [1, 1]),
                ev(2.0, EventKind::Departure, 0, [0, 1]),
                ev(3.0, EventKind::Departure, 1, [0, 0]),
            ],
        };
        let f = busy_fractions(&trace, &two_slices(), (0.0, 4.0)).unwrap();
        assert_eq!(f.fractions, vec![0.25, 0.5, 0.25]);
        let f = busy_fractions(&trace, &two_slices(), (1.0, 2.0)).unwrap();
        assert_eq!(f.fractions, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn idle_trace_and_empty_window() {
        let trace = Trace {
            start: 0.0,
            end: 5.0,
            initial_population: vec![0, 0],
            events: vec![],
        };
        let f = busy_fractions(&trace, &two_slices(), (0.0, 5.0)).unwrap();
        assert_eq!(f.idle(), 1.0);
        assert_eq!(
            busy_fractions(&trace, &two_slices(), (1.0, 1.0)),
            Err(SimError::EmptyWindow)
        );
    }
}

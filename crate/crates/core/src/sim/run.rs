use super::{Allocator, EngineSpec, Metrics, SimError, SliceMetrics, StabilityVerdict};
use crate::engines::SolverOptions;
use crate::model::{Instance, WorkloadDist};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Simulated time units.
    Time(f64),
    /// Stop at this many departures.
    Departures(u64),
}

/// How residual workloads evolve between events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualMode {
    /// Each user keeps its drawn workload until served.
    #[default]
    Tracked,
    /// After every event, residuals of exponential classes are redrawn
    /// from the workload distribution. Same law by memorylessness; used to
    /// cross-check the tracked path.
    Resampled,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub instance: Instance<f64>,
    pub engine: EngineSpec,
    pub horizon: Horizon,
    /// Leading fraction of the horizon excluded from the metrics.
    pub warmup: f64,
    pub seed: u64,
    /// Users present at time zero, per class.
    pub initial_users: Option<Vec<u32>>,
    pub residual_mode: ResidualMode,
    pub solver: SolverOptions,
    pub record_trace: bool,
    /// Keep one record per departure.
    pub record_departures: bool,
    /// Check feasibility of every allocation and per-user work
    /// conservation; slower.
    pub audit: bool,
}

impl Scenario {
    pub fn new(instance: Instance<f64>, engine: EngineSpec, horizon: Horizon, seed: u64) -> Self {
        Self {
            instance,
            engine,
            horizon,
            warmup: 0.1,
            seed,
            initial_users: None,
            residual_mode: ResidualMode::Tracked,
            solver: SolverOptions::default(),
            record_trace: false,
            record_departures: false,
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        match self.horizon {
            Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => {
                return bad(format!("horizon must be positive, got {t}"))
            }
            Horizon::Departures(0) => return bad("horizon must be positive, got 0".into()),
            _ => {}
        }
        if !(0.0..1.0).contains(&self.warmup) {
            return bad(format!("warmup must be in [0, 1), got {}", self.warmup));
        }
        if let Some(a) = self.engine.alpha() {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("alpha must be positive, got {a}"));
            }
        }
        if let Some(init) = &self.initial_users {
            if init.len() != self.instance.num_classes() {
                return bad(format!(
                    "initial_users has {} entries, expected {}",
                    init.len(),
                    self.instance.num_classes()
                ));
            }
        }
        for (c, class) in self.instance.classes().iter().enumerate() {
            let t = &class.traffic;
            if !(t.arrival_rate >= 0.0 && t.arrival_rate.is_finite()) {
                return bad(format!("class {c}: arrival rate {}", t.arrival_rate));
            }
            if !(t.mean_workload > 0.0 && t.mean_workload.is_finite()) {
                return bad(format!("class {c}: mean workload {}", t.mean_workload));
            }
        }
        Ok(())
    }

    pub fn with_engine(&self, engine: EngineSpec) -> Self {
        Self {
            engine,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    Departure,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Arrival => "arrival",
            Self::Departure => "departure",
        }
    }
}

/// The next thing to happen. For departures `user` is the departing user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub class: usize,
    pub user: Option<u64>,
}

/// A user in service.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveUser {
    pub id: u64,
    pub class: usize,
    pub arrival: f64,
    pub workload: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct Tag {
    /// Value of the class's virtual clock at which the user finishes.
    finish: f64,
    user: u64,
    arrival: f64,
    workload: f64,
}

impl PartialEq for Tag {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Tag {}
impl PartialOrd for Tag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Tag {
    fn cmp(&self, other: &Self) -> Ordering {
        self.finish
            .total_cmp(&other.finish)
            .then(self.user.cmp(&other.user))
    }
}

/// Population, residual workloads and pending arrivals.
///
/// All users of a class receive the same rate, so each class keeps a
/// virtual clock (service received per user since the start) and users
/// are ordered by the clock value at which they finish. Depletion is exact
/// between events.
#[derive(Debug, Clone)]
pub struct SimState {
    pub time: f64,
    counts: Vec<u32>,
    clocks: Vec<f64>,
    queues: Vec<BinaryHeap<Reverse<Tag>>>,
    user_rate: Vec<f64>,
    next_arrival: Vec<f64>,
    next_user: u64,
}

impl SimState {
    pub fn new(num_classes: usize) -> Self {
        Self {
            time: 0.0,
            counts: vec![0; num_classes],
            clocks: vec![0.0; num_classes],
            queues: vec![BinaryHeap::new(); num_classes],
            user_rate: vec![0.0; num_classes],
            next_arrival: vec![f64::INFINITY; num_classes],
            next_user: 0,
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Adds a user of `class` at the current time; returns its id.
    pub fn add_user(&mut self, class: usize, workload: f64) -> u64 {
        let user = self.next_user;
        self.next_user += 1;
        self.queues[class].push(Reverse(Tag {
            finish: self.clocks[class] + workload,
            user,
            arrival: self.time,
            workload,
        }));
        self.counts[class] += 1;
        user
    }

    /// Sets the class rates; each user gets `phi_c / n_c`.
    pub fn set_class_rates(&mut self, rates: &[f64]) {
        for (c, phi) in rates.iter().enumerate() {
            self.user_rate[c] = if self.counts[c] > 0 {
                phi / self.counts[c] as f64
            } else {
                0.0
            };
        }
    }

    pub fn user_rate(&self, class: usize) -> f64 {
        self.user_rate[class]
    }

    pub fn set_next_arrival(&mut self, class: usize, time: f64) {
        self.next_arrival[class] = time;
    }

    pub fn active_users(&self) -> impl Iterator<Item = ActiveUser> + '_ {
        self.queues.iter().enumerate().flat_map(move |(c, q)| {
            q.iter().map(move |Reverse(t)| ActiveUser {
                id: t.user,
                class: c,
                arrival: t.arrival,
                workload: t.workload,
                residual: t.finish - self.clocks[c],
            })
        })
    }

    /// Earliest pending event; departures win ties with arrivals, lower
    /// user ids win ties among departures. Users with zero rate never
    /// depart before the rates change.
    pub fn next_event(&self) -> Option<Event> {
        let mut best: Option<Event> = None;
        for (c, q) in self.queues.iter().enumerate() {
            let rate = self.user_rate[c];
            let Some(Reverse(head)) = q.peek() else {
                continue;
            };
            if rate <= 0.0 {
                continue;
            }
            let t = self.time + ((head.finish - self.clocks[c]) / rate).max(0.0);
            let better = match &best {
                None => true,
                Some(b) => t < b.time || (t == b.time && Some(head.user) < b.user),
            };
            if better {
                best = Some(Event {
                    time: t,
                    kind: EventKind::Departure,
                    class: c,
                    user: Some(head.user),
                });
            }
        }
        let arrival = self
            .next_arrival
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1));
        if let Some((c, &t)) = arrival {
            if best.is_none_or(|b| t < b.time) {
                best = Some(Event {
                    time: t,
                    kind: EventKind::Arrival,
                    class: c,
                    user: None,
                });
            }
        }
        best
    }

    /// Serves every user at its current rate up to `time`.
    pub fn advance(&mut self, time: f64) {
        let dt = time - self.time;
        debug_assert!(dt >= 0.0);
        for (clock, rate) in self.clocks.iter_mut().zip(&self.user_rate) {
            *clock += rate * dt;
        }
        self.time = time;
    }

    /// Removes the head user of `class`, which has just finished.
    fn depart(&mut self, class: usize) -> Tag {
        let Reverse(tag) = self.queues[class].pop().expect("departing class has users");
        // Snap the clock to remove accumulated rounding.
        self.clocks[class] = tag.finish;
        self.counts[class] -= 1;
        tag
    }

    /// Redraws the residual of every user of `class`.
    fn resample(&mut self, class: usize, mut draw: impl FnMut() -> f64) {
        let clock = self.clocks[class];
        let tags: Vec<Tag> = self.queues[class]
            .drain()
            .map(|Reverse(t)| Tag {
                finish: clock + draw(),
                ..t
            })
            .collect();
        self.queues[class].extend(tags.into_iter().map(Reverse));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: EventKind,
    pub class: usize,
    /// Population after the event.
    pub population: Vec<u32>,
    /// Allocation in force after the event.
    pub alloc_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub start: f64,
    pub end: f64,
    pub initial_population: Vec<u32>,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    /// One line per event: `time,kind,class_id,n_vector,alloc_id`, with
    /// the population vector `;`-separated.
    pub fn to_csv(&self, instance: &Instance<f64>) -> String {
        let mut out = String::from("time,kind,class_id,n_vector,alloc_id\n");
        for e in &self.events {
            let n: Vec<String> = e.population.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(
                out,
                "{:.9},{},{},{},{}",
                e.time,
                e.kind.as_str(),
                instance.classes()[e.class].id,
                n.join(";"),
                e.alloc_id
            );
        }
        out
    }
}

/// A departed user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepartureRecord {
    pub class: usize,
    pub arrival: f64,
    pub departure: f64,
    pub workload: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trace: Option<Trace>,
    /// Departures inside the measurement window, when requested.
    pub departures: Vec<DepartureRecord>,
}

struct Streams {
    arrivals: Vec<ChaCha8Rng>,
    workloads: Vec<ChaCha8Rng>,
}

impl Streams {
    /// One arrival and one workload stream per class, split from the seed
    /// by stream label so that they do not depend on the engine.
    fn new(seed: u64, num_classes: usize) -> Self {
        let stream = |label: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(label);
            rng
        };
        Self {
            arrivals: (0..num_classes as u64).map(|c| stream(2 * c)).collect(),
            workloads: (0..num_classes as u64).map(|c| stream(2 * c + 1)).collect(),
        }
    }
}

fn draw_workload(rng: &mut impl Rng, mean: f64, dist: WorkloadDist) -> f64 {
    match dist {
        WorkloadDist::Deterministic => mean,
        WorkloadDist::Exponential => Exp::new(1.0 / mean).expect("positive rate").sample(rng),
    }
}

fn draw_gap(rng: &mut impl Rng, rate: f64) -> f64 {
    if rate > 0.0 {
        Exp::new(rate).expect("positive rate").sample(rng)
    } else {
        f64::INFINITY
    }
}

/// Time integrals over the measurement window.
struct Window {
    start: Option<f64>,
    slice_pop: Vec<f64>,
    busy: Vec<f64>,
    /// `(time, cumulative total-population integral)` at every event, used
    /// for the quarter means when the window end is not known in advance.
    checkpoints: Vec<(f64, f64)>,
    total: f64,
}

impl Window {
    fn new(num_slices: usize, start: Option<f64>) -> Self {
        Self {
            start,
            slice_pop: vec![0.0; num_slices],
            busy: vec![0.0; num_slices + 1],
            checkpoints: Vec::new(),
            total: 0.0,
        }
    }

    fn integrate(&mut self, from: f64, to: f64, slice_counts: &[u32]) {
        let Some(start) = self.start else {
            return;
        };
        let a = from.max(start);
        if to <= a {
            return;
        }
        if self.checkpoints.is_empty() {
            self.checkpoints.push((a, 0.0));
        }
        let len = to - a;
        let mut busy = 0;
        let mut n = 0u64;
        for (acc, &k) in self.slice_pop.iter_mut().zip(slice_counts) {
            *acc += k as f64 * len;
            busy += usize::from(k > 0);
            n += k as u64;
        }
        self.busy[busy] += len;
        self.total += n as f64 * len;
        self.checkpoints.push((to, self.total));
    }

    /// Mean total population over `[a, b]`, from the piecewise-linear
    /// cumulative integral.
    fn mean_between(&self, a: f64, b: f64) -> f64 {
        let cum = |t: f64| -> f64 {
            let i = self.checkpoints.partition_point(|(x, _)| *x <= t);
            if i == 0 {
                return 0.0;
            }
            let (t0, c0) = self.checkpoints[i - 1];
            match self.checkpoints.get(i) {
                Some(&(t1, c1)) if t1 > t0 => c0 + (c1 - c0) * (t - t0) / (t1 - t0),
                _ => c0,
            }
        };
        if b > a {
            (cum(b) - cum(a)) / (b - a)
        } else {
            0.0
        }
    }
}

#[derive(Default, Clone)]
struct Tally {
    delay: f64,
    throughput: f64,
    departures: u64,
    arrivals: u64,
}

impl Tally {
    fn finish(&self, population: f64) -> SliceMetrics {
        let n = self.departures as f64;
        SliceMetrics {
            mean_delay: if n > 0.0 { self.delay / n } else { 0.0 },
            mean_throughput: if n > 0.0 { self.throughput / n } else { 0.0 },
            departures: self.departures,
            arrivals: self.arrivals,
            mean_population: population,
        }
    }
}

pub(super) fn verdict(q2: f64, q4: f64) -> StabilityVerdict {
    if q4 <= 1.2 * q2 {
        StabilityVerdict::ConsistentWithStable
    } else if q4 >= 2.0 * q2 {
        StabilityVerdict::Growing
    } else {
        StabilityVerdict::Inconclusive
    }
}

/// Runs one replication.
pub fn run_simulation(scenario: &Scenario) -> Result<RunOutput, SimError> {
    scenario.validate()?;
    let inst = &scenario.instance;
    let nc = inst.num_classes();
    let nv = inst.num_slices();
    let mut streams = Streams::new(scenario.seed, nc);
    let mut state = SimState::new(nc);
    let mut alloc = Allocator::new(inst, scenario.engine, scenario.solver);
    let traffic: Vec<_> = (0..nc).map(|c| *inst.traffic(c)).collect();

    let (end_time, warm_departures) = match scenario.horizon {
        Horizon::Time(t) => (Some(t), 0),
        Horizon::Departures(n) => (None, (scenario.warmup * n as f64).ceil() as u64),
    };
    let mut window = Window::new(
        nv,
        match scenario.horizon {
            Horizon::Time(t) => Some(scenario.warmup * t),
            Horizon::Departures(_) => (warm_departures == 0).then_some(0.0),
        },
    );

    if let Some(init) = &scenario.initial_users {
        for (c, &n) in init.iter().enumerate() {
            for _ in 0..n {
                let w = draw_workload(
                    &mut streams.workloads[c],
                    traffic[c].mean_workload,
                    traffic[c].workload,
                );
                state.add_user(c, w);
            }
        }
    }
    for (c, t) in traffic.iter().enumerate() {
        let gap = draw_gap(&mut streams.arrivals[c], t.arrival_rate);
        state.set_next_arrival(c, gap);
    }

    let engine_err = |event: u64| move |source| SimError::Engine { event, source };
    let (mut alloc_id, rates) = alloc.get(state.counts()).map_err(engine_err(0))?;
    let mut rates = rates.to_vec();
    if scenario.audit {
        audit_feasible(inst, &rates, 0)?;
    }
    state.set_class_rates(&rates);

    let mut trace = scenario.record_trace.then(|| Trace {
        start: 0.0,
        end: 0.0,
        initial_population: state.counts().to_vec(),
        events: Vec::new(),
    });
    let mut served: HashMap<u64, f64> = HashMap::new();
    let mut departures_log = Vec::new();
    let mut per_slice = vec![Tally::default(); nv];
    let mut overall = Tally::default();
    let mut departed_total = 0u64;
    let mut events = 0u64;
    let mut slice_counts = vec![0u32; nv];

    let final_time = loop {
        slice_counts.iter_mut().for_each(|k| *k = 0);
        for (c, &n) in state.counts().iter().enumerate() {
            slice_counts[inst.slice_of(c)] += n;
        }
        let next = state.next_event();
        let t_next = next.map_or(f64::INFINITY, |e| e.time);
        if let Some(end) = end_time {
            if t_next > end {
                window.integrate(state.time, end, &slice_counts);
                state.advance(end);
                break end;
            }
        }
        let Some(event) = next else {
            // Nothing can ever happen again (departure horizon only).
            break state.time;
        };
        window.integrate(state.time, event.time, &slice_counts);
        if scenario.audit {
            for (c, q) in state.queues.iter().enumerate() {
                let add = state.user_rate[c] * (event.time - state.time);
                for Reverse(t) in q {
                    *served.entry(t.user).or_insert(0.0) += add;
                }
            }
        }
        state.advance(event.time);
        events += 1;
        let in_window = window.start.is_some_and(|s| event.time >= s);
        match event.kind {
            EventKind::Departure => {
                let tag = state.depart(event.class);
                departed_total += 1;
                if scenario.audit {
                    let got = served.remove(&tag.user).unwrap_or(0.0);
                    if (got - tag.workload).abs() > 1e-9 * tag.workload.max(1.0) {
                        return Err(SimError::WorkConservation {
                            user: tag.user,
                            served: got,
                            workload: tag.workload,
                        });
                    }
                }
                if in_window {
                    let sojourn = event.time - tag.arrival;
                    let thr = tag.workload / sojourn;
                    for t in [&mut per_slice[inst.slice_of(event.class)], &mut overall] {
                        t.delay += sojourn;
                        t.throughput += thr;
                        t.departures += 1;
                    }
                    if scenario.record_departures {
                        departures_log.push(DepartureRecord {
                            class: event.class,
                            arrival: tag.arrival,
                            departure: event.time,
                            workload: tag.workload,
                        });
                    }
                }
            }
            EventKind::Arrival => {
                let c = event.class;
                let w = draw_workload(
                    &mut streams.workloads[c],
                    traffic[c].mean_workload,
                    traffic[c].workload,
                );
                state.add_user(c, w);
                let gap = draw_gap(&mut streams.arrivals[c], traffic[c].arrival_rate);
                state.set_next_arrival(c, event.time + gap);
                if in_window {
                    per_slice[inst.slice_of(c)].arrivals += 1;
                    overall.arrivals += 1;
                }
            }
        }
        if scenario.residual_mode == ResidualMode::Resampled {
            for (c, t) in traffic.iter().enumerate() {
                if t.workload == WorkloadDist::Exponential {
                    let rng = &mut streams.workloads[c];
                    state.resample(c, || draw_workload(rng, t.mean_workload, t.workload));
                }
            }
        }
        let (id, r) = alloc.get(state.counts()).map_err(engine_err(events))?;
        if id != alloc_id || r.len() != rates.len() {
            rates.clear();
            rates.extend_from_slice(r);
            alloc_id = id;
            if scenario.audit {
                audit_feasible(inst, &rates, events)?;
            }
        }
        state.set_class_rates(&rates);
        if let Some(tr) = trace.as_mut() {
            tr.events.push(TraceEvent {
                time: event.time,
                kind: event.kind,
                class: event.class,
                population: state.counts().to_vec(),
                alloc_id,
            });
        }
        if let Horizon::Departures(n) = scenario.horizon {
            if event.kind == EventKind::Departure {
                if window.start.is_none() && departed_total >= warm_departures {
                    window.start = Some(event.time);
                }
                if departed_total >= n {
                    break event.time;
                }
            }
        }
    };

    let start = window.start.unwrap_or(final_time);
    let len = final_time - start;
    let avg = |x: f64| if len > 0.0 { x / len } else { 0.0 };
    let busy: Vec<f64> = if len > 0.0 {
        window.busy.iter().map(|b| b / len).collect()
    } else {
        let mut b = vec![0.0; nv + 1];
        b[0] = 1.0;
        b
    };
    let quarter = len / 4.0;
    let q2 = window.mean_between(start + quarter, start + 2.0 * quarter);
    let q4 = window.mean_between(start + 3.0 * quarter, final_time);
    if let Some(tr) = trace.as_mut() {
        tr.end = final_time;
    }
    let metrics = Metrics {
        window: (start, final_time),
        per_slice: per_slice
            .iter()
            .zip(&window.slice_pop)
            .map(|(t, p)| t.finish(avg(*p)))
            .collect(),
        overall: overall.finish(avg(window.total)),
        busy,
        quarter_populations: (q2, q4),
        stability: verdict(q2, q4),
        events,
        allocations: alloc.distinct(),
    };
    Ok(RunOutput {
        metrics,
        trace,
        departures: departures_log,
    })
}

fn audit_feasible(inst: &Instance<f64>, rates: &[f64], event: u64) -> Result<(), SimError> {
    for (r, u) in inst.usage(rates).into_iter().enumerate() {
        if u > 1.0 + 1e-9 {
            return Err(SimError::Infeasible {
                event,
                resource: r,
                usage: u,
            });
        }
    }
    Ok(())
}

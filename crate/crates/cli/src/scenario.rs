//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! schema = 1
//! id = "example"                 # used as scenario_id in the CSV
//! description = "optional text"
//!
//! [[resources]]                  # one table per resource, in demand order
//! id = "r1"
//! capacity = 1.0
//!
//! [[slices]]
//! id = "s1"
//! share = 0.5                    # shares are normalized to sum to one
//!
//! [[classes]]
//! id = "c1"
//! slice = "s1"
//! demand = [1.0]                 # one entry per resource
//! arrival_rate = 0.45
//! mean_workload = 1.0            # default 1
//! workload = "exp"               # "exp" (default) or "det"
//!
//! [run]
//! engine = ["maxmin-scs", "dps"] # one token or a list
//! alpha = 1.0                    # for scs and static-partition; default 1
//! horizon = 250000.0             # time units; or horizon_departures = N
//! warmup = 0.1                   # default 0.1
//! seeds = 20                     # a count (seeds 1..=N) or an explicit list
//! initial_users = [1, 0]         # optional, users present at time zero
//!
//! [sweep]                        # optional
//! parameter = "slices.s1.share"
//! values = [0.1, 0.5, 0.9]
//! ```
//!
//! Engine tokens: `scs`, `maxmin-scs`, `drf`, `dps`, `static-partition`,
//! `dps:drf_unconstrained`.
//!
//! Sweep parameters: `slices.<id>.share` (two-slice scenarios; the other
//! slice gets the complement), `classes.<id>.arrival_rate`,
//! `classes.<id>.mean_workload` (`<id>` may be `*` for every class) and
//! `run.alpha`.
//!
//! Unknown keys are rejected. Syntax errors carry a line number and
//! semantic errors a key path.

use scs_core::model::{
    validate_instance, Instance, InstanceSpec, ModelError, ResourceSpec, SliceSpec, Traffic,
    UserClass, WorkloadDist,
};
use scs_core::sim::{EngineSpec, Horizon, Scenario};
use serde::Deserialize;
use std::fmt;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    Syntax { line: usize, message: String },
    Semantic { path: String, message: String },
    Io { path: String, message: String },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Syntax { line, message } => write!(f, "syntax error at line {line}: {message}"),
            Self::Semantic { path, message } => {
                // "unknown engine at run.engine: ..." style.
                match message.split_once(": ") {
                    Some((head, tail)) => write!(f, "{head} at {path}: {tail}"),
                    None => write!(f, "{message} at {path}"),
                }
            }
            Self::Io { path, message } => write!(f, "cannot read {path}: {message}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn semantic(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Semantic {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSpec {
    schema: u32,
    id: String,
    #[serde(default)]
    description: Option<String>,
    resources: Vec<ResourceEntry>,
    slices: Vec<SliceEntry>,
    classes: Vec<ClassEntry>,
    run: RunEntry,
    #[serde(default)]
    sweep: Option<SweepEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceEntry {
    id: String,
    capacity: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceEntry {
    id: String,
    share: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum WorkloadToken {
    Exp,
    Det,
}

fn one() -> f64 {
    1.0
}

fn exp_token() -> WorkloadToken {
    WorkloadToken::Exp
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    id: String,
    slice: String,
    demand: Vec<f64>,
    arrival_rate: f64,
    #[serde(default = "one")]
    mean_workload: f64,
    #[serde(default = "exp_token")]
    workload: WorkloadToken,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

fn default_warmup() -> f64 {
    0.1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunEntry {
    engine: OneOrMany,
    #[serde(default = "one")]
    alpha: f64,
    #[serde(default)]
    horizon: Option<f64>,
    #[serde(default)]
    horizon_departures: Option<u64>,
    #[serde(default = "default_warmup")]
    warmup: f64,
    seeds: Seeds,
    #[serde(default)]
    initial_users: Option<Vec<u32>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepEntry {
    parameter: String,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepTarget {
    Share { slice: usize },
    ArrivalRate { classes: Vec<usize> },
    MeanWorkload { classes: Vec<usize> },
    Alpha,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: String,
    pub target: SweepTarget,
    pub values: Vec<f64>,
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub id: String,
    pub description: Option<String>,
    /// As written (capacities and shares not normalized).
    pub spec: InstanceSpec<f64>,
    pub instance: Instance<f64>,
    pub engines: Vec<EngineSpec>,
    pub alpha: f64,
    pub horizon: Horizon,
    pub warmup: f64,
    pub seeds: Vec<u64>,
    pub initial_users: Option<Vec<u32>>,
    pub sweep: Option<Sweep>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a scenario.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ScenarioError::Syntax {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let file: FileSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        semantic(
            if path == "." { "<root>".into() } else { path },
            inner.message().to_string(),
        )
    })?;
    build(file)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}

fn build(file: FileSpec) -> Result<ScenarioConfig, ScenarioError> {
    if file.schema != SCHEMA_VERSION {
        return Err(semantic(
            "schema",
            format!(
                "unsupported schema version: {} (expected {SCHEMA_VERSION})",
                file.schema
            ),
        ));
    }
    let spec = InstanceSpec {
        resources: file
            .resources
            .iter()
            .map(|r| ResourceSpec {
                id: r.id.clone(),
                capacity: r.capacity,
            })
            .collect(),
        slices: file
            .slices
            .iter()
            .map(|s| SliceSpec {
                id: s.id.clone(),
                share: s.share,
            })
            .collect(),
        classes: file
            .classes
            .iter()
            .map(|c| UserClass {
                id: c.id.clone(),
                slice: c.slice.clone(),
                demand: c.demand.clone(),
                traffic: Traffic {
                    arrival_rate: c.arrival_rate,
                    mean_workload: c.mean_workload,
                    workload: match c.workload {
                        WorkloadToken::Exp => WorkloadDist::Exponential,
                        WorkloadToken::Det => WorkloadDist::Deterministic,
                    },
                },
            })
            .collect(),
    };
    let instance = validate(&spec)?;

    let run = &file.run;
    let tokens = match &run.engine {
        OneOrMany::One(t) => vec![t.clone()],
        OneOrMany::Many(ts) => ts.clone(),
    };
    if tokens.is_empty() {
        return Err(semantic("run.engine", "no engine given"));
    }
    if !(run.alpha > 0.0 && run.alpha.is_finite()) {
        return Err(semantic(
            "run.alpha",
            format!("alpha must be positive: {}", run.alpha),
        ));
    }
    let engines = tokens
        .iter()
        .map(|t| {
            EngineSpec::parse(t, run.alpha).ok_or_else(|| {
                semantic(
                    "run.engine",
                    format!(
                        "unknown engine: \"{t}\" (expected one of {})",
                        EngineSpec::TOKENS.join(", ")
                    ),
                )
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let horizon = match (run.horizon, run.horizon_departures) {
        (Some(t), None) if t > 0.0 && t.is_finite() => Horizon::Time(t),
        (Some(t), None) => {
            return Err(semantic(
                "run.horizon",
                format!("horizon must be positive: {t}"),
            ))
        }
        (None, Some(n)) if n > 0 => Horizon::Departures(n),
        (None, Some(_)) => {
            return Err(semantic(
                "run.horizon_departures",
                "horizon must be positive",
            ))
        }
        _ => {
            return Err(semantic(
                "run.horizon",
                "exactly one of horizon and horizon_departures is required",
            ))
        }
    };
    if !(0.0..1.0).contains(&run.warmup) {
        return Err(semantic(
            "run.warmup",
            format!("warmup must be in [0, 1): {}", run.warmup),
        ));
    }
    let seeds = match &run.seeds {
        Seeds::Count(0) => return Err(semantic("run.seeds", "at least one seed is required")),
        Seeds::Count(n) => (1..=*n).collect(),
        Seeds::List(v) if v.is_empty() => {
            return Err(semantic("run.seeds", "at least one seed is required"))
        }
        Seeds::List(v) => v.clone(),
    };
    if let Some(init) = &run.initial_users {
        if init.len() != instance.num_classes() {
            return Err(semantic(
                "run.initial_users",
                format!(
                    "wrong length: {} entries for {} classes",
                    init.len(),
                    instance.num_classes()
                ),
            ));
        }
    }
    let sweep = file
        .sweep
        .as_ref()
        .map(|s| parse_sweep(s, &spec))
        .transpose()?;
    let config = ScenarioConfig {
        id: file.id,
        description: file.description,
        spec,
        instance,
        engines,
        alpha: run.alpha,
        horizon,
        warmup: run.warmup,
        seeds,
        initial_users: run.initial_users.clone(),
        sweep,
    };
    if let Some(s) = &config.sweep {
        for (i, v) in s.values.iter().enumerate() {
            config.apply_sweep(*v).map_err(|e| match e {
                ScenarioError::Semantic { message, .. } => {
                    semantic(format!("sweep.values[{i}]"), message)
                }
                other => other,
            })?;
        }
    }
    Ok(config)
}

fn validate(spec: &InstanceSpec<f64>) -> Result<Instance<f64>, ScenarioError> {
    validate_instance(spec).map_err(|e| {
        let idx = |ids: Vec<&String>, id: &str| ids.iter().position(|x| *x == id).unwrap_or(0);
        let classes = || spec.classes.iter().map(|c| &c.id).collect::<Vec<_>>();
        let path = match &e {
            ModelError::EmptyResources => "resources".to_string(),
            ModelError::NonPositiveCapacity { resource } => format!(
                "resources[{}].capacity",
                idx(spec.resources.iter().map(|r| &r.id).collect(), resource)
            ),
            ModelError::NonPositiveShare { slice } => format!(
                "slices[{}].share",
                idx(spec.slices.iter().map(|s| &s.id).collect(), slice)
            ),
            ModelError::ZeroDemand { class }
            | ModelError::NegativeDemand { class, .. }
            | ModelError::DemandLength { class, .. } => {
                format!("classes[{}].demand", idx(classes(), class))
            }
            ModelError::DanglingSlice { class, .. } => {
                format!("classes[{}].slice", idx(classes(), class))
            }
            ModelError::InvalidTraffic { class, .. } => {
                format!("classes[{}]", idx(classes(), class))
            }
            _ => "<root>".to_string(),
        };
        semantic(path, format!("invalid instance: {e}"))
    })
}

fn parse_sweep(s: &SweepEntry, spec: &InstanceSpec<f64>) -> Result<Sweep, ScenarioError> {
    let bad = |m: String| semantic("sweep.parameter", m);
    if s.values.is_empty() {
        return Err(semantic("sweep.values", "no sweep values"));
    }
    let parts: Vec<&str> = s.parameter.split('.').collect();
    let class_set = |id: &str| -> Result<Vec<usize>, ScenarioError> {
        if id == "*" {
            return Ok((0..spec.classes.len()).collect());
        }
        spec.classes
            .iter()
            .position(|c| c.id == id)
            .map(|c| vec![c])
            .ok_or_else(|| bad(format!("unknown class: \"{id}\"")))
    };
    let target = match parts.as_slice() {
        ["slices", id, "share"] => {
            if spec.slices.len() != 2 {
                return Err(bad("share sweeps need exactly two slices".into()));
            }
            let slice = spec
                .slices
                .iter()
                .position(|v| v.id == *id)
                .ok_or_else(|| bad(format!("unknown slice: \"{id}\"")))?;
            SweepTarget::Share { slice }
        }
        ["classes", id, "arrival_rate"] => SweepTarget::ArrivalRate {
            classes: class_set(id)?,
        },
        ["classes", id, "mean_workload"] => SweepTarget::MeanWorkload {
            classes: class_set(id)?,
        },
        ["run", "alpha"] => SweepTarget::Alpha,
        _ => {
            return Err(bad(format!(
                "unsupported sweep parameter: \"{}\"",
                s.parameter
            )))
        }
    };
    Ok(Sweep {
        parameter: s.parameter.clone(),
        target,
        values: s.values.clone(),
    })
}

impl ScenarioConfig {
    /// The scenario with the sweep parameter set to `value`.
    pub fn apply_sweep(&self, value: f64) -> Result<ScenarioConfig, ScenarioError> {
        let Some(sweep) = &self.sweep else {
            return Ok(self.clone());
        };
        let mut out = self.clone();
        match &sweep.target {
            SweepTarget::Share { slice } => {
                if !(value > 0.0 && value < 1.0) {
                    return Err(semantic(
                        "sweep.values",
                        format!("share must be in (0, 1): {value}"),
                    ));
                }
                for (v, s) in out.spec.slices.iter_mut().enumerate() {
                    s.share = if v == *slice { value } else { 1.0 - value };
                }
            }
            SweepTarget::ArrivalRate { classes } => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(semantic(
                        "sweep.values",
                        format!("arrival rate must be non-negative: {value}"),
                    ));
                }
                for &c in classes {
                    out.spec.classes[c].traffic.arrival_rate = value;
                }
            }
            SweepTarget::MeanWorkload { classes } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(semantic(
                        "sweep.values",
                        format!("mean workload must be positive: {value}"),
                    ));
                }
                for &c in classes {
                    out.spec.classes[c].traffic.mean_workload = value;
                }
            }
            SweepTarget::Alpha => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(semantic(
                        "sweep.values",
                        format!("alpha must be positive: {value}"),
                    ));
                }
                out.alpha = value;
                for e in out.engines.iter_mut() {
                    *e = EngineSpec::parse(e.token(), value).expect("known token");
                }
            }
        }
        out.instance = validate(&out.spec)?;
        Ok(out)
    }

    pub fn scenario(&self, engine: EngineSpec, seed: u64) -> Scenario {
        let mut sc = Scenario::new(self.instance.clone(), engine, self.horizon, seed);
        sc.warmup = self.warmup;
        sc.initial_users = self.initial_users.clone();
        sc
    }
}

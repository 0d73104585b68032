//! Result rows as CSV.
//!
//! Columns, in order: `scenario_id, engine, alpha, seed, sweep_value`,
//! then `<slice>.mean_delay, <slice>.mean_throughput` for each slice in file
//! order, then `mean_delay, mean_throughput, frac_idle, frac_one_busy,
//! frac_both_busy, mean_population, departures` for the whole network.
//!
//! Reals are printed like C's `%.6g`. `alpha` is blank for engines without
//! an alpha parameter and `sweep_value` is blank outside sweeps.
//! `frac_both_busy` counts time with at least two busy slices.

use scs_core::sim::{EngineSpec, Metrics};

/// `%.6g`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (5 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub scenario_id: String,
    pub engine: EngineSpec,
    pub seed: u64,
    pub sweep_value: Option<f64>,
    pub metrics: Metrics,
}

pub fn header(slice_ids: &[String]) -> String {
    let mut cols: Vec<String> = ["scenario_id", "engine", "alpha", "seed", "sweep_value"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for id in slice_ids {
        cols.push(format!("{id}.mean_delay"));
        cols.push(format!("{id}.mean_throughput"));
    }
    cols.extend(
        [
            "mean_delay",
            "mean_throughput",
            "frac_idle",
            "frac_one_busy",
            "frac_both_busy",
            "mean_population",
            "departures",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols.join(",")
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        let m = &self.metrics;
        let mut cols = vec![
            self.scenario_id.clone(),
            self.engine.token().to_string(),
            self.engine.alpha().map(fmt_g).unwrap_or_default(),
            self.seed.to_string(),
            self.sweep_value.map(fmt_g).unwrap_or_default(),
        ];
        for s in &m.per_slice {
            cols.push(fmt_g(s.mean_delay));
            cols.push(fmt_g(s.mean_throughput));
        }
        cols.extend([
            fmt_g(m.overall.mean_delay),
            fmt_g(m.overall.mean_throughput),
            fmt_g(m.frac_idle()),
            fmt_g(m.frac_one_busy()),
            fmt_g(m.frac_multi_busy()),
            fmt_g(m.overall.mean_population),
            m.overall.departures.to_string(),
        ]);
        cols.join(",")
    }
}

pub fn to_csv(slice_ids: &[String], rows: &[ResultRow]) -> String {
    let mut out = header(slice_ids);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

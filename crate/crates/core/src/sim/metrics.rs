use super::StabilityVerdict;

/// Measurements of one slice (or of the whole network) over the window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SliceMetrics {
    /// Mean sojourn time of users departing in the window.
    pub mean_delay: f64,
    /// Mean over departing users of workload / sojourn.
    pub mean_throughput: f64,
    pub departures: u64,
    pub arrivals: u64,
    /// Time-average number of active users.
    pub mean_population: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub window: (f64, f64),
    pub per_slice: Vec<SliceMetrics>,
    pub overall: SliceMetrics,
    /// `busy[k]`: fraction of the window with exactly `k` busy slices.
    pub busy: Vec<f64>,
    /// Mean total population over the second and fourth quarters of the
    /// window.
    pub quarter_populations: (f64, f64),
    pub stability: StabilityVerdict,
    /// Events processed over the whole run.
    pub events: u64,
    /// Distinct allocations solved.
    pub allocations: usize,
}

impl Metrics {
    pub fn frac_idle(&self) -> f64 {
        self.busy[0]
    }

    pub fn frac_one_busy(&self) -> f64 {
        self.busy.get(1).copied().unwrap_or(0.0)
    }

    /// Fraction of time with at least two busy slices.
    pub fn frac_multi_busy(&self) -> f64 {
        self.busy.iter().skip(2).sum()
    }

    pub fn window_length(&self) -> f64 {
        self.window.1 - self.window.0
    }

    /// `|L - lambda W| / L` over the window, with `lambda` the departure
    /// rate; `None` without departures.
    pub fn littles_law_error(&self) -> Option<f64> {
        let o = &self.overall;
        if o.departures == 0 || o.mean_population <= 0.0 {
            return None;
        }
        let lambda = o.departures as f64 / self.window_length();
        Some((o.mean_population - lambda * o.mean_delay).abs() / o.mean_population)
    }

    /// Every scalar measurement with a stable name, in a fixed order.
    pub fn named_values(&self, slice_ids: &[String]) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        let mut push = |prefix: &str, m: &SliceMetrics| {
            out.push((format!("{prefix}mean_delay"), m.mean_delay));
            out.push((format!("{prefix}mean_throughput"), m.mean_throughput));
            out.push((format!("{prefix}departures"), m.departures as f64));
            out.push((format!("{prefix}arrivals"), m.arrivals as f64));
            out.push((format!("{prefix}mean_population"), m.mean_population));
        };
        for (id, m) in slice_ids.iter().zip(&self.per_slice) {
            push(&format!("{id}."), m);
        }
        push("", &self.overall);
        for (k, f) in self.busy.iter().enumerate() {
            out.push((format!("frac_busy_{k}"), *f));
        }
        out
    }
}

//! Slow reference solvers, independent of the engine code paths.
//!
//! `oracle_concave_opt` maximizes the SCS utility directly in rate space by
//! projected gradient ascent; `oracle_maxmin` raises the water level in
//! explicit micro-steps; `variational_check` tests the first-order
//! optimality condition against sampled feasible points.

use crate::model::{ClassWeights, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub rates: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration cap was hit before the stopping rule.
    pub certified: bool,
}

fn utility(phi: &[f64], w: &[f64], alpha: f64) -> f64 {
    phi.iter()
        .zip(w)
        .map(|(x, q)| {
            let r = x / q;
            if (alpha - 1.0).abs() < 1e-12 {
                q * r.ln()
            } else {
                q * r.powf(1.0 - alpha) / (1.0 - alpha)
            }
        })
        .sum()
}

/// Euclidean projection onto `{x >= lb, rows . x <= 1}` by exact
/// coordinate ascent on the constraint multipliers.
struct Projector {
    /// `rows[r][i]`: demand of participating class `i` on resource `r`.
    rows: Vec<Vec<f64>>,
    lb: f64,
}

impl Projector {
    fn project(&self, y: &[f64], lambda: &mut [f64]) -> Vec<f64> {
        let n = y.len();
        let point = |lambda: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let shift: f64 = self.rows.iter().zip(lambda).map(|(d, l)| d[i] * l).sum();
                    (y[i] - shift).max(self.lb)
                })
                .collect()
        };
        for _sweep in 0..10_000 {
            let mut moved = 0.0f64;
            for r in 0..self.rows.len() {
                let old = lambda[r];
                lambda[r] = self.best_multiplier(r, y, lambda);
                moved = moved.max((lambda[r] - old).abs());
            }
            if moved < 1e-15 {
                break;
            }
        }
        point(lambda)
    }

    /// Smallest `l >= 0` with `sum_i d_i max(lb, z_i - d_i l) <= 1`, where
    /// `z` is the unclipped point without resource `r`'s multiplier.
    fn best_multiplier(&self, r: usize, y: &[f64], lambda: &[f64]) -> f64 {
        let d = &self.rows[r];
        let z: Vec<f64> = (0..y.len())
            .map(|i| {
                let shift: f64 = self
                    .rows
                    .iter()
                    .zip(lambda)
                    .enumerate()
                    .filter(|(s, _)| *s != r)
                    .map(|(_, (row, l))| row[i] * l)
                    .sum();
                y[i] - shift
            })
            .collect();
        let load = |l: f64| -> f64 {
            (0..z.len())
                .map(|i| d[i] * (z[i] - d[i] * l).max(self.lb))
                .sum()
        };
        if load(0.0) <= 1.0 {
            return 0.0;
        }
        // Piecewise linear and non-increasing in l; walk the breakpoints.
        let mut bps: Vec<f64> = (0..z.len())
            .filter(|&i| d[i] > 0.0)
            .map(|i| ((z[i] - self.lb) / d[i]).max(0.0))
            .collect();
        bps.sort_by(|a, b| a.total_cmp(b));
        let mut lo = 0.0;
        for b in bps {
            if load(b) <= 1.0 {
                let (f_lo, f_hi) = (load(lo), load(b));
                if f_lo == f_hi {
                    return b;
                }
                return lo + (b - lo) * (f_lo - 1.0) / (f_lo - f_hi);
            }
            lo = b;
        }
        lo
    }
}

/// Projected gradient ascent on `sum_c q_c (phi_c/q_c)^(1-alpha)/(1-alpha)`
/// (log form at `alpha = 1`) over the unit-capacity polytope.
///
/// The ascent direction is the gradient normalized to unit max-norm, so
/// `step` is in rate units whatever the scale of the utility. Each accepted
/// step doubles the step length, each rejected one halves it; the run stops
/// once an accepted step moves the point by less than `1e-11`.
pub fn oracle_concave_opt(
    instance: &Instance<f64>,
    q: &ClassWeights<f64>,
    alpha: f64,
    step: f64,
    iters: usize,
) -> OracleResult {
    let members: Vec<usize> = (0..instance.num_classes())
        .filter(|&c| q.get(c) > 0.0)
        .collect();
    let w: Vec<f64> = members.iter().map(|&c| q.get(c)).collect();
    let rows: Vec<Vec<f64>> = (0..instance.num_resources())
        .map(|r| members.iter().map(|&c| instance.demand(c)[r]).collect())
        .collect();
    let proj = Projector { rows, lb: 1e-12 };
    let mut lambda = vec![0.0; instance.num_resources()];

    // Start from the weights scaled into the interior.
    let peak = proj
        .rows
        .iter()
        .map(|d| d.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
        .fold(0.0, f64::max);
    let mut x: Vec<f64> = w.iter().map(|v| v / (peak * 1.01)).collect();
    let mut fx = utility(&x, &w, alpha);
    let mut t = step;
    let mut iterations = 0;
    let mut certified = members.is_empty();
    while !certified && iterations < iters {
        iterations += 1;
        let mut grad: Vec<f64> = x
            .iter()
            .zip(&w)
            .map(|(p, q)| (p / q).powf(-alpha))
            .collect();
        let gmax = grad.iter().copied().fold(0.0, f64::max);
        for g in &mut grad {
            *g /= gmax;
        }
        loop {
            let y: Vec<f64> = x.iter().zip(&grad).map(|(p, g)| p + t * g).collect();
            let xn = proj.project(&y, &mut lambda);
            let fxn = utility(&xn, &w, alpha);
            let ascent: f64 = grad
                .iter()
                .zip(xn.iter().zip(&x))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            let moved = xn
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if fxn.is_finite() && fxn >= fx && ascent >= 0.0 {
                x = xn;
                fx = fxn;
                t *= 2.0;
                certified = moved < 1e-11;
                break;
            }
            t *= 0.5;
            if t < 1e-15 {
                certified = true;
                break;
            }
        }
    }

    let mut rates = vec![0.0; instance.num_classes()];
    for (&c, v) in members.iter().zip(&x) {
        rates[c] = *v;
    }
    OracleResult {
        rates,
        iterations,
        certified,
    }
}

/// Water-filling by explicit micro-steps of the common level.
///
/// Each step raises every active rate by at most `microstep`; a class
/// freezes as soon as one of its resources could not absorb another step.
pub fn oracle_maxmin(instance: &Instance<f64>, q: &ClassWeights<f64>, microstep: f64) -> Vec<f64> {
    let nc = instance.num_classes();
    let nr = instance.num_resources();
    let mut active: Vec<bool> = (0..nc).map(|c| q.get(c) > 0.0).collect();
    let mut rates = vec![0.0; nc];
    let qmax = q.values().iter().copied().fold(0.0, f64::max);
    if qmax <= 0.0 {
        return rates;
    }
    let dt = microstep / qmax;
    let mut level = 0.0;
    while active.iter().any(|a| *a) {
        let usage = instance.usage(&rates);
        let mut slope = vec![0.0; nr];
        for c in (0..nc).filter(|&c| active[c]) {
            for r in 0..nr {
                slope[r] += instance.demand(c)[r] * q.get(c);
            }
        }
        let full: Vec<bool> = (0..nr)
            .map(|r| slope[r] > 0.0 && 1.0 - usage[r] < dt * slope[r])
            .collect();
        for c in 0..nc {
            if active[c] && (0..nr).any(|r| full[r] && instance.demand(c)[r] > 0.0) {
                active[c] = false;
            }
        }
        level += dt;
        for c in (0..nc).filter(|&c| active[c]) {
            rates[c] = q.get(c) * level;
        }
    }
    rates
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReport {
    pub passed: bool,
    /// Largest sampled `sum_c (phi_c/q_c)^(-alpha) (phi'_c - phi_c)`.
    pub worst: f64,
    pub samples: usize,
}

/// First-order optimality test: for the maximizer `phi`, every feasible
/// `phi'` satisfies `sum_c (phi_c/q_c)^(-alpha) (phi'_c - phi_c) <= 1e-6`.
///
/// Samples mix random boundary points with exchange moves along saturated
/// resources, where a non-optimal point is most likely to be caught.
pub fn variational_check(
    instance: &Instance<f64>,
    phi: &[f64],
    q: &ClassWeights<f64>,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> VariationalReport {
    let nc = instance.num_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<usize> = (0..nc).filter(|&c| q.get(c) > 0.0).collect();
    let grad: Vec<f64> = (0..nc)
        .map(|c| {
            if q.get(c) > 0.0 {
                (phi[c] / q.get(c)).powf(-alpha)
            } else {
                0.0
            }
        })
        .collect();
    let usage = instance.usage(phi);
    let saturated: Vec<usize> = (0..instance.num_resources())
        .filter(|&r| usage[r] > 1.0 - 1e-6)
        .collect();
    let value = |p: &[f64]| -> f64 { (0..nc).map(|c| grad[c] * (p[c] - phi[c])).sum() };
    let feasible = |p: &[f64]| instance.usage(p).iter().all(|u| *u <= 1.0 + 1e-12);

    let mut worst = f64::NEG_INFINITY;
    let mut taken = 0;
    let mut attempts = 0;
    while taken < samples && attempts < samples * 50 {
        attempts += 1;
        let candidate: Vec<f64> = match rng.random_range(0..3) {
            0 => {
                // Random point pushed out to the boundary.
                let mut p = vec![0.0; nc];
                for &c in &members {
                    p[c] = -rng.random::<f64>().ln();
                }
                let peak = instance.usage(&p).into_iter().fold(0.0, f64::max);
                p.iter().map(|x| x / peak).collect()
            }
            1 if !saturated.is_empty() => {
                // Shift rate between two classes of a saturated resource,
                // keeping that resource's usage fixed.
                let r = saturated[rng.random_range(0..saturated.len())];
                let on: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&c| instance.demand(c)[r] > 0.0)
                    .collect();
                if on.len() < 2 {
                    continue;
                }
                let a = on[rng.random_range(0..on.len())];
                let b = on[rng.random_range(0..on.len())];
                if a == b {
                    continue;
                }
                let eps = phi[b] * rng.random_range(1e-4..0.5);
                let mut p = phi.to_vec();
                p[b] -= eps;
                p[a] += eps * instance.demand(b)[r] / instance.demand(a)[r];
                p
            }
            _ => {
                // Small random step from phi.
                let scale = 10f64.powf(rng.random_range(-4.0..-1.0));
                let mut p = phi.to_vec();
                for &c in &members {
                    p[c] = (p[c] + scale * (rng.random::<f64>() - 0.5)).max(0.0);
                }
                p
            }
        };
        // Shrink toward phi until feasible (rejection on the segment).
        let mut cand = candidate;
        let mut ok = feasible(&cand);
        for _ in 0..40 {
            if ok {
                break;
            }
            for c in 0..nc {
                cand[c] = phi[c] + 0.5 * (cand[c] - phi[c]);
            }
            ok = feasible(&cand);
        }
        if !ok || cand.iter().any(|x| *x < 0.0) {
            continue;
        }
        taken += 1;
        worst = worst.max(value(&cand));
    }
    VariationalReport {
        passed: worst <= 1e-6,
        worst,
        samples: taken,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::{maxmin_waterfill, solve_alpha_scs, SolverOptions};
    use crate::model::{scwa_weights, table1_instance, PopulationState, ScwaPolicy};

    #[test]
    fn table1_oracle_matches_hand_solution() {
        let inst = table1_instance::<f64>();
        let q = scwa_weights(
            &inst,
            &PopulationState::ones(3),
            ScwaPolicy::EqualIntraSlice,
        );
        let res = oracle_concave_opt(&inst, &q, 1.0, 0.1, 200_000);
        for (got, want) in res.rates.iter().zip([0.4, 1.0 / 3.0, 2.0 / 3.0]) {
            assert!((got - want).abs() < 1e-3, "{:?}", res.rates);
        }
    }

    #[test]
    fn maxmin_oracle_two_rounds() {
        let inst = table1_instance::<f64>();
        let q = scwa_weights(
            &inst,
            &PopulationState::ones(3),
            ScwaPolicy::EqualIntraSlice,
        );
        let slow = oracle_maxmin(&inst, &q, 1e-5);
        let fast = maxmin_waterfill(&inst, &q);
        for (a, b) in slow.iter().zip(fast.rates()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn variational_pass_and_fail() {
        let inst = table1_instance::<f64>();
        let q = scwa_weights(
            &inst,
            &PopulationState::ones(3),
            ScwaPolicy::EqualIntraSlice,
        );
        let res = solve_alpha_scs(&inst, &q, 2.0, &SolverOptions::default()).unwrap();
        let ok = variational_check(&inst, res.rates(), &q, 2.0, 2000, 7);
        assert!(ok.passed, "{ok:?}");

        let mut bad = res.rates().to_vec();
        bad[0] *= 1.05;
        let peak = inst.usage(&bad).into_iter().fold(0.0, f64::max);
        for x in &mut bad {
            *x /= peak;
        }
        let rep = variational_check(&inst, &bad, &q, 2.0, 2000, 7);
        assert!(!rep.passed, "{rep:?}");
    }
}

//! Dual (resource price) solver for the share-constrained alpha-fair problem
//!
//!   max  sum_c w_c (phi_c / w_c)^(1-alpha) / (1-alpha)     (w_c log(phi_c/w_c) at alpha = 1)
//!   s.t. sum_c d_c^r phi_c <= 1  for every resource r,
//!
//! with capacities already folded into the demands. For prices `nu >= 0`
//! the stationarity map is closed form, `phi_c = w_c p_c^(-1/alpha)` with
//! `p_c = sum_r d_c^r nu_r`, so the solver only searches over `nu`.
//!
//! A short multiplicative phase `nu_r <- nu_r load_r^kappa` (halving `kappa`
//! whenever the KKT residual grows) brings the prices near the optimum; a
//! projected Newton method on the dual function then finishes to the
//! requested tolerance. Warm starts skip the multiplicative phase.

use super::linalg::solve_dense;
use super::{EngineError, Residuals, SolverOptions};
use crate::scalar::{lit, Real};

pub(crate) struct PriceProblem<T> {
    /// Per participating class: `(local resource, demand / capacity)`.
    demand: Vec<Vec<(usize, T)>>,
    weights: Vec<T>,
    num_resources: usize,
    alpha: T,
    log_form: bool,
}

pub(crate) struct PriceSolution<T> {
    pub prices: Vec<T>,
    pub rates: Vec<T>,
    pub iterations: usize,
    pub residuals: Residuals,
}

struct Point<T> {
    dual: T,
    /// Sum of the absolute values of the terms of `dual`; sets the
    /// roundoff floor of the line search.
    magnitude: T,
    rates: Vec<T>,
    prices_per_class: Vec<T>,
    loads: Vec<T>,
}

impl<T: Real> PriceProblem<T> {
    pub fn new(
        demand: Vec<Vec<(usize, T)>>,
        weights: Vec<T>,
        num_resources: usize,
        alpha: T,
        log_form: bool,
    ) -> Self {
        debug_assert_eq!(demand.len(), weights.len());
        debug_assert!(demand.iter().all(|row| !row.is_empty()));
        Self {
            demand,
            weights,
            num_resources,
            alpha,
            log_form,
        }
    }

    fn evaluate(&self, nu: &[T]) -> Option<Point<T>> {
        let alpha = self.alpha;
        let expo = (alpha - T::one()) / alpha;
        // Away from alpha = 1 the additive constant of h is dropped: it does
        // not move the minimizer but swamps the variation when prices are
        // tiny (large alpha).
        let keep_constant = expo.abs() < lit(0.1);
        let mut dual = nu.iter().fold(T::zero(), |a, v| a + *v);
        let mut magnitude = dual;
        let mut rates = Vec::with_capacity(self.weights.len());
        let mut prices_per_class = Vec::with_capacity(self.weights.len());
        let mut loads = vec![T::zero(); self.num_resources];
        for (row, &w) in self.demand.iter().zip(&self.weights) {
            let p = row.iter().fold(T::zero(), |a, &(r, d)| a + d * nu[r]);
            if !(p > T::zero()) || !p.is_finite() {
                return None;
            }
            let ln_p = p.ln();
            let (phi, h) = if self.log_form {
                (w / p, -w * ln_p)
            } else if keep_constant {
                // h(p) = w (1 - p^e) / e with e = (alpha-1)/alpha, which
                // tends to -w ln p as alpha -> 1.
                (
                    w * (-ln_p / alpha).exp(),
                    -w * (expo * ln_p).exp_m1() / expo,
                )
            } else {
                (w * (-ln_p / alpha).exp(), -w * (expo * ln_p).exp() / expo)
            };
            if !phi.is_finite() || !h.is_finite() {
                return None;
            }
            dual += h;
            magnitude += h.abs();
            for &(r, d) in row {
                loads[r] += d * phi;
            }
            rates.push(phi);
            prices_per_class.push(p);
        }
        Some(Point {
            dual,
            magnitude,
            rates,
            prices_per_class,
            loads,
        })
    }

    fn residuals(&self, nu: &[T], point: &Point<T>) -> Residuals {
        // Slackness is weighted by the largest share a resource takes of
        // any class's price. Prices scale like (phi/q)^(-alpha), so this
        // stays meaningful at large alpha, and a price stuck at the bottom
        // of the floating-point range still shows up when it dominates
        // some class.
        let mut share = vec![T::zero(); self.num_resources];
        for (row, p) in self.demand.iter().zip(&point.prices_per_class) {
            for &(r, d) in row {
                share[r] = share[r].max(d * nu[r] / *p);
            }
        }
        let mut feasibility = 0.0f64;
        let mut slack = 0.0f64;
        for (l, w) in point.loads.iter().zip(&share) {
            let l = l.as_f64();
            feasibility = feasibility.max(l - 1.0);
            slack = slack.max(w.as_f64() * (1.0 - l).abs());
        }
        Residuals {
            feasibility,
            complementary_slackness: slack,
            stationarity: 0.0,
        }
    }

    fn initial_prices(&self, start: Option<&[T]>) -> Vec<T> {
        let uniform = T::one() / lit::<T>(self.num_resources as f64);
        match start {
            Some(s) if s.len() == self.num_resources => {
                let mut nu: Vec<T> = s
                    .iter()
                    .map(|v| {
                        if v.is_finite() && *v > T::zero() {
                            *v
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                if self.evaluate(&nu).is_none() {
                    let keep: T = lit(0.9);
                    for v in nu.iter_mut() {
                        *v = keep * *v + (T::one() - keep) * uniform;
                    }
                }
                nu
            }
            _ => vec![uniform; self.num_resources],
        }
    }

    pub fn solve(
        &self,
        start: Option<&[T]>,
        opts: &SolverOptions,
    ) -> Result<PriceSolution<T>, EngineError> {
        if self.weights.is_empty() {
            return Ok(PriceSolution {
                prices: vec![T::zero(); self.num_resources],
                rates: Vec::new(),
                iterations: 0,
                residuals: Residuals::default(),
            });
        }
        let mut nu = self.initial_prices(start);
        let mut iterations = 0;
        if start.is_none() {
            self.multiplicative_phase(&mut nu, &mut iterations, opts);
        }
        self.newton_phase(nu, iterations, opts)
    }

    fn multiplicative_phase(&self, nu: &mut [T], iterations: &mut usize, opts: &SolverOptions) {
        const MAX_STEPS: usize = 60;
        let Some(mut point) = self.evaluate(nu) else {
            return;
        };
        let mut residual = self.residuals(nu, &point).max();
        let mut kappa = self.alpha / lit(2.0);
        let floor: T = lit(1e-300);
        for _ in 0..MAX_STEPS {
            if residual < 1e-3 || *iterations >= opts.max_iterations {
                break;
            }
            *iterations += 1;
            let trial: Vec<T> = nu
                .iter()
                .zip(&point.loads)
                .map(|(v, l)| (*v * l.powf(kappa)).max(floor))
                .collect();
            if let Some(next) = self.evaluate(&trial) {
                let r = self.residuals(&trial, &next).max();
                if r < residual {
                    nu.copy_from_slice(&trial);
                    point = next;
                    residual = r;
                    continue;
                }
            }
            kappa /= lit(2.0);
            if kappa.as_f64() < 1e-4 {
                break;
            }
        }
    }

    fn newton_phase(
        &self,
        mut nu: Vec<T>,
        mut iterations: usize,
        opts: &SolverOptions,
    ) -> Result<PriceSolution<T>, EngineError> {
        let m = self.num_resources;
        let mut point = match self.evaluate(&nu) {
            Some(p) => p,
            None => {
                nu = self.initial_prices(None);
                self.evaluate(&nu)
                    .expect("uniform prices give positive class prices")
            }
        };
        let eps = T::epsilon();
        loop {
            let residuals = self.residuals(&nu, &point);
            if residuals.max() <= opts.tolerance {
                return Ok(PriceSolution {
                    prices: nu,
                    rates: point.rates,
                    iterations,
                    residuals,
                });
            }
            if iterations >= opts.max_iterations {
                return Err(EngineError::NonConvergence {
                    iterations,
                    residuals,
                });
            }
            iterations += 1;

            let grad: Vec<T> = point.loads.iter().map(|l| T::one() - *l).collect();
            let hess = self.hessian(&point);
            // Diagonally scaled gradient step; prices live on wildly
            // different scales at large alpha.
            let scaled: Vec<T> = (0..m)
                .map(|r| {
                    if hess[r][r] > T::zero() {
                        grad[r] / hess[r][r]
                    } else {
                        grad[r]
                    }
                })
                .collect();
            let bound_eps = (0..m)
                .map(|r| (nu[r] - (nu[r] - scaled[r]).max(T::zero())).abs())
                .fold(T::zero(), T::max);
            let free: Vec<bool> = (0..m)
                .map(|r| !(nu[r] <= bound_eps && grad[r] > T::zero()))
                .collect();

            let direction = self.newton_direction(&hess, &grad, &free);
            let slack = lit::<T>(64.0) * eps * point.magnitude;

            let mut accepted = None;
            for newton in [true, false] {
                let mut t = T::one();
                for _ in 0..100 {
                    let trial: Vec<T> = (0..m)
                        .map(|r| {
                            let step = if newton && free[r] {
                                direction[r]
                            } else {
                                -scaled[r]
                            };
                            (nu[r] + t * step).max(T::zero())
                        })
                        .collect();
                    if let Some(next) = self.evaluate(&trial) {
                        let predicted = trial
                            .iter()
                            .zip(&nu)
                            .zip(&grad)
                            .fold(T::zero(), |a, ((x, v), g)| a + *g * (*x - *v));
                        if next.dual <= point.dual + lit::<T>(1e-4) * predicted + slack {
                            accepted = Some((trial, next));
                            break;
                        }
                    }
                    t /= lit(2.0);
                }
                if accepted.is_some() {
                    break;
                }
            }
            match accepted {
                Some((trial, next)) => {
                    nu = trial;
                    point = next;
                }
                None => {
                    return Err(EngineError::NonConvergence {
                        iterations,
                        residuals,
                    })
                }
            }
        }
    }

    /// `sum_c d_c^r d_c^s phi_c / (alpha p_c)`.
    fn hessian(&self, point: &Point<T>) -> Vec<Vec<T>> {
        let m = self.num_resources;
        let mut hess = vec![vec![T::zero(); m]; m];
        for ((row, phi), p) in self
            .demand
            .iter()
            .zip(&point.rates)
            .zip(&point.prices_per_class)
        {
            let curv = *phi / (self.alpha * *p);
            for &(r, dr) in row {
                for &(s, ds) in row {
                    hess[r][s] += curv * dr * ds;
                }
            }
        }
        hess
    }

    /// Newton step on the free prices, Jacobi-scaled and lightly
    /// regularized; bound prices get no Newton component.
    fn newton_direction(&self, hess: &[Vec<T>], grad: &[T], free: &[bool]) -> Vec<T> {
        let idx: Vec<usize> = (0..self.num_resources).filter(|&r| free[r]).collect();
        let k = idx.len();
        let scale: Vec<T> = idx
            .iter()
            .map(|&r| {
                let h = hess[r][r];
                if h > T::zero() {
                    T::one() / h.sqrt()
                } else {
                    T::one()
                }
            })
            .collect();
        let base: Vec<Vec<T>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| scale[i] * hess[idx[i]][idx[j]] * scale[j])
                    .collect()
            })
            .collect();
        let mut dir = vec![T::zero(); self.num_resources];
        let mut mu: T = lit(1e-12);
        for _ in 0..8 {
            let mut a = base.clone();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += mu;
            }
            let mut b: Vec<T> = (0..k).map(|i| -grad[idx[i]] * scale[i]).collect();
            if let Some(y) = solve_dense(&mut a, &mut b) {
                for i in 0..k {
                    dir[idx[i]] = y[i] * scale[i];
                }
                return dir;
            }
            mu *= lit(1e3);
        }
        for &r in &idx {
            dir[r] = -grad[r];
        }
        dir
    }
}

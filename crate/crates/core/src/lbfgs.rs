//! Limited-memory BFGS with a backtracking Armijo line search.
//!
//! The driver is organised in outer iterations. Each outer iteration runs at
//! most `max_inner_iters` quasi-Newton updates; the curvature memory is kept
//! across outer iterations until [`Lbfgs::reset`] is called.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    /// Number of curvature pairs kept.
    pub history_size: usize,
    /// Quasi-Newton updates per outer iteration.
    pub max_inner_iters: usize,
    /// Trial step along the steepest-descent direction when no curvature
    /// information is available, scaled by `min(1, 1 / max|g|)`.
    pub initial_step: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Step halvings tried before the line search gives up.
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            history_size: 10,
            max_inner_iters: 20,
            initial_step: 0.05,
            c1: 1e-4,
            max_backtracks: 40,
        }
    }
}

/// Why an outer iteration stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterStatus {
    /// All inner updates were performed.
    Budget,
    /// The gradient vanished exactly.
    Stationary,
    /// No step satisfying the Armijo condition was found, even along the
    /// steepest-descent direction.
    LineSearchFailed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterReport {
    pub status: OuterStatus,
    pub value: f64,
    pub updates: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Lbfgs {
    cfg: LbfgsConfig,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
    rho: VecDeque<f64>,
    value: f64,
    grad: Vec<f64>,
    primed: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Lbfgs {
    pub fn new(cfg: LbfgsConfig) -> Self {
        Self {
            cfg,
            s: VecDeque::new(),
            y: VecDeque::new(),
            rho: VecDeque::new(),
            value: f64::NAN,
            grad: Vec::new(),
            primed: false,
        }
    }

    pub fn config(&self) -> &LbfgsConfig {
        &self.cfg
    }

    /// Forgets curvature pairs and the cached value at the current point.
    /// Needed whenever the objective changes between outer iterations.
    pub fn reset(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
        self.primed = false;
    }

    /// Drops the cached value and gradient but keeps the curvature pairs,
    /// for objectives that drift slowly between outer iterations.
    pub fn invalidate(&mut self) {
        self.primed = false;
    }

    /// Two-loop recursion: returns `-H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = g.to_vec();
        let m = self.s.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            alpha[i] = self.rho[i] * dot(&self.s[i], &q);
            for (qk, yk) in q.iter_mut().zip(&self.y[i]) {
                *qk -= alpha[i] * yk;
            }
        }
        if m > 0 {
            let last = m - 1;
            let gamma = dot(&self.s[last], &self.y[last]) / dot(&self.y[last], &self.y[last]);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..m {
            let beta = self.rho[i] * dot(&self.y[i], &q);
            for (qk, sk) in q.iter_mut().zip(&self.s[i]) {
                *qk += (alpha[i] - beta) * sk;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }

    /// Runs one outer iteration on `x`. `eval` returns the objective and
    /// writes its gradient.
    pub fn outer<F>(&mut self, x: &mut [f64], mut eval: F) -> OuterReport
    where
        F: FnMut(&[f64], &mut [f64]) -> f64,
    {
        let n = x.len();
        let mut evaluations = 0;
        if !self.primed || self.grad.len() != n {
            self.grad = vec![0.0; n];
            self.value = eval(x, &mut self.grad);
            evaluations += 1;
            self.primed = true;
        }
        let mut trial = vec![0.0; n];
        let mut trial_grad = vec![0.0; n];
        let mut updates = 0;
        while updates < self.cfg.max_inner_iters {
            let g_max = self.grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if g_max == 0.0 {
                return OuterReport {
                    status: OuterStatus::Stationary,
                    value: self.value,
                    updates,
                    evaluations,
                };
            }
            let mut d = self.direction(&self.grad);
            let mut slope = dot(&self.grad, &d);
            let mut steepest = self.s.is_empty();
            if !(slope < 0.0) || !slope.is_finite() {
                self.reset();
                self.primed = true;
                d = self.grad.iter().map(|v| -v).collect();
                slope = dot(&self.grad, &d);
                steepest = true;
            }
            let mut t = if steepest {
                self.cfg.initial_step * (1.0 / g_max).min(1.0)
            } else {
                1.0
            };
            let mut accepted = None;
            for _ in 0..=self.cfg.max_backtracks {
                for ((tr, xi), di) in trial.iter_mut().zip(x.iter()).zip(&d) {
                    *tr = xi + t * di;
                }
                let v = eval(&trial, &mut trial_grad);
                evaluations += 1;
                if v.is_finite() && v <= self.value + self.cfg.c1 * t * slope {
                    accepted = Some(v);
                    break;
                }
                t *= 0.5;
            }
            let Some(v) = accepted else {
                if !steepest {
                    // retry from scratch along the negative gradient
                    self.reset();
                    self.primed = true;
                    continue;
                }
                return OuterReport {
                    status: OuterStatus::LineSearchFailed,
                    value: self.value,
                    updates,
                    evaluations,
                };
            };
            let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = trial_grad.iter().zip(&self.grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-10 * dot(&y, &y).max(f64::MIN_POSITIVE) {
                if self.s.len() == self.cfg.history_size {
                    self.s.pop_front();
                    self.y.pop_front();
                    self.rho.pop_front();
                }
                self.s.push_back(s);
                self.y.push_back(y);
                self.rho.push_back(1.0 / sy);
            }
            x.copy_from_slice(&trial);
            core::mem::swap(&mut self.grad, &mut trial_grad);
            self.value = v;
            updates += 1;
        }
        OuterReport {
            status: OuterStatus::Budget,
            value: self.value,
            updates,
            evaluations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn minimizes_rosenbrock() {
        let mut opt = Lbfgs::new(LbfgsConfig::default());
        let mut x = [-1.2, 1.0];
        let mut last = f64::INFINITY;
        for _ in 0..20 {
            let r = opt.outer(&mut x, rosenbrock);
            assert!(r.value <= last);
            last = r.value;
            if r.status != OuterStatus::Budget {
                break;
            }
        }
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn quadratic_is_solved_within_one_outer() {
        let diag = [1.0, 10.0, 100.0, 0.5];
        let mut opt = Lbfgs::new(LbfgsConfig::default());
        let mut x = [1.0, -2.0, 0.3, 4.0];
        let r = opt.outer(&mut x, |x, g| {
            let mut v = 0.0;
            for i in 0..4 {
                g[i] = diag[i] * x[i];
                v += 0.5 * diag[i] * x[i] * x[i];
            }
            v
        });
        assert!(r.value < 1e-12, "{r:?}");
    }
}

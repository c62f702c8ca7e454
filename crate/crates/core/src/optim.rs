//! Derivative-free maximization with the Nelder–Mead simplex.

use crate::error::{Error, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Simplex settings. Convergence requires both the simplex diameter to drop
/// below `x_tol` and the spread of objective values to drop below `f_tol`.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
    /// Offset of the initial vertices from `x0` along each axis.
    pub initial_step: f64,
    /// Number of fresh-simplex restarts from the best vertex after the first run.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            x_tol: 1e-8,
            f_tol: f64::INFINITY,
            max_iter: 5000,
            initial_step: 0.1,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub trace: Vec<f64>,
}

/// Maximizes `objective` from `x0` until the simplex diameter falls below
/// `tol` or `max_iter` iterations have run (reported as not converged).
pub fn maximize<F>(objective: F, x0: &[f64], tol: f64, max_iter: usize) -> Result<Maximum>
where
    F: FnMut(&[f64]) -> f64,
{
    NelderMead {
        x_tol: tol,
        max_iter,
        ..NelderMead::default()
    }
    .maximize(objective, x0)
}

impl NelderMead {
    pub fn maximize<F>(&self, mut objective: F, x0: &[f64]) -> Result<Maximum>
    where
        F: FnMut(&[f64]) -> f64,
    {
        if x0.is_empty() {
            return Err(Error::InvalidParams("empty starting point".into()));
        }
        let f0 = objective(x0);
        if !f0.is_finite() {
            return Err(Error::Convergence(format!("objective is not finite at the starting point ({f0})")));
        }
        // Minimize the negation; non-finite values become +inf and are never accepted.
        let mut neg = |x: &[f64]| {
            let v = -objective(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut best = x0.to_vec();
        let mut best_f = -f0;
        let mut iterations = 0;
        let mut evaluations = 1;
        let mut trace = Vec::new();
        let mut converged = false;
        for _ in 0..=self.restarts {
            let run = self.run(&mut neg, &best, best_f, self.max_iter.saturating_sub(iterations), &mut trace);
            iterations += run.iterations;
            evaluations += run.evaluations;
            converged = run.converged;
            let improved = run.f < best_f;
            if run.f <= best_f {
                best = run.x;
                best_f = run.f;
            }
            if iterations >= self.max_iter || (converged && !improved) {
                break;
            }
        }
        Ok(Maximum {
            x: best,
            value: -best_f,
            iterations,
            evaluations,
            converged,
            trace,
        })
    }

    fn run<F>(&self, f: &mut F, x0: &[f64], f_x0: f64, max_iter: usize, trace: &mut Vec<f64>) -> Run
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        values.push(f_x0);
        let mut evaluations = 0;
        for i in 0..n {
            let mut v = x0.to_vec();
            v[i] += self.initial_step;
            values.push(f(&v));
            simplex.push(v);
            evaluations += 1;
        }

        let mut order: Vec<usize> = (0..=n).collect();
        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut trial2 = vec![0.0; n];
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let (lo, hi, second) = (order[0], order[n], order[n - 1]);

            let spread = values[hi] - values[lo];
            let diameter = simplex
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&simplex[lo])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            if diameter < self.x_tol && spread <= self.f_tol {
                converged = true;
                break;
            }
            iterations += 1;

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for &i in &order[..n] {
                for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                    *c += x;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= n as f64);

            let worst = &simplex[hi];
            for j in 0..n {
                trial[j] = centroid[j] + REFLECT * (centroid[j] - worst[j]);
            }
            let f_r = f(&trial);
            evaluations += 1;

            if f_r < values[lo] {
                for j in 0..n {
                    trial2[j] = centroid[j] + EXPAND * (trial[j] - centroid[j]);
                }
                let f_e = f(&trial2);
                evaluations += 1;
                if f_e < f_r {
                    simplex[hi].copy_from_slice(&trial2);
                    values[hi] = f_e;
                } else {
                    simplex[hi].copy_from_slice(&trial);
                    values[hi] = f_r;
                }
            } else if f_r < values[second] {
                simplex[hi].copy_from_slice(&trial);
                values[hi] = f_r;
            } else {
                let outside = f_r < values[hi];
                for j in 0..n {
                    trial2[j] = if outside {
                        centroid[j] + CONTRACT * (trial[j] - centroid[j])
                    } else {
                        centroid[j] + CONTRACT * (simplex[hi][j] - centroid[j])
                    };
                }
                let f_c = f(&trial2);
                evaluations += 1;
                if f_c < values[hi].min(f_r) {
                    simplex[hi].copy_from_slice(&trial2);
                    values[hi] = f_c;
                } else {
                    let best = simplex[lo].clone();
                    for &i in &order[1..] {
                        for j in 0..n {
                            simplex[i][j] = best[j] + SHRINK * (simplex[i][j] - best[j]);
                        }
                        values[i] = f(&simplex[i]);
                        evaluations += 1;
                    }
                }
            }
            trace.push(-values.iter().copied().fold(f64::INFINITY, f64::min));
        }
        let lo = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        Run {
            x: simplex.swap_remove(lo),
            f: values[lo],
            iterations,
            evaluations,
            converged,
        }
    }
}

struct Run {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

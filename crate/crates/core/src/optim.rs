//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns the objective and writes its gradient.
///
/// Converges when the objective decreases by at most `tol` on two
/// consecutive iterations, when the gradient vanishes, or when no descent
/// step can be found along either the quasi-Newton or steepest direction.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, max_iterations: usize, tol: f64) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut value = f(&x, &mut g);
    if n == 0 || !value.is_finite() {
        return LbfgsOutcome {
            x,
            value,
            iterations: 0,
            converged: n == 0,
        };
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut small_steps = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    for iteration in 0..max_iterations {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= 1e-14 {
            return LbfgsOutcome {
                x,
                value,
                iterations: iteration,
                converged: true,
            };
        }

        let mut used_steepest = history.is_empty();
        let mut direction = two_loop(&g, &history);
        if dot(&direction, &g) >= 0.0 {
            history.clear();
            used_steepest = true;
            direction = g.iter().map(|v| -v).collect();
        }

        let mut step = if used_steepest { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let mut accepted = None;
        loop {
            let slope = dot(&direction, &g);
            for _ in 0..MAX_BACKTRACKS {
                for i in 0..n {
                    x_new[i] = x[i] + step * direction[i];
                }
                let trial = f(&x_new, &mut g_new);
                if trial.is_finite() && trial <= value + ARMIJO * step * slope {
                    accepted = Some(trial);
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() || used_steepest {
                break;
            }
            history.clear();
            used_steepest = true;
            direction = g.iter().map(|v| -v).collect();
            step = (1.0 / gnorm).min(1.0);
        }

        let Some(new_value) = accepted else {
            // no descent available at working precision
            return LbfgsOutcome {
                x,
                value,
                iterations: iteration,
                converged: true,
            };
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let decrease = value - new_value;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        value = new_value;

        if decrease <= tol {
            small_steps += 1;
            if small_steps >= 2 {
                return LbfgsOutcome {
                    x,
                    value,
                    iterations: iteration + 1,
                    converged: true,
                };
            }
        } else {
            small_steps = 0;
        }
    }
    LbfgsOutcome {
        x,
        value,
        iterations: max_iterations,
        converged: false,
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

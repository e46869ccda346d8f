//! Deterministic derivative-free and gradient-based minimizers.
//!
//! Both optimizers are intentionally plain: fixed coefficients, fixed
//! initial-simplex construction, no randomness. Given the same starting
//! point they retrace the same path, which the reproducibility contract of
//! the toolkit depends on.

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct OptimResult {
    /// Best point found.
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub value: f64,
    /// Iterations actually performed.
    pub iterations: usize,
    /// Whether the stopping tolerance was reached before `max_iters`.
    pub converged: bool,
    /// Best objective value after each iteration (non-increasing).
    pub trace: Vec<f64>,
}

/// Nelder-Mead simplex minimizer with the standard coefficients
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_iters: usize,
    /// Stop when the objective spread over the simplex falls below
    /// `tol * (|f_best| + tol)`.
    pub tol: f64,
    /// Relative perturbation used to build the initial simplex.
    pub init_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead { max_iters: 400, tol: 1e-10, init_step: 0.1 }
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> OptimResult {
        let dim = x0.len();
        assert!(dim > 0, "cannot optimize a zero-dimensional point");

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        simplex.push(x0.to_vec());
        for i in 0..dim {
            let mut p = x0.to_vec();
            let step = if p[i].abs() > 1e-8 { p[i].abs() * self.init_step } else { self.init_step };
            p[i] += step;
            simplex.push(p);
        }
        let mut scores: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

        let mut iterations = 0;
        let mut converged = false;
        let mut trace = Vec::new();
        while iterations < self.max_iters {
            iterations += 1;

            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| {
                scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal)
            });
            let best = order[0];
            let worst = order[dim];
            let second_worst = order[dim - 1];
            trace.push(scores[best]);

            let spread = scores[worst] - scores[best];
            if !spread.is_finite() || spread.abs() < self.tol * (scores[best].abs() + self.tol) {
                converged = spread.is_finite();
                break;
            }

            // Centroid of all vertices except the worst.
            let mut centroid = vec![0.0; dim];
            for &idx in order.iter().take(dim) {
                for d in 0..dim {
                    centroid[d] += simplex[idx][d];
                }
            }
            for c in centroid.iter_mut() {
                *c /= dim as f64;
            }

            let reflect: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + (centroid[d] - simplex[worst][d]))
                .collect();
            let f_reflect = f(&reflect);

            if f_reflect < scores[best] {
                // Try expanding further along the same direction.
                let expand: Vec<f64> = (0..dim)
                    .map(|d| centroid[d] + 2.0 * (reflect[d] - centroid[d]))
                    .collect();
                let f_expand = f(&expand);
                if f_expand < f_reflect {
                    simplex[worst] = expand;
                    scores[worst] = f_expand;
                } else {
                    simplex[worst] = reflect;
                    scores[worst] = f_reflect;
                }
                continue;
            }
            if f_reflect < scores[second_worst] {
                simplex[worst] = reflect;
                scores[worst] = f_reflect;
                continue;
            }

            // Contract toward the centroid.
            let contract: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + 0.5 * (simplex[worst][d] - centroid[d]))
                .collect();
            let f_contract = f(&contract);
            if f_contract < scores[worst] {
                simplex[worst] = contract;
                scores[worst] = f_contract;
                continue;
            }

            // Shrink everything toward the best vertex.
            let best_point = simplex[best].clone();
            for &idx in order.iter().skip(1) {
                for d in 0..dim {
                    simplex[idx][d] = best_point[d] + 0.5 * (simplex[idx][d] - best_point[d]);
                }
                scores[idx] = f(&simplex[idx]);
            }
        }

        let best = (0..=dim)
            .min_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        OptimResult {
            x: simplex[best].clone(),
            value: scores[best],
            iterations,
            converged,
            trace,
        }
    }
}

/// Steepest descent with Armijo backtracking. Only accepts decreasing steps,
/// so the value sequence is monotone non-increasing by construction.
#[derive(Debug, Clone)]
pub struct GradientDescent {
    pub max_iters: usize,
    /// Stop when the relative objective decrease falls below this.
    pub tol: f64,
    /// First trial step length of each line search.
    pub init_step: f64,
    /// Step-length shrink factor during backtracking.
    pub backtrack: f64,
    /// Give up on a line search when the step falls below this.
    pub min_step: f64,
}

impl Default for GradientDescent {
    fn default() -> Self {
        GradientDescent {
            max_iters: 200,
            tol: 1e-8,
            init_step: 1.0,
            backtrack: 0.5,
            min_step: 1e-14,
        }
    }
}

impl GradientDescent {
    pub fn minimize<F, G>(&self, mut f: F, mut grad: G, x0: &[f64]) -> OptimResult
    where
        F: FnMut(&[f64]) -> f64,
        G: FnMut(&[f64]) -> Vec<f64>,
    {
        const ARMIJO_C1: f64 = 1e-4;

        let mut x = x0.to_vec();
        let mut value = f(&x);
        let mut iterations = 0;
        let mut converged = false;
        let mut trace = vec![value];

        while iterations < self.max_iters {
            iterations += 1;
            let g = grad(&x);
            let g_norm_sq: f64 = g.iter().map(|v| v * v).sum();
            if g_norm_sq.sqrt() < 1e-14 {
                converged = true;
                break;
            }

            let mut step = self.init_step;
            let mut accepted = false;
            while step >= self.min_step {
                let trial: Vec<f64> =
                    x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
                let trial_value = f(&trial);
                if trial_value <= value - ARMIJO_C1 * step * g_norm_sq {
                    let decrease = value - trial_value;
                    x = trial;
                    value = trial_value;
                    trace.push(value);
                    accepted = true;
                    if decrease < self.tol * (value.abs() + self.tol) {
                        converged = true;
                    }
                    break;
                }
                step *= self.backtrack;
            }
            if !accepted {
                // Line search exhausted: numerically stationary.
                converged = iterations > 1;
                break;
            }
            if converged {
                break;
            }
        }

        OptimResult { x, value, iterations, converged, trace }
    }
}

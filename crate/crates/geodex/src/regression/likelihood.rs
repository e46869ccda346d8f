//! Gaussian log marginal likelihood of the RBF model, its gradient in
//! log-parameter space, and hyperparameter optimization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SpdFactor;
use crate::optim::NelderMead;

use super::{matrix_rows, KernelParams};

/// log p(z | X, theta) = -1/2 z^T A^{-1} z - 1/2 log|A| - n/2 log(2 pi),
/// with A = K_f + sigma^2 I.
pub fn log_marginal_likelihood(
    train_x: &DMatrix<f64>,
    train_z: &DVector<f64>,
    params: &KernelParams,
) -> Result<f64> {
    let (value, _) = lml_inner(train_x, train_z, params, false)?;
    Ok(value)
}

/// Log marginal likelihood and its gradient with respect to
/// (log sigma_f^2, log l, log sigma^2).
pub fn log_marginal_likelihood_with_grad(
    train_x: &DMatrix<f64>,
    train_z: &DVector<f64>,
    params: &KernelParams,
) -> Result<(f64, [f64; 3])> {
    let (value, grad) = lml_inner(train_x, train_z, params, true)?;
    Ok((value, grad.expect("gradient requested")))
}

fn lml_inner(
    train_x: &DMatrix<f64>,
    train_z: &DVector<f64>,
    params: &KernelParams,
    with_grad: bool,
) -> Result<(f64, Option<[f64; 3]>)> {
    let n = train_x.nrows();
    if n == 0 {
        return Err(Error::validation("marginal likelihood needs at least one observation"));
    }
    if train_z.len() != n {
        return Err(Error::validation(format!(
            "train_x has {n} rows but train_z has {}",
            train_z.len()
        )));
    }

    let rows = matrix_rows(train_x);
    let l2 = params.length_scale * params.length_scale;
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d2[(i, j)] = s;
            d2[(j, i)] = s;
        }
    }
    let k_f = d2.map(|s| params.signal_variance * (-s / (2.0 * l2)).exp());
    let mut a = k_f.clone();
    for i in 0..n {
        a[(i, i)] += params.noise_variance;
    }

    let factor = SpdFactor::new(&a)?;
    let alpha = factor.solve_vec(train_z);
    let value = -0.5 * train_z.dot(&alpha)
        - 0.5 * factor.log_det()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    if !with_grad {
        return Ok((value, None));
    }

    // dL/dtheta = 1/2 tr((alpha alpha^T - A^{-1}) dA/dtheta)
    let a_inv = factor.solve_mat(&DMatrix::identity(n, n));
    let trace_term = |d_a: &DMatrix<f64>| -> f64 {
        let mut quad = 0.0;
        let mut tr = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += alpha[i] * d_a[(i, j)] * alpha[j];
                tr += a_inv[(i, j)] * d_a[(j, i)];
            }
        }
        0.5 * (quad - tr)
    };

    // dA/dlog sigma_f^2 = K_f
    let g_sf = trace_term(&k_f);
    // dA/dlog l = K_f .* d^2 / l^2
    let dk_dlog_l = DMatrix::from_fn(n, n, |i, j| k_f[(i, j)] * d2[(i, j)] / l2);
    let g_l = trace_term(&dk_dlog_l);
    // dA/dlog sigma^2 = sigma^2 I
    let d_noise = DMatrix::from_diagonal(&DVector::from_element(n, params.noise_variance));
    let g_noise = trace_term(&d_noise);

    Ok((value, Some([g_sf, g_l, g_noise])))
}

/// Outcome of [`optimize_hyperparams`].
#[derive(Debug, Clone)]
pub struct HyperOptResult {
    pub params: KernelParams,
    pub log_marginal: f64,
    pub iterations: usize,
    /// False when the simplex ran out of iterations; the best-so-far
    /// parameters are still returned.
    pub converged: bool,
}

/// Relative floor applied to sigma_f^2 and sigma^2 during optimization,
/// scaled by the sample variance of z.
const PARAM_FLOOR_REL: f64 = 1e-9;
/// Absolute fallback scale when z is constant.
const PARAM_SCALE_MIN: f64 = 1e-12;

/// Maximize the log marginal likelihood over (log sigma_f^2, log l,
/// log sigma^2) with a Nelder-Mead search from `init`. Deterministic given
/// `init`; the returned parameters never score worse than `init`.
///
/// The data is centered by its training mean first, so the parameters are
/// those of the constant-mean process; a zero-mean GP explaining a constant
/// offset through a huge length-scale is not a useful optimum.
pub fn optimize_hyperparams(
    train_x: &DMatrix<f64>,
    train_z: &DVector<f64>,
    init: &KernelParams,
) -> Result<HyperOptResult> {
    let n = train_x.nrows();
    if n == 0 {
        return Err(Error::validation("hyperparameter optimization needs observations"));
    }
    let mean = train_z.sum() / n as f64;
    let train_z = &train_z.map(|z| z - mean);
    let var_z = if n > 1 {
        train_z.iter().map(|z| z * z).sum::<f64>() / (n as f64 - 1.0)
    } else {
        0.0
    };
    let scale = var_z.max(PARAM_SCALE_MIN);
    let floor = (PARAM_FLOOR_REL * scale).ln();
    let ceil = (1e9 * scale).max(1.0).ln();

    // Length-scale bounds follow the spread of the inputs.
    let rows = matrix_rows(train_x);
    let mut d_max = 0.0f64;
    for i in 0..n.min(64) {
        for j in (i + 1)..n.min(64) {
            let s: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d_max = d_max.max(s.sqrt());
        }
    }
    let l_lo = (1e-6 * d_max.max(1e-6)).ln();
    let l_hi = (1e3 * d_max.max(1e-6)).ln();

    let clamp = move |x: &[f64]| -> [f64; 3] {
        [x[0].clamp(floor, ceil), x[1].clamp(l_lo, l_hi), x[2].clamp(floor, ceil)]
    };

    let objective = |x: &[f64]| {
        let c = clamp(x);
        let params = KernelParams {
            signal_variance: c[0].exp(),
            length_scale: c[1].exp(),
            noise_variance: c[2].exp(),
        };
        match log_marginal_likelihood(train_x, train_z, &params) {
            Ok(v) => -v,
            Err(_) => f64::INFINITY,
        }
    };

    let x0 = [
        init.signal_variance.max(PARAM_SCALE_MIN).ln(),
        init.length_scale.ln(),
        init.noise_variance.max(PARAM_FLOOR_REL * scale).ln(),
    ];
    let init_value = objective(&x0);

    // Deterministic multi-start: the caller's init, a data-scaled start, and
    // a no-signal start. The likelihood surface has a degenerate ridge when
    // the data carries (almost) no structure; the third start reaches the
    // collapsed optimum the others miss.
    let starts = [
        x0,
        [scale.ln(), (d_max.max(1e-6) / 3.0).ln(), (0.1 * scale).ln()],
        [(PARAM_FLOOR_REL * scale * 10.0).ln(), x0[1], scale.ln()],
    ];

    let nm = NelderMead { max_iters: 400, tol: 1e-10, init_step: 0.4 };
    let mut r = nm.minimize(objective, &starts[0]);
    for s in &starts[1..] {
        let cand = nm.minimize(objective, s);
        if cand.value < r.value {
            r = cand;
        }
    }

    // Never return something worse than the starting point.
    let (x_best, value) =
        if r.value <= init_value { (clamp(&r.x), r.value) } else { (clamp(&x0), init_value) };
    let params = KernelParams {
        signal_variance: x_best[0].exp(),
        length_scale: x_best[1].exp(),
        noise_variance: x_best[2].exp(),
    };
    Ok(HyperOptResult {
        params,
        log_marginal: -value,
        iterations: r.iterations,
        converged: r.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    #[test]
    fn scalar_case_matches_closed_form() {
        let train_x = DMatrix::from_row_slice(1, 1, &[0.0]);
        let z = 1.7;
        let train_z = DVector::from_row_slice(&[z]);
        let params = KernelParams::new(0.8, 1.0, 0.2).unwrap();
        let v = log_marginal_likelihood(&train_x, &train_z, &params).unwrap();
        let var = 0.8 + 0.2;
        let expected =
            -0.5 * z * z / var - 0.5 * var.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(v, expected, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_term_scales_with_rescaled_data() {
        // Doubling both variances while scaling z by sqrt(2) leaves the
        // quadratic term unchanged; the determinant term changes by
        // n/2 * ln 2. Checked against direct evaluation.
        let train_x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let train_z = DVector::from_row_slice(&[0.3, -0.8, 0.5]);
        let p1 = KernelParams::new(1.0, 1.5, 0.1).unwrap();
        let p2 = KernelParams::new(2.0, 1.5, 0.2).unwrap();
        let z2 = train_z.map(|z| z * 2.0f64.sqrt());
        let v1 = log_marginal_likelihood(&train_x, &train_z, &p1).unwrap();
        let v2 = log_marginal_likelihood(&train_x, &z2, &p2).unwrap();
        let n = 3.0;
        assert_relative_eq!(v2, v1 - 0.5 * n * 2.0f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let n = 12;
        let train_x = DMatrix::from_fn(n, 2, |_, _| normal.sample(&mut rng) * 2.0);
        let train_z = DVector::from_fn(n, |_, _| normal.sample(&mut rng));
        let params = KernelParams::new(1.3, 1.7, 0.3).unwrap();

        let (_, grad) = log_marginal_likelihood_with_grad(&train_x, &train_z, &params).unwrap();

        let eps = 1e-6;
        let eval = |log_sf: f64, log_l: f64, log_s: f64| {
            let p = KernelParams {
                signal_variance: log_sf.exp(),
                length_scale: log_l.exp(),
                noise_variance: log_s.exp(),
            };
            log_marginal_likelihood(&train_x, &train_z, &p).unwrap()
        };
        let (a, b, c) = (
            params.signal_variance.ln(),
            params.length_scale.ln(),
            params.noise_variance.ln(),
        );
        let fd = [
            (eval(a + eps, b, c) - eval(a - eps, b, c)) / (2.0 * eps),
            (eval(a, b + eps, c) - eval(a, b - eps, c)) / (2.0 * eps),
            (eval(a, b, c + eps) - eval(a, b, c - eps)) / (2.0 * eps),
        ];
        for k in 0..3 {
            assert_relative_eq!(grad[k], fd[k], max_relative = 1e-5, epsilon = 1e-9);
        }
    }

    #[test]
    fn recovers_length_scale_from_generated_data() {
        // Draw from a known RBF GP on a 1-D grid and re-estimate l.
        use crate::linalg::SpdFactor;
        let n = 200;
        let truth = KernelParams::new(1.0, 2.0, 0.01).unwrap();
        let train_x = DMatrix::from_fn(n, 1, |i, _| i as f64 * 0.1);
        let rows = matrix_rows(&train_x);
        let mut gram = DMatrix::from_fn(n, n, |i, j| {
            super::super::rbf_kernel(&rows[i], &rows[j], &truth, i == j)
        });
        for i in 0..n {
            gram[(i, i)] += 1e-10;
        }
        let factor = SpdFactor::new(&gram).unwrap();
        let _ = factor; // factorization sanity only; draw via Cholesky below
        let chol = gram.cholesky().unwrap();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(17);
        let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let eps = DVector::from_fn(n, |_, _| normal.sample(&mut rng));
        let train_z = chol.l() * eps;

        let init = KernelParams::new(0.5, 0.5, 0.05).unwrap();
        let r = optimize_hyperparams(&train_x, &train_z, &init).unwrap();
        assert!(
            (r.params.length_scale - truth.length_scale).abs() / truth.length_scale < 0.25,
            "recovered l = {} vs truth {}",
            r.params.length_scale,
            truth.length_scale
        );
    }

    #[test]
    fn rerun_from_optimum_barely_improves() {
        let train_x = DMatrix::from_row_slice(6, 1, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let train_z = DVector::from_row_slice(&[0.1, 0.8, 0.2, -0.4, -0.9, -0.2]);
        let init = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let first = optimize_hyperparams(&train_x, &train_z, &init).unwrap();
        let second = optimize_hyperparams(&train_x, &train_z, &first.params).unwrap();
        assert!(
            second.log_marginal - first.log_marginal < 1e-6,
            "rerun improved by {}",
            second.log_marginal - first.log_marginal
        );
        assert!(second.log_marginal >= first.log_marginal - 1e-12);
    }

    #[test]
    fn constant_field_drives_signal_to_floor() {
        let train_x = DMatrix::from_row_slice(5, 1, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let train_z = DVector::from_element(5, 3.0);
        let init = KernelParams::new(1.0, 1.0, 0.5).unwrap();
        let r = optimize_hyperparams(&train_x, &train_z, &init).unwrap();
        // var(z) = 0, so the scale falls back to the absolute minimum and the
        // signal variance is pushed to (or below) the documented floor.
        assert!(
            r.params.signal_variance <= 1e-4,
            "signal variance {} should collapse for constant data",
            r.params.signal_variance
        );
    }

    #[test]
    fn optimization_never_scores_below_init() {
        let train_x = DMatrix::from_row_slice(4, 1, &[0.0, 0.7, 1.9, 3.1]);
        let train_z = DVector::from_row_slice(&[1.0, 0.3, -0.6, 0.9]);
        let init = KernelParams::new(2.5, 0.3, 1.0).unwrap();
        let before = log_marginal_likelihood(&train_x, &train_z, &init).unwrap();
        let r = optimize_hyperparams(&train_x, &train_z, &init).unwrap();
        assert!(r.log_marginal >= before - 1e-12);
    }
}

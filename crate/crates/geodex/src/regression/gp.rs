//! Function-space (Gaussian-process / kriging) prediction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SpdFactor;

use super::{matrix_rows, KernelParams, PredictiveDistribution};

/// RBF covariance between two points:
/// sigma_f^2 * exp(-d(a,b)^2 / (2 l^2)) + sigma^2 * delta,
/// where delta is 1 iff the two arguments refer to the same observation
/// (noise attaches to observation identity, not to coordinate equality, so
/// coincident but distinct observations stay noisy).
pub fn rbf_kernel(a: &[f64], b: &[f64], params: &KernelParams, same_index: bool) -> f64 {
    debug_assert_eq!(a.len(), b.len(), "kernel arguments must share dimension");
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let core = params.signal_variance
        * (-d2 / (2.0 * params.length_scale * params.length_scale)).exp();
    if same_index {
        core + params.noise_variance
    } else {
        core
    }
}

/// Mean function of the process: identically zero, or the constant training
/// mean (subtracted before conditioning and added back after).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanFunction {
    Zero,
    Constant,
}

impl MeanFunction {
    fn value(&self, train_z: &DVector<f64>) -> f64 {
        match self {
            MeanFunction::Zero => 0.0,
            MeanFunction::Constant => {
                if train_z.is_empty() {
                    0.0
                } else {
                    train_z.sum() / train_z.len() as f64
                }
            }
        }
    }
}

/// GP prediction with the RBF covariance of [`rbf_kernel`].
pub fn gp_predict(
    train_x: &DMatrix<f64>,
    train_z: &DVector<f64>,
    test_x: &DMatrix<f64>,
    params: &KernelParams,
    mean_fn: MeanFunction,
) -> Result<PredictiveDistribution> {
    let p = *params;
    gp_predict_with_kernel(
        move |a, b| rbf_kernel(a, b, &p, false),
        params.noise_variance,
        train_x,
        train_z,
        test_x,
        mean_fn,
    )
}

/// GP prediction for an arbitrary covariance function `kernel` (noise-free
/// part only; `noise_variance` is added on the training diagonal):
///
/// mean = m + k*^T (K + sigma^2 I)^{-1} (z - m)
/// cov  = K** - k*^T (K + sigma^2 I)^{-1} k*
///
/// With no training points the prior (mean function, K**) is returned.
pub fn gp_predict_with_kernel<K>(
    kernel: K,
    noise_variance: f64,
    train_x: &DMatrix<f64>,
    train_z: &DVector<f64>,
    test_x: &DMatrix<f64>,
    mean_fn: MeanFunction,
) -> Result<PredictiveDistribution>
where
    K: Fn(&[f64], &[f64]) -> f64,
{
    let n = train_x.nrows();
    let n_star = test_x.nrows();
    if train_z.len() != n {
        return Err(Error::validation(format!(
            "train_x has {n} rows but train_z has {}",
            train_z.len()
        )));
    }
    if n > 0 && test_x.ncols() != train_x.ncols() {
        return Err(Error::validation(format!(
            "test dimension {} differs from train dimension {}",
            test_x.ncols(),
            train_x.ncols()
        )));
    }
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(Error::validation(format!(
            "noise variance must be >= 0, got {noise_variance}"
        )));
    }

    let test_rows = matrix_rows(test_x);
    let k_star_star =
        DMatrix::from_fn(n_star, n_star, |i, j| kernel(&test_rows[i], &test_rows[j]));

    // Empty conditioning set: prior.
    if n == 0 {
        let m = mean_fn.value(train_z);
        let mean = DVector::from_element(n_star, m);
        return PredictiveDistribution::new(mean, k_star_star);
    }

    let train_rows = matrix_rows(train_x);
    let mut gram = DMatrix::from_fn(n, n, |i, j| kernel(&train_rows[i], &train_rows[j]));
    for i in 0..n {
        gram[(i, i)] += noise_variance;
    }

    let m = mean_fn.value(train_z);
    let centered = train_z.map(|z| z - m);

    let k_star = DMatrix::from_fn(n_star, n, |i, j| kernel(&test_rows[i], &train_rows[j]));

    let factor = SpdFactor::new(&gram)?;
    let alpha = factor.solve_vec(&centered);
    let mean = (&k_star * alpha).map(|v| v + m);

    let v = factor.solve_mat(&k_star.transpose());
    let cov = k_star_star - &k_star * v;

    PredictiveDistribution::new(mean, cov)
}

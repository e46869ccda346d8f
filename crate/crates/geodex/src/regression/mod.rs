//! Two equivalent views of regression over arbitrary covariates (geographic
//! coordinates included): weight-space Bayesian linear regression over
//! explicit basis functions, and function-space Gaussian-process regression
//! over a covariance function.
//!
//! The weight-space route places a Gaussian prior w ~ N(0, Sigma_p) on the
//! coefficients of f(x) = phi(x)^T w and predicts by averaging over the
//! posterior; the function-space route specifies the covariance k directly
//! and conditions the joint Gaussian. With k(x, x') = phi(x)^T Sigma_p
//! phi(x') the two produce identical predictive distributions —
//! [`equivalence_check`] asserts that numerically, and the RBF kernel of
//! [`gp_predict`] is the usual kriging special case.

mod basis;
pub mod equivalence;
mod gp;
mod likelihood;
mod mixed;
mod weight_space;

pub use basis::{apply_basis, BasisSpec};
pub use equivalence::{equivalence_check, EquivalenceReport};
pub use gp::{gp_predict, gp_predict_with_kernel, rbf_kernel, MeanFunction};
pub use likelihood::{
    log_marginal_likelihood, log_marginal_likelihood_with_grad, optimize_hyperparams,
    HyperOptResult,
};
pub use mixed::{mixed_fit_predict, MixedPrediction};
pub use weight_space::{weight_space_predict, WeightPosteriorInputs};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// RBF hyperparameters: how much (signal variance), how far (length-scale)
/// and how noisy (noise variance) function values co-vary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Signal variance sigma_f^2 (> 0).
    pub signal_variance: f64,
    /// Length-scale l (> 0), in the units of the input distance.
    pub length_scale: f64,
    /// Observation noise variance sigma^2 (>= 0).
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, length_scale: f64, noise_variance: f64) -> Result<Self> {
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(Error::validation(format!(
                "signal variance must be > 0, got {signal_variance}"
            )));
        }
        if !(length_scale > 0.0) || !length_scale.is_finite() {
            return Err(Error::validation(format!(
                "length-scale must be > 0, got {length_scale}"
            )));
        }
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::validation(format!(
                "noise variance must be >= 0, got {noise_variance}"
            )));
        }
        Ok(KernelParams { signal_variance, length_scale, noise_variance })
    }
}

/// Tolerance below which a slightly negative predictive variance is treated
/// as rounding and clipped to zero.
pub const VARIANCE_CLIP: f64 = 1e-10;

/// Gaussian predictive distribution over n* test points.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl PredictiveDistribution {
    /// Wrap a mean/covariance pair. The covariance is symmetrized; diagonal
    /// entries in [-1e-10, 0) are clipped to 0, anything more negative is a
    /// conditioning failure.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::validation(format!(
                "covariance is {}x{}, mean has length {n}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let mut cov = crate::linalg::symmetrize(&covariance);
        for i in 0..n {
            let d = cov[(i, i)];
            if d < -VARIANCE_CLIP {
                return Err(Error::Conditioning(format!(
                    "predictive variance {d:.3e} at index {i} below -{VARIANCE_CLIP:.0e}"
                )));
            }
            if d < 0.0 {
                cov[(i, i)] = 0.0;
            }
        }
        Ok(PredictiveDistribution { mean, covariance: cov })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.len() == 0
    }

    /// Per-point predictive standard deviation.
    pub fn sd(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.mean.len(),
            (0..self.mean.len()).map(|i| self.covariance[(i, i)].max(0.0).sqrt()),
        )
    }
}

/// Copy matrix rows into plain vectors (nalgebra stores column-major, so a
/// row view is not a contiguous slice).
pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

//! Weight-space Bayesian linear regression: Gaussian prior on basis
//! coefficients, Gaussian likelihood, closed-form predictive distribution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{min_symmetric_eigenvalue, SpdFactor};

use super::basis::{apply_basis, BasisSpec};
use super::PredictiveDistribution;

/// Prior covariance over the weights plus the observation noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPosteriorInputs {
    pub prior_covariance: DMatrix<f64>,
    pub noise_variance: f64,
}

impl WeightPosteriorInputs {
    /// Validates symmetry (to 1e-12 relative), positive definiteness, and a
    /// positive noise variance.
    pub fn new(prior_covariance: DMatrix<f64>, noise_variance: f64) -> Result<Self> {
        let m = prior_covariance.nrows();
        if m != prior_covariance.ncols() || m == 0 {
            return Err(Error::validation("prior covariance must be square and non-empty"));
        }
        let scale = prior_covariance.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        for i in 0..m {
            for j in (i + 1)..m {
                if (prior_covariance[(i, j)] - prior_covariance[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::validation(format!(
                        "prior covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        if min_symmetric_eigenvalue(&prior_covariance) <= 0.0 {
            return Err(Error::validation("prior covariance must be positive definite"));
        }
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(Error::validation(format!(
                "noise variance must be > 0, got {noise_variance}"
            )));
        }
        Ok(WeightPosteriorInputs { prior_covariance, noise_variance })
    }
}

/// Predictive distribution of the latent function at `test_x`:
///
/// mean = Phi* S Phi^T (Phi S Phi^T + sigma^2 I)^{-1} z
/// cov  = Phi* S Phi*^T - Phi* S Phi^T (Phi S Phi^T + sigma^2 I)^{-1} Phi S Phi*^T
///
/// with Phi the row-wise feature matrix and S the weight prior covariance.
/// Solved through a jittered Cholesky factorization, never an explicit
/// inverse.
pub fn weight_space_predict(
    train_x: &DMatrix<f64>,
    train_z: &DVector<f64>,
    test_x: &DMatrix<f64>,
    spec: &BasisSpec,
    priors: &WeightPosteriorInputs,
) -> Result<PredictiveDistribution> {
    let n = train_x.nrows();
    if n == 0 {
        return Err(Error::validation("weight-space prediction needs at least one observation"));
    }
    if train_z.len() != n {
        return Err(Error::validation(format!(
            "train_x has {n} rows but train_z has {}",
            train_z.len()
        )));
    }
    if test_x.ncols() != train_x.ncols() {
        return Err(Error::validation(format!(
            "test dimension {} differs from train dimension {}",
            test_x.ncols(),
            train_x.ncols()
        )));
    }
    let m = spec.feature_count(train_x.ncols());
    if priors.prior_covariance.nrows() != m {
        return Err(Error::validation(format!(
            "prior covariance is {}x{} but the basis has {m} features",
            priors.prior_covariance.nrows(),
            priors.prior_covariance.ncols()
        )));
    }

    let phi = apply_basis(train_x, spec); // n x m
    let phi_star = apply_basis(test_x, spec); // n* x m

    let s_phi_t = &priors.prior_covariance * phi.transpose(); // m x n
    let mut gram = &phi * &s_phi_t; // n x n, Phi S Phi^T
    for i in 0..n {
        gram[(i, i)] += priors.noise_variance;
    }

    let k_star = &phi_star * &s_phi_t; // n* x n
    let k_star_star = &phi_star * &priors.prior_covariance * phi_star.transpose(); // n* x n*

    let factor = SpdFactor::new(&gram)?;
    let alpha = factor.solve_vec(train_z);
    let mean = &k_star * alpha;

    let v = factor.solve_mat(&k_star.transpose()); // n x n*
    let cov = k_star_star - &k_star * v;

    PredictiveDistribution::new(mean, cov)
}

//! Mixed model: deterministic basis-function part over one covariate block
//! plus a GP over another, fit in two stages (ordinary least squares, then a
//! GP on the residuals).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::basis::{apply_basis, BasisSpec};
use super::gp::{gp_predict, MeanFunction};
use super::likelihood::optimize_hyperparams;
use super::{KernelParams, PredictiveDistribution};

/// Two-stage mixed fit with both components reported separately.
#[derive(Debug, Clone)]
pub struct MixedPrediction {
    /// OLS weights of the basis-function part.
    pub weights: DVector<f64>,
    /// Deterministic component phi(test_x1) * weights.
    pub linear_mean: DVector<f64>,
    /// GP prediction of the residual component over test_x2.
    pub gp: PredictiveDistribution,
    /// Hyperparameters used for the residual GP (optimized from the init).
    pub gp_params: KernelParams,
    /// Full prediction: linear_mean + gp mean, covariance from the GP part.
    pub combined: PredictiveDistribution,
}

/// Fit f(x1, x2) = phi(x1)^T w + g(x2) in two stages: OLS of z on phi(x1),
/// then an RBF GP (hyperparameters optimized from `params`) on the residuals
/// over x2. The linear part is treated as deterministic, so the predictive
/// covariance is the GP component's.
pub fn mixed_fit_predict(
    x1: &DMatrix<f64>,
    x2: &DMatrix<f64>,
    z: &DVector<f64>,
    test_x1: &DMatrix<f64>,
    test_x2: &DMatrix<f64>,
    spec: &BasisSpec,
    params: &KernelParams,
) -> Result<MixedPrediction> {
    let n = z.len();
    if x1.nrows() != n || x2.nrows() != n {
        return Err(Error::validation(format!(
            "row counts differ: x1 {}, x2 {}, z {n}",
            x1.nrows(),
            x2.nrows()
        )));
    }
    if test_x1.nrows() != test_x2.nrows() {
        return Err(Error::validation(format!(
            "test row counts differ: x1 {}, x2 {}",
            test_x1.nrows(),
            test_x2.nrows()
        )));
    }

    let phi = apply_basis(x1, spec);
    let weights = ols_solve(&phi, z)?;
    let residuals = z - &phi * &weights;

    let opt = optimize_hyperparams(x2, &residuals, params)?;
    let gp = gp_predict(x2, &residuals, test_x2, &opt.params, MeanFunction::Zero)?;

    let phi_star = apply_basis(test_x1, spec);
    let linear_mean = &phi_star * &weights;
    let combined_mean = &linear_mean + gp.mean();
    let combined = PredictiveDistribution::new(combined_mean, gp.covariance().clone())?;

    Ok(MixedPrediction { weights, linear_mean, gp, gp_params: opt.params, combined })
}

/// Least squares via SVD with an explicit rank check.
fn ols_solve(phi: &DMatrix<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = phi.clone().svd(true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-12 * s_max.max(1.0);
    if svd.singular_values.iter().any(|&s| s <= tol) {
        return Err(Error::Conditioning(format!(
            "basis matrix is rank-deficient (min singular value {:.3e})",
            svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    svd.solve(z, tol).map_err(|e| Error::Conditioning(e.to_string()))
}

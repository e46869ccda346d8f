//! Numerical check that the weight-space and function-space routes agree.
//!
//! The weight-space route evaluates the basis explicitly and solves in the
//! feature-Gram form; the function-space route never sees the basis — it is
//! handed the induced covariance k(x, x') = phi(x)^T Sigma_p phi(x') as an
//! opaque kernel. On well-conditioned instances the two predictive
//! distributions must agree to 1e-8.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

use super::basis::BasisSpec;
use super::gp::{gp_predict_with_kernel, MeanFunction};
use super::weight_space::{weight_space_predict, WeightPosteriorInputs};

/// Maximum absolute discrepancies between the two prediction routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    pub max_mean_abs_diff: f64,
    pub max_cov_abs_diff: f64,
}

impl EquivalenceReport {
    /// The larger of the mean and covariance discrepancies.
    pub fn max_abs_diff(&self) -> f64 {
        self.max_mean_abs_diff.max(self.max_cov_abs_diff)
    }
}

/// Run both routes on the same instance and report the largest absolute
/// difference over predictive means and covariances. Conditioning errors
/// from either path propagate.
pub fn equivalence_check(
    train_x: &DMatrix<f64>,
    train_z: &DVector<f64>,
    test_x: &DMatrix<f64>,
    spec: &BasisSpec,
    priors: &WeightPosteriorInputs,
) -> Result<EquivalenceReport> {
    let weight_view = weight_space_predict(train_x, train_z, test_x, spec, priors)?;

    let s = priors.prior_covariance.clone();
    let spec_copy = *spec;
    let kernel = move |a: &[f64], b: &[f64]| -> f64 {
        let fa = spec_copy.features(a);
        let fb = spec_copy.features(b);
        let mut acc = 0.0;
        for (i, &fai) in fa.iter().enumerate() {
            for (j, &fbj) in fb.iter().enumerate() {
                acc += fai * s[(i, j)] * fbj;
            }
        }
        acc
    };
    let function_view = gp_predict_with_kernel(
        kernel,
        priors.noise_variance,
        train_x,
        train_z,
        test_x,
        MeanFunction::Zero,
    )?;

    let mut max_mean = 0.0f64;
    for i in 0..weight_view.mean().len() {
        max_mean = max_mean.max((weight_view.mean()[i] - function_view.mean()[i]).abs());
    }
    let mut max_cov = 0.0f64;
    for i in 0..weight_view.covariance().nrows() {
        for j in 0..weight_view.covariance().ncols() {
            max_cov = max_cov
                .max((weight_view.covariance()[(i, j)] - function_view.covariance()[(i, j)]).abs());
        }
    }
    Ok(EquivalenceReport { max_mean_abs_diff: max_mean, max_cov_abs_diff: max_cov })
}

/// Deterministic random instances for the equivalence sweep, shared by the
/// library tests, the CLI `equiv` subcommand and the acceptance suite.
pub mod sweep {
    use rand::Rng;
    use rand_chacha::ChaCha20Rng;

    use super::*;

    /// One generated instance of the sweep.
    pub struct Instance {
        pub train_x: DMatrix<f64>,
        pub train_z: DVector<f64>,
        pub test_x: DMatrix<f64>,
        pub spec: BasisSpec,
        pub priors: WeightPosteriorInputs,
    }

    /// Draw a well-conditioned instance: n in [1, max_n], basis dimension
    /// <= max_m, Sigma_p = Q D Q^T with eigenvalues in [0.2, 1.2], noise in
    /// [0.05, 1.05].
    pub fn instance(rng: &mut ChaCha20Rng, max_n: usize, max_m: usize) -> Instance {
        let n = rng.random_range(1..=max_n);
        let n_test = rng.random_range(1..=max_n);
        // Basis: polynomial of degree d on 1-D input keeps m = d + 1 <= max_m.
        let degree = rng.random_range(0..max_m);
        let spec = BasisSpec::Polynomial { degree };
        let m = spec.feature_count(1);

        let train_x = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-2.0..2.0));
        let train_z = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let test_x = DMatrix::from_fn(n_test, 1, |_, _| rng.random_range(-2.0..2.0));

        // Random SPD prior: accumulate rank-1 terms, then lift the spectrum.
        let mut s: DMatrix<f64> = DMatrix::zeros(m, m);
        for _ in 0..m {
            let v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            s += &v * v.transpose();
        }
        let trace = s.trace().max(1.0);
        s /= trace;
        for i in 0..m {
            s[(i, i)] += 0.2;
        }
        let noise = rng.random_range(0.05..1.05);
        let priors = WeightPosteriorInputs::new(s, noise).expect("constructed SPD prior");
        Instance { train_x, train_z, test_x, spec, priors }
    }
}

//! Dense linear-algebra helpers: jittered Cholesky factorization and small
//! symmetric utilities used by the regression and expansion modules.
//!
//! Covariance matrices assembled from kernels are positive semi-definite in
//! exact arithmetic but frequently lose definiteness to rounding once the
//! noise term is small. The policy here is fixed and reproducible: attempt a
//! plain factorization, then retry with diagonal jitter at 1e-10, 1e-8 and
//! 1e-6 of the mean diagonal (three escalations), and report a conditioning
//! error if all attempts fail.

use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative jitter levels tried after the plain factorization fails.
pub const JITTER_LEVELS: [f64; 3] = [1e-10, 1e-8, 1e-6];

/// A successful symmetric positive-definite factorization plus the jitter
/// that was needed to obtain it (0.0 when the plain attempt succeeded).
pub struct SpdFactor {
    chol: nalgebra::Cholesky<f64, Dyn>,
    /// Absolute jitter added to every diagonal entry.
    pub jitter: f64,
}

impl SpdFactor {
    /// Factorize a symmetric matrix with the escalating-jitter policy.
    pub fn new(mat: &DMatrix<f64>) -> Result<Self> {
        let n = mat.nrows();
        if n != mat.ncols() {
            return Err(Error::validation(format!(
                "matrix must be square, got {}x{}",
                n,
                mat.ncols()
            )));
        }
        if let Some(chol) = mat.clone().cholesky() {
            return Ok(SpdFactor { chol, jitter: 0.0 });
        }
        // Jitter scale: mean diagonal, falling back to 1.0 for a zero matrix.
        let mean_diag = mat.diagonal().sum() / n as f64;
        let scale = if mean_diag.abs() > 0.0 { mean_diag.abs() } else { 1.0 };
        for rel in JITTER_LEVELS {
            let jitter = rel * scale;
            let mut jittered = mat.clone();
            for i in 0..n {
                jittered[(i, i)] += jitter;
            }
            if let Some(chol) = jittered.cholesky() {
                return Ok(SpdFactor { chol, jitter });
            }
        }
        Err(Error::Conditioning(format!(
            "{n}x{n} matrix not factorizable after jitter up to {:.1e}",
            JITTER_LEVELS[2] * scale
        )))
    }

    /// Solve `A x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Solve `A X = B` column-wise.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// log|A| from the Cholesky factor.
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

/// Smallest eigenvalue of a symmetric matrix (the input is symmetrized
/// first so roundoff asymmetry cannot leak into complex arithmetic).
pub fn min_symmetric_eigenvalue(mat: &DMatrix<f64>) -> f64 {
    let sym = (mat + mat.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Force exact symmetry: (A + A^T) / 2.
pub fn symmetrize(mat: &DMatrix<f64>) -> DMatrix<f64> {
    (mat + mat.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plain_factorization_needs_no_jitter() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let f = SpdFactor::new(&m).unwrap();
        assert_eq!(f.jitter, 0.0);
        let b = DVector::from_row_slice(&[5.0, 7.0]);
        let x = f.solve_vec(&b);
        assert_relative_eq!((m * &x - b).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn log_det_matches_direct_determinant() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = SpdFactor::new(&m).unwrap();
        assert_relative_eq!(f.log_det(), m.determinant().ln(), epsilon = 1e-12);
    }

    #[test]
    fn singular_matrix_gets_jitter() {
        // Rank-1 PSD matrix: plain Cholesky fails, jitter rescues it.
        let v = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        let m = &v * v.transpose();
        let f = SpdFactor::new(&m).unwrap();
        assert!(f.jitter > 0.0, "expected jitter on a rank-deficient matrix");
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -5.0]);
        match SpdFactor::new(&m) {
            Err(Error::Conditioning(_)) => {}
            Err(other) => panic!("expected conditioning error, got {other:?}"),
            Ok(_) => panic!("indefinite matrix must not factorize"),
        }
    }

    #[test]
    fn min_eigenvalue_of_known_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_relative_eq!(min_symmetric_eigenvalue(&m), 1.0, epsilon = 1e-12);
    }
}

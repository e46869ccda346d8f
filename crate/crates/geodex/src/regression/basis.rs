//! Deterministic basis functions mapping covariates into feature space.

use nalgebra::DMatrix;

/// Feature map specification.
///
/// `Polynomial { degree: p }` maps a d-dimensional input to an intercept
/// column followed by per-dimension powers x_j, x_j^2, ..., x_j^p (no cross
/// terms), giving m = 1 + d * p features. `IdentityWithIntercept` is the
/// degree-1 special case written out for clarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisSpec {
    IdentityWithIntercept,
    Polynomial { degree: usize },
}

impl BasisSpec {
    /// Number of feature columns produced for a given input dimension.
    pub fn feature_count(&self, input_dim: usize) -> usize {
        match self {
            BasisSpec::IdentityWithIntercept => 1 + input_dim,
            BasisSpec::Polynomial { degree } => 1 + input_dim * degree,
        }
    }

    /// Feature vector for a single point.
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        match self {
            BasisSpec::IdentityWithIntercept => {
                let mut out = Vec::with_capacity(1 + x.len());
                out.push(1.0);
                out.extend_from_slice(x);
                out
            }
            BasisSpec::Polynomial { degree } => {
                let mut out = Vec::with_capacity(1 + x.len() * degree);
                out.push(1.0);
                for &xi in x {
                    let mut p = 1.0;
                    for _ in 0..*degree {
                        p *= xi;
                        out.push(p);
                    }
                }
                out
            }
        }
    }
}

/// Row-wise feature matrix: row i is phi(x_i), first column all ones.
pub fn apply_basis(x: &DMatrix<f64>, spec: &BasisSpec) -> DMatrix<f64> {
    let n = x.nrows();
    let m = spec.feature_count(x.ncols());
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        let row: Vec<f64> = x.row(i).iter().cloned().collect();
        let feats = spec.features(&row);
        for (j, f) in feats.into_iter().enumerate() {
            out[(i, j)] = f;
        }
    }
    out
}

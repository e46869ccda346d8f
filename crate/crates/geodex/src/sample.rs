//! Point observations in geographic + covariate space, and the distance
//! machinery every other module builds on.
//!
//! A [`SampleSet`] holds n observations: planar coordinates (2 or 3
//! geographic columns, possibly extended by learned latent columns), an
//! optional block of non-spatial covariates, and the observed values.
//! Everything is immutable after construction and validated up front, so
//! downstream code can assume finite, shape-consistent data.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// n point observations: coordinates, optional covariates, observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    coords: DMatrix<f64>,
    covariates: DMatrix<f64>,
    values: DVector<f64>,
}

impl SampleSet {
    /// Build a geographic sample set. Coordinates must have 2 or 3 columns;
    /// all blocks must be finite and share the row count.
    pub fn new(
        coords: DMatrix<f64>,
        covariates: DMatrix<f64>,
        values: DVector<f64>,
    ) -> Result<Self> {
        let d = coords.ncols();
        if d != 2 && d != 3 {
            return Err(Error::validation(format!(
                "geographic coordinates must have 2 or 3 columns, got {d}"
            )));
        }
        Self::with_any_coord_dim(coords, covariates, values)
    }

    /// Like [`SampleSet::new`] but without covariates.
    pub fn from_coords_values(coords: DMatrix<f64>, values: DVector<f64>) -> Result<Self> {
        let n = coords.nrows();
        Self::new(coords, DMatrix::zeros(n, 0), values)
    }

    /// Constructor used for dimension-expanded sets, whose coordinate block
    /// may have more than 3 columns. All other invariants still hold.
    pub(crate) fn with_any_coord_dim(
        coords: DMatrix<f64>,
        covariates: DMatrix<f64>,
        values: DVector<f64>,
    ) -> Result<Self> {
        let n = coords.nrows();
        if n == 0 {
            return Err(Error::validation("sample set needs at least one row"));
        }
        if covariates.nrows() != n || values.nrows() != n {
            return Err(Error::validation(format!(
                "row counts differ: coords {n}, covariates {}, values {}",
                covariates.nrows(),
                values.nrows()
            )));
        }
        if coords.iter().any(|v| !v.is_finite())
            || covariates.iter().any(|v| !v.is_finite())
            || values.iter().any(|v| !v.is_finite())
        {
            return Err(Error::validation("sample set contains non-finite entries"));
        }
        Ok(SampleSet { coords, covariates, values })
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn coord_dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Pairwise Euclidean distances between the coordinate rows.
    pub fn distances(&self) -> DistanceMatrix {
        pairwise_distances(&self.coords).expect("coords validated at construction")
    }

    /// The subset of rows given by `indices` (order preserved, duplicates allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Result<SampleSet> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::validation(format!(
                "row index {bad} out of range for {} samples",
                self.len()
            )));
        }
        if indices.is_empty() {
            return Err(Error::validation("cannot select an empty subset"));
        }
        let coords = self.coords.select_rows(indices.iter());
        let covariates = self.covariates.select_rows(indices.iter());
        let values = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.values[i]));
        Self::with_any_coord_dim(coords, covariates, values)
    }
}

/// Distance metric tag. Only Euclidean is supported; coordinates are assumed
/// pre-projected to a planar CRS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
}

/// Symmetric n x n matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: DMatrix<f64>,
    pub metric: Metric,
}

impl DistanceMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }
}

/// Euclidean distances between all row pairs of `points`.
///
/// Symmetry and the zero diagonal are exact: each pair is computed once and
/// mirrored.
pub fn pairwise_distances(points: &DMatrix<f64>) -> Result<DistanceMatrix> {
    if points.nrows() == 0 {
        return Err(Error::validation("need at least one point"));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("points contain non-finite entries"));
    }
    let n = points.nrows();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = row_distance(points, i, j);
            entries[(i, j)] = d;
            entries[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix { entries, metric: Metric::Euclidean })
}

#[inline]
pub(crate) fn row_distance(points: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..points.ncols() {
        let d = points[(i, c)] - points[(j, c)];
        acc += d * d;
    }
    acc.sqrt()
}

/// Column-concatenate `extra` onto the coordinate block of `base`. Values and
/// covariates are unchanged. Appending columns can only grow Euclidean
/// distances, never shrink them.
pub fn augment_dimensions(base: &SampleSet, extra: &DMatrix<f64>) -> Result<SampleSet> {
    if extra.nrows() != base.len() {
        return Err(Error::validation(format!(
            "extra coordinates have {} rows, sample set has {}",
            extra.nrows(),
            base.len()
        )));
    }
    if extra.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("extra coordinates contain non-finite entries"));
    }
    let n = base.len();
    let d0 = base.coord_dim();
    let p = extra.ncols();
    let mut coords = DMatrix::zeros(n, d0 + p);
    coords.view_mut((0, 0), (n, d0)).copy_from(base.coords());
    coords.view_mut((0, d0), (n, p)).copy_from(extra);
    SampleSet::with_any_coord_dim(coords, base.covariates().clone(), base.values().clone())
}

/// Per-column mean/scale recorded by [`standardize_columns`], sufficient to
/// invert the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl ColumnStats {
    /// Map standardized values back to the original units.
    pub fn destandardize(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                out[(r, c)] = m[(r, c)] * self.scales[c] + self.means[c];
            }
        }
        out
    }
}

/// Shift and scale each column to mean 0, sample standard deviation 1.
/// Constant columns map to all zeros with recorded scale 1 so the transform
/// stays invertible.
pub fn standardize_columns(m: &DMatrix<f64>) -> (DMatrix<f64>, ColumnStats) {
    let n = m.nrows();
    let mut out = m.clone();
    let mut means = Vec::with_capacity(m.ncols());
    let mut scales = Vec::with_capacity(m.ncols());
    for c in 0..m.ncols() {
        let col = m.column(c);
        let mean = col.sum() / n as f64;
        let var = if n > 1 {
            col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        let scale = if sd > 0.0 { sd } else { 1.0 };
        for r in 0..n {
            out[(r, c)] = (m[(r, c)] - mean) / scale;
        }
        means.push(mean);
        scales.push(scale);
    }
    (out, ColumnStats { means, scales })
}

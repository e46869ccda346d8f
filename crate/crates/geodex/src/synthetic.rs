//! Seeded synthetic field generators: stationary GP draws on a regular grid
//! and non-stationary two-regime composites (a low/high level split with a
//! stationary field on top, standing in for contrasting land-cover scenes),
//! plus deterministic subsampling.
//!
//! Every generator is a pure function of its spec — the seed included — so
//! repeated calls are bit-identical. Randomness streams are derived from one
//! global seed by fixed offsets (field draw at +0, subsampling at +1).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::regression::{rbf_kernel, KernelParams};
use crate::sample::SampleSet;

/// Stream offset for grid draws relative to the global seed.
pub const STREAM_FIELD: u64 = 0;
/// Stream offset for subsampling relative to the global seed.
pub const STREAM_SUBSAMPLE: u64 = 1;

/// Diagonal jitter applied to every sampling Gram matrix.
const SAMPLING_JITTER: f64 = 1e-10;

/// Partition geometry for the two-regime generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeGeometry {
    /// Points with coordinate `axis` at or above `threshold` form regime B.
    HalfPlane { axis: usize, threshold: f64 },
    /// Points inside the disc form regime B (the embedded "water body").
    Disc { center: (f64, f64), radius: f64 },
}

impl RegimeGeometry {
    /// True iff the point belongs to regime B (the offset regime).
    pub fn in_regime_b(&self, x: f64, y: f64) -> bool {
        match *self {
            RegimeGeometry::HalfPlane { axis, threshold } => {
                let c = if axis == 0 { x } else { y };
                c >= threshold
            }
            RegimeGeometry::Disc { center, radius } => {
                let dx = x - center.0;
                let dy = y - center.1;
                dx * dx + dy * dy <= radius * radius
            }
        }
    }
}

/// Field generator tag plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    StationaryGp { params: KernelParams },
    TwoRegime { geometry: RegimeGeometry, gap: f64, within: KernelParams },
}

/// A regular grid field specification, fully deterministic per seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub generator: Generator,
    pub seed: u64,
}

impl FieldSpec {
    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::validation(format!(
                "grid must be at least 2x2, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::validation(format!("spacing must be > 0, got {}", self.spacing)));
        }
        if let Generator::TwoRegime { gap, .. } = self.generator {
            if !(gap >= 0.0) || !gap.is_finite() {
                return Err(Error::validation(format!("level gap must be >= 0, got {gap}")));
            }
        }
        Ok(())
    }

    /// Grid coordinates in row-major order (x fastest).
    pub fn grid_coords(&self) -> DMatrix<f64> {
        let n = self.nx * self.ny;
        let mut coords = DMatrix::zeros(n, 2);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let r = iy * self.nx + ix;
                coords[(r, 0)] = ix as f64 * self.spacing;
                coords[(r, 1)] = iy as f64 * self.spacing;
            }
        }
        coords
    }
}

/// One draw z = L eps of the stationary RBF process over the full grid,
/// where L L^T = K_rbf + sigma^2 I (+ jitter) and eps is standard normal
/// from the spec seed.
pub fn sample_stationary_field(spec: &FieldSpec) -> Result<SampleSet> {
    spec.validate()?;
    let params = match spec.generator {
        Generator::StationaryGp { params } => params,
        Generator::TwoRegime { .. } => {
            return Err(Error::validation(
                "sample_stationary_field requires the stationary-gp generator",
            ))
        }
    };
    let coords = spec.grid_coords();
    let z = draw_gp(&coords, &params, spec.seed.wrapping_add(STREAM_FIELD))?;
    SampleSet::new(coords, DMatrix::zeros(z.len(), 0), z)
}

/// Two-regime composite: regime levels 0 and `gap` from the partition
/// geometry, plus one stationary draw with the within-regime parameters.
/// Returns the field and the regime-B labels for verification.
pub fn sample_two_regime_field(spec: &FieldSpec) -> Result<(SampleSet, Vec<bool>)> {
    spec.validate()?;
    let (geometry, gap, within) = match spec.generator {
        Generator::TwoRegime { geometry, gap, within } => (geometry, gap, within),
        Generator::StationaryGp { .. } => {
            return Err(Error::validation(
                "sample_two_regime_field requires the two-regime generator",
            ))
        }
    };
    let coords = spec.grid_coords();
    let n = coords.nrows();
    let labels: Vec<bool> =
        (0..n).map(|r| geometry.in_regime_b(coords[(r, 0)], coords[(r, 1)])).collect();
    let n_b = labels.iter().filter(|&&b| b).count();
    if n_b == 0 || n_b == n {
        return Err(Error::validation(format!(
            "degenerate regime geometry: {n_b} of {n} points in regime B"
        )));
    }
    let base = draw_gp(&coords, &within, spec.seed.wrapping_add(STREAM_FIELD))?;
    let z = DVector::from_fn(n, |i, _| base[i] + if labels[i] { gap } else { 0.0 });
    let field = SampleSet::new(coords, DMatrix::zeros(n, 0), z)?;
    Ok((field, labels))
}

fn draw_gp(coords: &DMatrix<f64>, params: &KernelParams, seed: u64) -> Result<DVector<f64>> {
    let n = coords.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| coords.row(i).iter().cloned().collect()).collect();
    let mut gram = DMatrix::from_fn(n, n, |i, j| rbf_kernel(&rows[i], &rows[j], params, i == j));
    for i in 0..n {
        gram[(i, i)] += SAMPLING_JITTER;
    }
    let mean_diag = gram.diagonal().sum() / n as f64;
    let mut chol = gram.clone().cholesky();
    // Same escalation ladder as SpdFactor, relative to the mean diagonal.
    for rel in crate::linalg::JITTER_LEVELS {
        if chol.is_some() {
            break;
        }
        let mut jittered = gram.clone();
        for i in 0..n {
            jittered[(i, i)] += rel * mean_diag;
        }
        chol = jittered.cholesky();
    }
    let chol = chol.ok_or_else(|| {
        Error::Conditioning(format!("sampling Gram over {n} grid points not factorizable"))
    })?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let eps = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    Ok(chol.l() * eps)
}

/// Seeded uniform subsample without replacement (partial Fisher-Yates).
pub fn random_subsample_indices(total: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::validation("subsample size must be >= 1"));
    }
    if n > total {
        return Err(Error::validation(format!(
            "cannot draw {n} samples from a field of {total}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(STREAM_SUBSAMPLE));
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..n {
        let j = rng.random_range(i..total);
        idx.swap(i, j);
    }
    idx.truncate(n);
    Ok(idx)
}

/// Seeded uniform subsample of a field, deterministic per seed.
pub fn random_subsample(field: &SampleSet, n: usize, seed: u64) -> Result<SampleSet> {
    let idx = random_subsample_indices(field.len(), n, seed)?;
    field.select_rows(&idx)
}

/// The canonical two-regime demonstration fixture: a 20x20 unit-spacing grid
/// split by the half-plane x >= 10 (one half "built", one half "water"),
/// within-regime RBF parameters (1.0, 3.0, 1e-4), level gap 10x the
/// within-regime standard deviation, and a 20-point subsample. Everything
/// derives from one seed.
#[derive(Debug, Clone)]
pub struct TwoRegimeFixture {
    pub spec: FieldSpec,
    pub field: SampleSet,
    pub labels: Vec<bool>,
    pub sample: SampleSet,
    pub sample_labels: Vec<bool>,
}

/// Within-regime kernel of the fixture.
pub fn fixture_within_params() -> KernelParams {
    KernelParams { signal_variance: 1.0, length_scale: 3.0, noise_variance: 1e-4 }
}

/// Level gap of the fixture: 10x the within-regime sd.
pub fn fixture_gap() -> f64 {
    let w = fixture_within_params();
    10.0 * (w.signal_variance + w.noise_variance).sqrt()
}

/// Build the fixture for a given global seed (the canonical one is 7).
pub fn two_regime_fixture(seed: u64) -> Result<TwoRegimeFixture> {
    let spec = FieldSpec {
        nx: 20,
        ny: 20,
        spacing: 1.0,
        generator: Generator::TwoRegime {
            geometry: RegimeGeometry::HalfPlane { axis: 0, threshold: 10.0 },
            gap: fixture_gap(),
            within: fixture_within_params(),
        },
        seed,
    };
    let (field, labels) = sample_two_regime_field(&spec)?;
    let idx = random_subsample_indices(field.len(), 20, seed)?;
    let sample = field.select_rows(&idx)?;
    let sample_labels = idx.iter().map(|&i| labels[i]).collect();
    Ok(TwoRegimeFixture { spec, field, labels, sample, sample_labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variogram::{bin_cloud, empirical_semivariance};

    fn stationary_spec(nx: usize, ny: usize, params: KernelParams, seed: u64) -> FieldSpec {
        FieldSpec { nx, ny, spacing: 1.0, generator: Generator::StationaryGp { params }, seed }
    }

    #[test]
    fn no_signal_limit_is_pure_noise() {
        let params = KernelParams::new(1e-12, 1.0, 0.04).unwrap();
        let spec = stationary_spec(30, 30, params, 5);
        let field = sample_stationary_field(&spec).unwrap();
        let n = field.len() as f64;
        let mean = field.values().sum() / n;
        let var = field.values().iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (n - 1.0);
        assert!(
            (var - 0.04).abs() < 0.2 * 0.04,
            "sample variance {var} should be within 20% of 0.04"
        );
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let params = KernelParams::new(1.0, 2.0, 0.01).unwrap();
        let spec = stationary_spec(10, 10, params, 42);
        let a = sample_stationary_field(&spec).unwrap();
        let b = sample_stationary_field(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_covariance_matches_kernel_monte_carlo() {
        // 1000 draws on a 5x5 grid; compare Cov(z_0, z_1) against the kernel.
        let params = KernelParams::new(1.0, 2.0, 0.05).unwrap();
        let n_draws = 1000;
        let (i, j) = (0usize, 1usize); // horizontally adjacent points
        let mut zi = Vec::with_capacity(n_draws);
        let mut zj = Vec::with_capacity(n_draws);
        for seed in 0..n_draws {
            let spec = stationary_spec(5, 5, params, 10_000 + seed as u64);
            let f = sample_stationary_field(&spec).unwrap();
            zi.push(f.values()[i]);
            zj.push(f.values()[j]);
        }
        let mean_i = zi.iter().sum::<f64>() / n_draws as f64;
        let mean_j = zj.iter().sum::<f64>() / n_draws as f64;
        let cov = zi
            .iter()
            .zip(&zj)
            .map(|(a, b)| (a - mean_i) * (b - mean_j))
            .sum::<f64>()
            / (n_draws as f64 - 1.0);
        let expected = rbf_kernel(&[0.0, 0.0], &[1.0, 0.0], &params, false);
        // SE of a normal covariance estimate: sqrt((K_ii K_jj + K_ij^2)/N).
        let k_ii = params.signal_variance + params.noise_variance + 1e-10;
        let se = ((k_ii * k_ii + expected * expected) / n_draws as f64).sqrt();
        assert!(
            (cov - expected).abs() < 3.0 * se,
            "cov {cov} vs kernel {expected}, 3se = {}",
            3.0 * se
        );
    }

    #[test]
    fn zero_gap_collapses_to_stationary() {
        let within = KernelParams::new(1.0, 2.0, 0.01).unwrap();
        let spec = FieldSpec {
            nx: 12,
            ny: 12,
            spacing: 1.0,
            generator: Generator::TwoRegime {
                geometry: RegimeGeometry::HalfPlane { axis: 0, threshold: 6.0 },
                gap: 0.0,
                within,
            },
            seed: 9,
        };
        let (field, labels) = sample_two_regime_field(&spec).unwrap();
        let stationary = sample_stationary_field(&stationary_spec(12, 12, within, 9)).unwrap();
        assert_eq!(field.values(), stationary.values());
        assert!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
    }

    #[test]
    fn gap_shows_in_regime_means() {
        let fixture = two_regime_fixture(7).unwrap();
        let gap = fixture_gap();
        let (mut sum_a, mut n_a, mut sum_b, mut n_b) = (0.0, 0usize, 0.0, 0usize);
        for (i, &b) in fixture.labels.iter().enumerate() {
            if b {
                sum_b += fixture.field.values()[i];
                n_b += 1;
            } else {
                sum_a += fixture.field.values()[i];
                n_a += 1;
            }
        }
        let diff = sum_b / n_b as f64 - sum_a / n_a as f64;
        let within_sd = fixture_within_params().signal_variance.sqrt();
        assert!(
            (diff - gap).abs() < within_sd,
            "between-regime mean difference {diff} should be within one sd of {gap}"
        );
    }

    #[test]
    fn subsample_cloud_is_bimodal_at_large_lag() {
        // Large-lag bins mix regimes, small-lag bins mostly do not.
        let fixture = two_regime_fixture(7).unwrap();
        let cloud = empirical_semivariance(&fixture.sample).unwrap();
        let h_max = cloud.pairs.iter().map(|p| p.h).fold(0.0, f64::max);
        let binned = bin_cloud(&cloud, 6, h_max).unwrap();
        let first = binned.bins.first().unwrap();
        let last_mean =
            binned.bins.iter().rev().take(2).map(|b| b.gamma_mean).fold(0.0, f64::max);
        assert!(
            last_mean >= 4.0 * first.gamma_mean.max(1e-9),
            "large-lag mean {last_mean} should dwarf small-lag mean {}",
            first.gamma_mean
        );
    }

    #[test]
    fn fixture_subsample_hits_both_regimes() {
        let fixture = two_regime_fixture(7).unwrap();
        let n_b = fixture.sample_labels.iter().filter(|&&b| b).count();
        assert!(
            (3..=17).contains(&n_b),
            "20-point subsample should straddle both regimes, got {n_b} in B"
        );
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        let within = KernelParams::new(1.0, 2.0, 0.01).unwrap();
        let spec = FieldSpec {
            nx: 6,
            ny: 6,
            spacing: 1.0,
            generator: Generator::TwoRegime {
                geometry: RegimeGeometry::Disc { center: (100.0, 100.0), radius: 1.0 },
                gap: 5.0,
                within,
            },
            seed: 1,
        };
        assert!(matches!(sample_two_regime_field(&spec), Err(Error::Validation(_))));
    }

    #[test]
    fn full_size_subsample_is_a_permutation() {
        let params = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let field = sample_stationary_field(&stationary_spec(4, 4, params, 3)).unwrap();
        let sub = random_subsample(&field, 16, 11).unwrap();
        let mut orig: Vec<f64> = field.values().iter().cloned().collect();
        let mut perm: Vec<f64> = sub.values().iter().cloned().collect();
        orig.sort_by(f64::total_cmp);
        perm.sort_by(f64::total_cmp);
        assert_eq!(orig, perm);
    }

    #[test]
    fn same_seed_same_subsample() {
        let params = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let field = sample_stationary_field(&stationary_spec(6, 6, params, 3)).unwrap();
        let a = random_subsample(&field, 10, 77).unwrap();
        let b = random_subsample(&field, 10, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subsample_too_large_is_rejected() {
        let params = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let field = sample_stationary_field(&stationary_spec(3, 3, params, 3)).unwrap();
        assert!(matches!(random_subsample(&field, 10, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn subsample_frequencies_are_uniform() {
        // 1e5 draws of 1-of-4: each index frequency within 3 SE of 0.25.
        let total = 4;
        let trials = 100_000;
        let mut counts = [0usize; 4];
        for seed in 0..trials {
            let idx = random_subsample_indices(total, 1, seed as u64).unwrap();
            counts[idx[0]] += 1;
        }
        let p = 0.25;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for (k, &c) in counts.iter().enumerate() {
            let freq = c as f64 / trials as f64;
            assert!(
                (freq - p).abs() < 3.0 * se,
                "index {k} frequency {freq} outside 3 SE of 0.25"
            );
        }
    }
}

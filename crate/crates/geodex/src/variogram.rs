//! Empirical semivariance, parametric variogram models, least-squares model
//! fitting, covariance duality, and the Moran's I diagnostic.
//!
//! The empirical side works on dispersion pairs v_ij = 0.5 * (z_i - z_j)^2
//! plotted against separation distance h. The parametric side provides two
//! families, both using the "practical range" convention (the model reaches
//! ~95% of its sill at h = range):
//!
//! * Gaussian:    gamma(h) = nugget + sill * (1 - exp(-3 h^2 / a^2))
//! * exponential: gamma(h) = nugget + sill * (1 - exp(-3 h   / a))
//!
//! The dual covariance is c(h) = sill + nugget - gamma(h), which decays to 0
//! at large h and equals the sill at h = 0.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::sample::SampleSet;

/// One dispersion pair: distance, semivariance, and the sample indices
/// (i < j) it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPair {
    pub h: f64,
    pub v: f64,
    pub i: usize,
    pub j: usize,
}

/// All n(n-1)/2 dispersion pairs of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct VariogramCloud {
    pub pairs: Vec<CloudPair>,
}

/// One distance bin: center, mean semivariance, pair count (>= 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramBin {
    pub h_center: f64,
    pub gamma_mean: f64,
    pub count: usize,
}

/// Distance-binned summary of a cloud. Bins are sorted by center and empty
/// bins are omitted. `h_max` records the cutoff the binning used.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedVariogram {
    pub bins: Vec<VariogramBin>,
    pub h_max: f64,
}

impl BinnedVariogram {
    /// Build from pre-computed bins, validating the ordering/count invariants.
    pub fn from_bins(bins: Vec<VariogramBin>, h_max: f64) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::validation("binned variogram needs at least one bin"));
        }
        if !(h_max > 0.0) {
            return Err(Error::validation("h_max must be positive"));
        }
        for w in bins.windows(2) {
            if w[1].h_center <= w[0].h_center {
                return Err(Error::validation("bin centers must be strictly increasing"));
            }
        }
        if bins.iter().any(|b| b.count == 0) {
            return Err(Error::validation("empty bins must be omitted"));
        }
        if bins.iter().any(|b| !b.h_center.is_finite() || !b.gamma_mean.is_finite()) {
            return Err(Error::validation("bins contain non-finite entries"));
        }
        Ok(BinnedVariogram { bins, h_max })
    }
}

/// Parametric variogram family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariogramFamily {
    Gaussian,
    Exponential,
}

impl VariogramFamily {
    pub fn name(&self) -> &'static str {
        match self {
            VariogramFamily::Gaussian => "gaussian",
            VariogramFamily::Exponential => "exponential",
        }
    }
}

impl std::str::FromStr for VariogramFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(VariogramFamily::Gaussian),
            "exponential" => Ok(VariogramFamily::Exponential),
            other => Err(Error::validation(format!(
                "unknown variogram family '{other}' (expected gaussian|exponential)"
            ))),
        }
    }
}

/// Parametric semivariance function with sill, range and nugget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramModel {
    pub family: VariogramFamily,
    /// Structured variance reached at large distance (gamma_0^2).
    pub sill: f64,
    /// Practical range a: distance at which ~95% of the sill is reached.
    pub range: f64,
    /// Micro-scale/measurement variance added at any h >= 0.
    pub nugget: f64,
}

impl VariogramModel {
    pub fn new(family: VariogramFamily, sill: f64, range: f64, nugget: f64) -> Result<Self> {
        if !(sill > 0.0) || !sill.is_finite() {
            return Err(Error::validation(format!("sill must be > 0, got {sill}")));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::validation(format!("range must be > 0, got {range}")));
        }
        if !(nugget >= 0.0) || !nugget.is_finite() {
            return Err(Error::validation(format!("nugget must be >= 0, got {nugget}")));
        }
        Ok(VariogramModel { family, sill, range, nugget })
    }

    /// Semivariance at lag h. Monotone non-decreasing; equals the nugget at
    /// h = 0 and approaches nugget + sill as h grows.
    pub fn semivariance(&self, h: f64) -> f64 {
        debug_assert!(h >= 0.0, "negative lag {h}");
        match self.family {
            VariogramFamily::Gaussian => {
                self.nugget + self.sill * (1.0 - (-3.0 * h * h / (self.range * self.range)).exp())
            }
            VariogramFamily::Exponential => {
                self.nugget + self.sill * (1.0 - (-3.0 * h / self.range).exp())
            }
        }
    }

    /// Dual covariance c(h) = sill + nugget - gamma(h); equals the sill at
    /// h = 0 and decays to 0 at large h.
    pub fn covariance(&self, h: f64) -> f64 {
        self.sill + self.nugget - self.semivariance(h)
    }
}

/// Semivariance of the Gaussian model at lag h (family tag ignored).
pub fn gaussian_variogram(h: f64, model: &VariogramModel) -> f64 {
    VariogramModel { family: VariogramFamily::Gaussian, ..*model }.semivariance(h)
}

/// Semivariance of the exponential model at lag h (family tag ignored).
pub fn exponential_variogram(h: f64, model: &VariogramModel) -> f64 {
    VariogramModel { family: VariogramFamily::Exponential, ..*model }.semivariance(h)
}

/// Covariance dual of `model` at lag h.
pub fn model_to_covariance(model: &VariogramModel, h: f64) -> f64 {
    model.covariance(h)
}

/// Dispersion pairs (h, 0.5 * (z_i - z_j)^2) over all unordered sample pairs.
pub fn empirical_semivariance(samples: &SampleSet) -> Result<VariogramCloud> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::validation(format!("need at least 2 samples, got {n}")));
    }
    let coords = samples.coords();
    let z = samples.values();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let h = crate::sample::row_distance(coords, i, j);
            let dz = z[i] - z[j];
            pairs.push(CloudPair { h, v: 0.5 * dz * dz, i, j });
        }
    }
    Ok(VariogramCloud { pairs })
}

/// Average the cloud into `n_bins` equal-width bins on [0, h_max].
///
/// Bin centers are bin midpoints. Pairs with h > h_max are excluded; a pair
/// at exactly h_max lands in the last bin. Empty bins are omitted.
pub fn bin_cloud(cloud: &VariogramCloud, n_bins: usize, h_max: f64) -> Result<BinnedVariogram> {
    if n_bins == 0 {
        return Err(Error::validation("n_bins must be >= 1"));
    }
    if !(h_max > 0.0) {
        return Err(Error::validation(format!("h_max must be > 0, got {h_max}")));
    }
    let width = h_max / n_bins as f64;
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    for p in &cloud.pairs {
        if p.h > h_max {
            continue;
        }
        let idx = ((p.h / width) as usize).min(n_bins - 1);
        sums[idx] += p.v;
        counts[idx] += 1;
    }
    let bins: Vec<VariogramBin> = (0..n_bins)
        .filter(|&b| counts[b] > 0)
        .map(|b| VariogramBin {
            h_center: (b as f64 + 0.5) * width,
            gamma_mean: sums[b] / counts[b] as f64,
            count: counts[b],
        })
        .collect();
    if bins.is_empty() {
        return Err(Error::EmptyResult(format!(
            "no pairs within h_max = {h_max}; cloud spans up to {:.6}",
            cloud.pairs.iter().map(|p| p.h).fold(0.0, f64::max)
        )));
    }
    Ok(BinnedVariogram { bins, h_max })
}

/// Options for [`fit_variogram_with`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Fit the nugget as a third (clipped non-negative) parameter. Off by
    /// default so the Gaussian model keeps its plain two-parameter form.
    pub fit_nugget: bool,
    pub max_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { fit_nugget: false, max_iters: 600 }
    }
}

/// Result of a variogram fit.
#[derive(Debug, Clone, PartialEq)]
pub struct VariogramFit {
    pub model: VariogramModel,
    /// Final count-weighted sum of squared residuals.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the cloud was too flat to identify a range (relative gamma
    /// spread < 1e-6); the range is then pinned at h_max.
    pub flat_cloud: bool,
}

/// Relative gamma spread below which a cloud counts as flat.
const FLAT_SPREAD: f64 = 1e-6;
/// Sill floor for degenerate (all-zero) clouds, keeping sill > 0.
const SILL_FLOOR: f64 = 1e-12;

/// Count-weighted least-squares fit with the nugget fixed at 0. See
/// [`fit_variogram_with`] for the nugget variant.
pub fn fit_variogram(binned: &BinnedVariogram, family: VariogramFamily) -> Result<VariogramFit> {
    fit_variogram_with(binned, family, FitOptions::default())
}

/// Fit sill/range (and optionally nugget) by minimizing
/// sum_b count_b * (gamma_b - gamma_model(h_b))^2 with a Nelder-Mead search
/// over log-transformed sill and range, multi-started from
/// range = {1/4, 1/2, 1} * h_max and sill = count-weighted mean gamma.
pub fn fit_variogram_with(
    binned: &BinnedVariogram,
    family: VariogramFamily,
    opts: FitOptions,
) -> Result<VariogramFit> {
    if binned.bins.len() < 3 {
        return Err(Error::validation(format!(
            "need at least 3 bins to fit, got {}",
            binned.bins.len()
        )));
    }

    let g_max = binned.bins.iter().map(|b| b.gamma_mean).fold(f64::NEG_INFINITY, f64::max);
    let g_min = binned.bins.iter().map(|b| b.gamma_mean).fold(f64::INFINITY, f64::min);
    let total: usize = binned.bins.iter().map(|b| b.count).sum();
    let g_mean =
        binned.bins.iter().map(|b| b.gamma_mean * b.count as f64).sum::<f64>() / total as f64;

    // Flat cloud: the range is unidentifiable, pin it at h_max.
    if (g_max - g_min) < FLAT_SPREAD * g_max.abs().max(FLAT_SPREAD) {
        let sill = g_mean.max(SILL_FLOOR);
        let model = VariogramModel { family, sill, range: binned.h_max, nugget: 0.0 };
        let loss = weighted_loss(binned, &model);
        return Ok(VariogramFit { model, loss, iterations: 0, converged: true, flat_cloud: true });
    }

    let sill0 = g_mean.max(SILL_FLOOR);
    let objective = |x: &[f64]| {
        let model = VariogramModel {
            family,
            sill: x[0].exp(),
            range: x[1].exp(),
            nugget: if opts.fit_nugget { x[2].max(0.0) } else { 0.0 },
        };
        weighted_loss(binned, &model)
    };

    let nm = NelderMead { max_iters: opts.max_iters, tol: 1e-12, init_step: 0.25 };
    let mut best: Option<crate::optim::OptimResult> = None;
    for range_frac in [0.25, 0.5, 1.0] {
        let mut x0 = vec![sill0.ln(), (range_frac * binned.h_max).ln()];
        if opts.fit_nugget {
            x0.push(0.0);
        }
        let r = nm.minimize(objective, &x0);
        if best.as_ref().map_or(true, |b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.expect("three starts were run");

    let model = VariogramModel::new(
        family,
        best.x[0].exp(),
        best.x[1].exp(),
        if opts.fit_nugget { best.x[2].max(0.0) } else { 0.0 },
    )?;
    let fit = VariogramFit {
        model,
        loss: best.value,
        iterations: best.iterations,
        converged: best.converged,
        flat_cloud: false,
    };
    if !fit.converged {
        return Err(Error::VariogramNonConvergence {
            loss: fit.loss,
            iterations: fit.iterations,
            fit: Box::new(fit),
        });
    }
    Ok(fit)
}

pub(crate) fn weighted_loss(binned: &BinnedVariogram, model: &VariogramModel) -> f64 {
    binned
        .bins
        .iter()
        .map(|b| {
            let r = b.gamma_mean - model.semivariance(b.h_center);
            b.count as f64 * r * r
        })
        .sum()
}

/// Spatial weight scheme for [`morans_i`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    /// w_ij = 1 / d_ij with zero self-weight, rows standardized to sum 1.
    InverseDistance,
}

/// Global Moran's I with row-standardized inverse-distance weights.
///
/// I = (n / S0) * sum_ij w_ij (z_i - mean)(z_j - mean) / sum_i (z_i - mean)^2
/// where S0 is the total weight (n after row standardization).
pub fn morans_i(samples: &SampleSet, scheme: WeightScheme) -> Result<f64> {
    let WeightScheme::InverseDistance = scheme;
    let n = samples.len();
    if n < 3 {
        return Err(Error::validation(format!("Moran's I needs n >= 3, got {n}")));
    }
    let z = samples.values();
    let mean = z.sum() / n as f64;
    let den: f64 = z.iter().map(|v| (v - mean) * (v - mean)).sum();
    if den == 0.0 {
        return Err(Error::UndefinedStatistic(
            "Moran's I is undefined for a constant field".into(),
        ));
    }
    let dist = samples.distances();
    let mut weights = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = dist.get(i, j);
            if d <= 0.0 {
                return Err(Error::validation(format!(
                    "samples {i} and {j} are coincident; inverse-distance weights undefined"
                )));
            }
            weights[(i, j)] = 1.0 / d;
            row_sum += 1.0 / d;
        }
        for j in 0..n {
            weights[(i, j)] /= row_sum;
        }
    }
    let mut num = 0.0;
    let mut s0 = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += weights[(i, j)] * (z[i] - mean) * (z[j] - mean);
            s0 += weights[(i, j)];
        }
    }
    Ok((n as f64 / s0) * num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_distr::Distribution;

    fn set(coords: &[f64], d: usize, z: &[f64]) -> SampleSet {
        SampleSet::from_coords_values(
            DMatrix::from_row_slice(z.len(), d, coords),
            DVector::from_row_slice(z),
        )
        .unwrap()
    }

    // ---- empirical semivariance --------------------------------------------

    #[test]
    fn two_point_cloud() {
        let s = set(&[0.0, 0.0, 1.0, 0.0], 2, &[1.0, 3.0]);
        let cloud = empirical_semivariance(&s).unwrap();
        assert_eq!(cloud.pairs.len(), 1);
        let p = cloud.pairs[0];
        assert_eq!((p.i, p.j), (0, 1));
        assert_eq!(p.h, 1.0);
        assert_eq!(p.v, 2.0); // 0.5 * (1 - 3)^2
    }

    #[test]
    fn constant_field_has_zero_dispersion() {
        let s = set(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0], 2, &[4.2, 4.2, 4.2]);
        let cloud = empirical_semivariance(&s).unwrap();
        assert!(cloud.pairs.iter().all(|p| p.v == 0.0));
    }

    #[test]
    fn cloud_matches_double_loop_oracle() {
        // 20-sample pseudo-random field; the oracle recomputes every pair.
        let n = 20;
        let mut coords = Vec::new();
        let mut z = Vec::new();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..n {
            coords.push(next() * 10.0);
            coords.push(next() * 10.0);
            z.push(next() * 5.0);
        }
        let s = set(&coords, 2, &z);
        let cloud = empirical_semivariance(&s).unwrap();
        assert_eq!(cloud.pairs.len(), n * (n - 1) / 2);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = coords[2 * i] - coords[2 * j];
                let dy = coords[2 * i + 1] - coords[2 * j + 1];
                let h = (dx * dx + dy * dy).sqrt();
                let v = 0.5 * (z[i] - z[j]) * (z[i] - z[j]);
                assert_relative_eq!(cloud.pairs[k].h, h, epsilon = 1e-12);
                assert_relative_eq!(cloud.pairs[k].v, v, epsilon = 1e-12);
                k += 1;
            }
        }
    }

    #[test]
    fn cloud_invariant_under_constant_shift() {
        let s1 = set(&[0.0, 0.0, 1.0, 0.0, 3.0, 4.0], 2, &[1.0, 2.0, -1.0]);
        let s2 = set(&[0.0, 0.0, 1.0, 0.0, 3.0, 4.0], 2, &[101.0, 102.0, 99.0]);
        let c1 = empirical_semivariance(&s1).unwrap();
        let c2 = empirical_semivariance(&s2).unwrap();
        for (a, b) in c1.pairs.iter().zip(&c2.pairs) {
            assert_relative_eq!(a.v, b.v, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_sample_is_rejected() {
        let s = set(&[0.0, 0.0], 2, &[1.0]);
        assert!(matches!(empirical_semivariance(&s), Err(Error::Validation(_))));
    }

    // ---- binning -------------------------------------------------------------

    #[test]
    fn single_pair_single_bin() {
        let cloud = VariogramCloud { pairs: vec![CloudPair { h: 1.0, v: 2.0, i: 0, j: 1 }] };
        let binned = bin_cloud(&cloud, 1, 2.0).unwrap();
        assert_eq!(binned.bins.len(), 1);
        assert_eq!(binned.bins[0].h_center, 1.0);
        assert_eq!(binned.bins[0].gamma_mean, 2.0);
        assert_eq!(binned.bins[0].count, 1);
    }

    #[test]
    fn same_bin_arithmetic_mean() {
        let cloud = VariogramCloud {
            pairs: vec![
                CloudPair { h: 0.4, v: 1.0, i: 0, j: 1 },
                CloudPair { h: 0.6, v: 3.0, i: 0, j: 2 },
            ],
        };
        let binned = bin_cloud(&cloud, 1, 1.0).unwrap();
        assert_eq!(binned.bins[0].gamma_mean, 2.0);
        assert_eq!(binned.bins[0].count, 2);
    }

    #[test]
    fn binned_means_match_grouping_oracle() {
        // Deterministic pseudo-random cloud; independent grouping recompute.
        let mut pairs = Vec::new();
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for k in 0..200 {
            pairs.push(CloudPair { h: next() * 12.0, v: next() * 3.0, i: 0, j: k + 1 });
        }
        let cloud = VariogramCloud { pairs: pairs.clone() };
        let n_bins = 6;
        let h_max = 10.0;
        let binned = bin_cloud(&cloud, n_bins, h_max).unwrap();

        let width = h_max / n_bins as f64;
        for b in 0..n_bins {
            let lo = b as f64 * width;
            let hi = (b + 1) as f64 * width;
            let members: Vec<&CloudPair> = pairs
                .iter()
                .filter(|p| {
                    if b == n_bins - 1 {
                        p.h >= lo && p.h <= h_max
                    } else {
                        p.h >= lo && p.h < hi
                    }
                })
                .collect();
            let bin =
                binned.bins.iter().find(|bb| (bb.h_center - (lo + hi) / 2.0).abs() < 1e-12);
            match bin {
                Some(bin) => {
                    assert_eq!(bin.count, members.len());
                    let mean = members.iter().map(|p| p.v).sum::<f64>() / members.len() as f64;
                    assert_relative_eq!(bin.gamma_mean, mean, epsilon = 1e-12);
                }
                None => assert!(members.is_empty(), "bin {b} missing despite members"),
            }
        }
    }

    #[test]
    fn all_pairs_excluded_is_empty_result() {
        let cloud = VariogramCloud { pairs: vec![CloudPair { h: 5.0, v: 1.0, i: 0, j: 1 }] };
        assert!(matches!(bin_cloud(&cloud, 3, 1.0), Err(Error::EmptyResult(_))));
    }

    // ---- models ----------------------------------------------------------------

    fn model(family: VariogramFamily, sill: f64, range: f64, nugget: f64) -> VariogramModel {
        VariogramModel::new(family, sill, range, nugget).unwrap()
    }

    #[test]
    fn gaussian_at_zero_and_limit() {
        let m = model(VariogramFamily::Gaussian, 1.0, 2.0, 0.0);
        assert_eq!(m.semivariance(0.0), 0.0);
        assert_relative_eq!(m.semivariance(200.0), 1.0, epsilon = 1e-12);
        let with_nugget = model(VariogramFamily::Gaussian, 1.5, 2.0, 0.25);
        assert_relative_eq!(with_nugget.semivariance(200.0), 1.75, epsilon = 1e-12);
        assert_eq!(with_nugget.semivariance(0.0), 0.25);
    }

    #[test]
    fn gaussian_at_range_hits_95_percent() {
        let m = model(VariogramFamily::Gaussian, 1.0, 5.0, 0.0);
        // 1 - exp(-3)
        assert_relative_eq!(m.semivariance(5.0), 0.950_212_931_632_136, epsilon = 1e-12);
    }

    #[test]
    fn exponential_at_range_hits_95_percent() {
        let m = model(VariogramFamily::Exponential, 1.0, 5.0, 0.0);
        assert_relative_eq!(m.semivariance(5.0), 0.950_212_931_632_136, epsilon = 1e-12);
        assert_eq!(m.semivariance(0.0), 0.0);
    }

    #[test]
    fn exponential_origin_slope_by_finite_difference() {
        let (sill, range) = (2.0, 5.0);
        let m = model(VariogramFamily::Exponential, sill, range, 0.0);
        let h = 1e-6 * range;
        let slope = (m.semivariance(h + h / 2.0) - m.semivariance(h - h / 2.0)) / h;
        assert_relative_eq!(slope, 3.0 * sill / range, max_relative = 1e-4);
    }

    #[test]
    fn gaussian_origin_slope_is_near_zero() {
        let (sill, range) = (2.0, 5.0);
        let m = model(VariogramFamily::Gaussian, sill, range, 0.0);
        let h = 1e-6 * range;
        let slope = (m.semivariance(h + h / 2.0) - m.semivariance(h - h / 2.0)) / h;
        assert!(slope.abs() < 1e-3 * sill / range, "slope {slope} not parabolic at origin");
    }

    #[test]
    fn both_families_monotone_on_grid() {
        for family in [VariogramFamily::Gaussian, VariogramFamily::Exponential] {
            let m = model(family, 1.7, 3.0, 0.1);
            let mut last = f64::NEG_INFINITY;
            for k in 0..=300 {
                let g = m.semivariance(k as f64 * 0.05);
                assert!(g >= last - 1e-15, "{family:?} not monotone at k={k}");
                last = g;
            }
        }
    }

    #[test]
    fn covariance_at_zero_is_sill_and_decays() {
        let m = model(VariogramFamily::Gaussian, 2.0, 5.0, 0.5);
        assert_relative_eq!(m.covariance(0.0), 2.0, epsilon = 1e-15);
        assert!(m.covariance(500.0).abs() < 1e-10);
    }

    #[test]
    fn covariance_duality_on_grid() {
        for family in [VariogramFamily::Gaussian, VariogramFamily::Exponential] {
            let m = model(family, 2.0, 5.0, 0.3);
            for k in 1..=200 {
                let h = k as f64 * 0.1;
                assert_relative_eq!(
                    m.covariance(h) + m.semivariance(h),
                    m.sill + m.nugget,
                    epsilon = 1e-12
                );
            }
        }
    }

    // ---- fitting -------------------------------------------------------------

    fn bins_from_model(m: &VariogramModel, h_max: f64, n_bins: usize) -> BinnedVariogram {
        let width = h_max / n_bins as f64;
        let bins = (0..n_bins)
            .map(|b| {
                let h = (b as f64 + 0.5) * width;
                VariogramBin { h_center: h, gamma_mean: m.semivariance(h), count: 10 }
            })
            .collect();
        BinnedVariogram::from_bins(bins, h_max).unwrap()
    }

    #[test]
    fn exact_gaussian_bins_are_recovered() {
        let truth = model(VariogramFamily::Gaussian, 2.0, 5.0, 0.0);
        let binned = bins_from_model(&truth, 15.0, 12);
        let fit = fit_variogram(&binned, VariogramFamily::Gaussian).unwrap();
        assert!(fit.converged);
        assert!(!fit.flat_cloud);
        assert_relative_eq!(fit.model.sill, 2.0, max_relative = 1e-4);
        assert_relative_eq!(fit.model.range, 5.0, max_relative = 1e-4);
    }

    #[test]
    fn flat_cloud_is_flagged() {
        let eps = 0.75;
        let bins = (0..5)
            .map(|b| VariogramBin { h_center: b as f64 + 0.5, gamma_mean: eps, count: 4 })
            .collect();
        let binned = BinnedVariogram::from_bins(bins, 5.0).unwrap();
        let fit = fit_variogram(&binned, VariogramFamily::Gaussian).unwrap();
        assert!(fit.flat_cloud);
        assert_relative_eq!(fit.model.sill, eps, epsilon = 1e-12);
        assert_eq!(fit.model.range, 5.0);
    }

    #[test]
    fn noisy_bins_recovered_within_5_percent() {
        let truth = model(VariogramFamily::Gaussian, 2.0, 5.0, 0.0);
        let h_max = 15.0;
        let n_bins = 15;
        let width = h_max / n_bins as f64;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        let normal = rand_distr::Normal::new(0.0, 0.01 * truth.sill).unwrap();
        let bins: Vec<VariogramBin> = (0..n_bins)
            .map(|b| {
                let h = (b as f64 + 0.5) * width;
                let noisy = truth.semivariance(h) + normal.sample(&mut rng);
                VariogramBin { h_center: h, gamma_mean: noisy.max(0.0), count: 10 }
            })
            .collect();
        let binned = BinnedVariogram::from_bins(bins, h_max).unwrap();
        let fit = fit_variogram(&binned, VariogramFamily::Gaussian).unwrap();
        assert_relative_eq!(fit.model.sill, truth.sill, max_relative = 0.05);
        assert_relative_eq!(fit.model.range, truth.range, max_relative = 0.05);
    }

    #[test]
    fn fit_needs_three_bins() {
        let bins = vec![
            VariogramBin { h_center: 0.5, gamma_mean: 1.0, count: 1 },
            VariogramBin { h_center: 1.5, gamma_mean: 2.0, count: 1 },
        ];
        let binned = BinnedVariogram::from_bins(bins, 2.0).unwrap();
        assert!(matches!(
            fit_variogram(&binned, VariogramFamily::Gaussian),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn fit_trace_non_increasing() {
        let truth = model(VariogramFamily::Gaussian, 2.0, 5.0, 0.0);
        let binned = bins_from_model(&truth, 15.0, 12);
        let nm = NelderMead::default();
        let obj = |x: &[f64]| {
            let m = VariogramModel {
                family: VariogramFamily::Gaussian,
                sill: x[0].exp(),
                range: x[1].exp(),
                nugget: 0.0,
            };
            weighted_loss(&binned, &m)
        };
        let r = nm.minimize(obj, &[1.0f64.ln(), 2.0f64.ln()]);
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "trace increased: {} -> {}", w[0], w[1]);
        }
    }

    // ---- Moran's I -------------------------------------------------------------

    #[test]
    fn gradient_field_positive_autocorrelation() {
        // 1-D arrangement along x with z equal to the coordinate.
        let n = 8;
        let mut coords = Vec::new();
        let mut z = Vec::new();
        for k in 0..n {
            coords.push(k as f64);
            coords.push(0.0);
            z.push(k as f64);
        }
        let s = set(&coords, 2, &z);
        let i = morans_i(&s, WeightScheme::InverseDistance).unwrap();
        assert!(i > 0.0, "gradient field should have positive I, got {i}");
    }

    /// Hand-evaluated Moran's I for the 2x2 checkerboard, written against the
    /// textbook formula rather than the library path.
    fn checkerboard_oracle() -> f64 {
        let coords = [(0.0f64, 0.0f64), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let z = [1.0, -1.0, -1.0, 1.0];
        let n = 4;
        let mean = 0.0;
        let mut w = [[0.0; 4]; 4];
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                if i != j {
                    let d = (coords[i].0 - coords[j].0).hypot(coords[i].1 - coords[j].1);
                    w[i][j] = 1.0 / d;
                    sum += w[i][j];
                }
            }
            for j in 0..n {
                w[i][j] /= sum;
            }
        }
        let mut num = 0.0;
        let mut s0 = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            den += (z[i] - mean) * (z[i] - mean);
            for j in 0..n {
                num += w[i][j] * (z[i] - mean) * (z[j] - mean);
                s0 += w[i][j];
            }
        }
        (n as f64 / s0) * num / den
    }

    #[test]
    fn checkerboard_negative_autocorrelation() {
        let s = set(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2, &[1.0, -1.0, -1.0, 1.0]);
        let i = morans_i(&s, WeightScheme::InverseDistance).unwrap();
        assert!(i < 0.0, "checkerboard should have negative I, got {i}");
        assert_relative_eq!(i, checkerboard_oracle(), epsilon = 1e-12);
    }

    #[test]
    fn permutation_null_mean_matches_expectation() {
        use rand::seq::SliceRandom;
        let n = 10;
        let mut coords = Vec::new();
        let mut state = 123u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..n {
            coords.push(next() * 10.0);
            coords.push(next() * 10.0);
        }
        let mut z: Vec<f64> =
            (0..n).map(|k| k as f64 * 0.7 + if k % 2 == 0 { 1.0 } else { 0.0 }).collect();

        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(99);
        let trials = 1000;
        let mut values = Vec::with_capacity(trials);
        for _ in 0..trials {
            z.shuffle(&mut rng);
            let s = set(&coords, 2, &z);
            values.push(morans_i(&s, WeightScheme::InverseDistance).unwrap());
        }
        let mean = values.iter().sum::<f64>() / trials as f64;
        let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (trials as f64 - 1.0))
            .sqrt();
        let se = sd / (trials as f64).sqrt();
        let expectation = -1.0 / (n as f64 - 1.0);
        assert!(
            (mean - expectation).abs() < 3.0 * se,
            "permutation mean {mean} vs -1/(n-1) = {expectation}, se {se}"
        );
    }

    #[test]
    fn constant_field_is_undefined() {
        let s = set(&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0], 2, &[2.0, 2.0, 2.0]);
        assert!(matches!(
            morans_i(&s, WeightScheme::InverseDistance),
            Err(Error::UndefinedStatistic(_))
        ));
    }
}

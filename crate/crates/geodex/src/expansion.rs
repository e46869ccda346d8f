//! Dimension expansion: learn latent per-sample coordinates so that a
//! stationary Gaussian variogram fits the dispersion pattern in the
//! augmented space.
//!
//! The objective is
//!
//! ```text
//! J(phi, Z') = sum_{i<j} ( v_ij - gamma_phi( d_ij([S | Z']) ) )^2  +  lambda ||Z'||_F^2
//! ```
//!
//! with v_ij = 0.5 (z_i - z_j)^2 the dispersion pairs, d_ij the Euclidean
//! distance in the coordinate block augmented by the latent columns, and
//! gamma_phi the Gaussian variogram. The raw objective is translation- and
//! rotation-invariant in Z' (only distances enter), so a ridge penalty plus
//! final centering fix the gauge.
//!
//! Minimization alternates a variogram re-fit (binned least squares, then a
//! direct polish against the pair objective) with a latent-coordinate update
//! (gradient descent with backtracking line search, or a simplex search).
//! Both sub-steps accept a candidate only if it lowers the objective, so the
//! recorded trace is non-increasing by construction.
//!
//! Coordinates are standardized (mean 0, sd 1 per column) before the
//! optimizer sees them; the learned latents live in that standardized gauge.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::min_symmetric_eigenvalue;
use crate::optim::{GradientDescent, NelderMead};
use crate::regression::{gp_predict, KernelParams, MeanFunction};
use crate::sample::{standardize_columns, SampleSet};
use crate::variogram::{
    bin_cloud, empirical_semivariance, fit_variogram, VariogramFamily, VariogramModel,
};

/// Latent-update optimizer choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionOptimizer {
    GradientDescentWithLineSearch,
    Simplex,
}

/// Configuration for [`learn_expansion`].
#[derive(Debug, Clone, Copy)]
pub struct ExpansionConfig {
    /// Number of latent dimensions to learn (>= 1).
    pub p: usize,
    /// Ridge weight on ||Z'||_F^2. `None` uses the variance of the
    /// dispersion values v_ij.
    pub lambda: Option<f64>,
    pub optimizer: ExpansionOptimizer,
    /// Maximum outer alternations.
    pub max_iters: usize,
    /// Relative objective-change threshold that counts as converged.
    pub tolerance: f64,
    /// Seed for the latent initialization noise.
    pub seed: u64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            p: 1,
            lambda: None,
            optimizer: ExpansionOptimizer::GradientDescentWithLineSearch,
            max_iters: 80,
            tolerance: 1e-6,
            seed: 42,
        }
    }
}

impl ExpansionConfig {
    fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::validation("expansion needs p >= 1 latent dimensions"));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::validation(format!("lambda must be >= 0, got {l}")));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::validation("tolerance must be > 0"));
        }
        Ok(())
    }
}

/// Learned latent coordinates plus the fitted variogram and optimizer trace.
///
/// `z_prime` is expressed in the standardized coordinate gauge (the
/// geographic columns are scaled to unit variance before optimization) and
/// its columns are centered to mean 0.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub z_prime: DMatrix<f64>,
    pub phi_hat: VariogramModel,
    /// (outer iteration, objective value) after each accepted step.
    pub trace: Vec<(usize, f64)>,
    pub converged: bool,
    /// The ridge weight actually used.
    pub lambda: f64,
}

/// Dispersion pairs with the squared geographic part of each distance
/// precomputed (in standardized coordinates).
struct PairContext {
    n: usize,
    /// (i, j, v_ij, squared geographic distance).
    pairs: Vec<(usize, usize, f64, f64)>,
}

impl PairContext {
    fn new(coords: &DMatrix<f64>, values: &DVector<f64>) -> Self {
        let n = coords.nrows();
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let mut d2 = 0.0;
                for c in 0..coords.ncols() {
                    let d = coords[(i, c)] - coords[(j, c)];
                    d2 += d * d;
                }
                let dz = values[i] - values[j];
                pairs.push((i, j, 0.5 * dz * dz, d2));
            }
        }
        PairContext { n, pairs }
    }

    fn distance(&self, pair: &(usize, usize, f64, f64), z_prime: &DMatrix<f64>) -> f64 {
        let (i, j, _, geo_d2) = *pair;
        let mut d2 = geo_d2;
        for c in 0..z_prime.ncols() {
            let d = z_prime[(i, c)] - z_prime[(j, c)];
            d2 += d * d;
        }
        d2.sqrt()
    }

    fn objective(&self, z_prime: &DMatrix<f64>, phi: &VariogramModel, lambda: f64) -> f64 {
        let mut acc = 0.0;
        for pair in &self.pairs {
            let d = self.distance(pair, z_prime);
            let r = pair.2 - phi.semivariance(d);
            acc += r * r;
        }
        acc + lambda * z_prime.iter().map(|v| v * v).sum::<f64>()
    }

    /// Residual sum alone (no ridge term).
    fn residual(&self, z_prime: &DMatrix<f64>, phi: &VariogramModel) -> f64 {
        self.objective(z_prime, phi, 0.0)
    }

    /// Gradient of the objective with respect to z_prime entries and the
    /// log-parameters (log sill, log range) of the Gaussian variogram. The
    /// nugget is held fixed. The distance-term gradient at a coincident pair
    /// (d = 0) is defined as 0.
    fn gradient(
        &self,
        z_prime: &DMatrix<f64>,
        phi: &VariogramModel,
        lambda: f64,
    ) -> (DMatrix<f64>, [f64; 2]) {
        let p = z_prime.ncols();
        let mut g_z = DMatrix::zeros(self.n, p);
        let mut g_sill = 0.0;
        let mut g_range = 0.0;
        let a2 = phi.range * phi.range;
        for pair in &self.pairs {
            let (i, j, v, _) = *pair;
            let d = self.distance(pair, z_prime);
            let e = (-3.0 * d * d / a2).exp();
            let gamma = phi.nugget + phi.sill * (1.0 - e);
            let r = v - gamma;
            // d gamma / d d
            let dgamma_dd = phi.sill * e * 6.0 * d / a2;
            if d > 0.0 {
                let scale = -2.0 * r * dgamma_dd / d;
                for c in 0..p {
                    let diff = z_prime[(i, c)] - z_prime[(j, c)];
                    g_z[(i, c)] += scale * diff;
                    g_z[(j, c)] -= scale * diff;
                }
            }
            // d gamma / d log sill = sill (1 - e)
            g_sill += -2.0 * r * phi.sill * (1.0 - e);
            // d gamma / d log range = -6 sill e d^2 / a^2
            g_range += -2.0 * r * (-6.0 * phi.sill * e * d * d / a2);
        }
        for c in 0..p {
            for i in 0..self.n {
                g_z[(i, c)] += 2.0 * lambda * z_prime[(i, c)];
            }
        }
        (g_z, [g_sill, g_range])
    }
}

/// Eq.-style objective over a sample set as given (no standardization):
/// sum of squared pair residuals plus the ridge term.
pub fn expansion_objective(
    z_prime: &DMatrix<f64>,
    phi: &VariogramModel,
    samples: &SampleSet,
    lambda: f64,
) -> Result<f64> {
    check_shapes(z_prime, samples, lambda)?;
    let ctx = PairContext::new(samples.coords(), samples.values());
    Ok(ctx.objective(z_prime, phi, lambda))
}

/// Analytic gradient of [`expansion_objective`] with respect to the latent
/// coordinates and the (log sill, log range) of the Gaussian variogram.
pub fn expansion_gradient(
    z_prime: &DMatrix<f64>,
    phi: &VariogramModel,
    samples: &SampleSet,
    lambda: f64,
) -> Result<(DMatrix<f64>, [f64; 2])> {
    check_shapes(z_prime, samples, lambda)?;
    let ctx = PairContext::new(samples.coords(), samples.values());
    Ok(ctx.gradient(z_prime, phi, lambda))
}

fn check_shapes(z_prime: &DMatrix<f64>, samples: &SampleSet, lambda: f64) -> Result<()> {
    if z_prime.nrows() != samples.len() {
        return Err(Error::validation(format!(
            "z_prime has {} rows, samples have {}",
            z_prime.nrows(),
            samples.len()
        )));
    }
    if z_prime.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("z_prime contains non-finite entries"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::validation(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

/// Initial latent noise scale relative to the (standardized) coordinate scale.
const INIT_NOISE_SD: f64 = 1e-2;
/// Default ridge weight relative to the variance of the dispersion values.
/// At this strength the penalty pins the latents near zero on fields whose
/// cloud is already explained by distance, while a genuine regime structure
/// (whose residual reduction dwarfs the penalty) still breaks free.
const DEFAULT_LAMBDA_REL: f64 = 1.0;
/// Bins used when re-fitting the variogram on the expanded cloud.
const FIT_BINS: usize = 12;

/// Alternating minimization of the expansion objective.
///
/// Per outer iteration: (a) re-fit the Gaussian variogram on the
/// expanded-distance cloud (binned weighted least squares, then a simplex
/// polish against the pair objective), (b) update the latent coordinates
/// with the configured optimizer at fixed variogram. Either step is accepted
/// only if it lowers the objective. Stops when the relative objective change
/// drops below `config.tolerance` or after `config.max_iters` alternations
/// (then `converged = false`, best state retained).
pub fn learn_expansion(samples: &SampleSet, config: &ExpansionConfig) -> Result<Expansion> {
    config.validate()?;
    let n = samples.len();
    if n < 4 {
        return Err(Error::validation(format!("expansion needs n >= 4 samples, got {n}")));
    }
    let z = samples.values();
    if (0..n).all(|i| z[i] == z[0]) {
        return Err(Error::validation(
            "all observed values are equal; dispersion is identically zero",
        ));
    }

    let (std_coords, _) = standardize_columns(samples.coords());
    let ctx = PairContext::new(&std_coords, samples.values());

    let v_mean = ctx.pairs.iter().map(|p| p.2).sum::<f64>() / ctx.pairs.len() as f64;
    let v_var = ctx.pairs.iter().map(|p| (p.2 - v_mean) * (p.2 - v_mean)).sum::<f64>()
        / (ctx.pairs.len() as f64 - 1.0).max(1.0);
    let lambda = config.lambda.unwrap_or(DEFAULT_LAMBDA_REL * v_var);

    // Small seeded noise; exact zeros sit on a saddle of the distance term.
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut z_prime =
        DMatrix::from_fn(n, config.p, |_, _| {
        let e: f64 = StandardNormal.sample(&mut rng);
        INIT_NOISE_SD * e
    });

    let mut phi = refit_phi(&ctx, &z_prime, None)?;
    let mut objective = ctx.objective(&z_prime, &phi, lambda);
    let mut trace = vec![(0usize, objective)];
    let mut converged = false;

    for iter in 1..=config.max_iters {
        // (a) variogram step at fixed latents.
        if let Ok(candidate) = refit_phi(&ctx, &z_prime, Some(&phi)) {
            let value = ctx.objective(&z_prime, &candidate, lambda);
            if value < objective {
                phi = candidate;
                objective = value;
            }
        }

        // (b) latent step at fixed variogram.
        let (z_cand, value) = latent_step(&ctx, &z_prime, &phi, lambda, config.optimizer);
        if value < objective {
            z_prime = z_cand;
            objective = value;
        }

        let previous = trace.last().expect("trace starts non-empty").1;
        trace.push((iter, objective));
        let decrease = previous - objective;
        if decrease >= 0.0 && decrease < config.tolerance * (previous.abs() + config.tolerance) {
            converged = true;
            break;
        }
    }

    // Gauge fixing: centering leaves every distance unchanged and can only
    // shrink the ridge term.
    for c in 0..config.p {
        let mean = z_prime.column(c).sum() / n as f64;
        for i in 0..n {
            z_prime[(i, c)] -= mean;
        }
    }
    let centered_objective = ctx.objective(&z_prime, &phi, lambda);
    if centered_objective < objective {
        let last_iter = trace.last().expect("non-empty").0;
        trace.push((last_iter, centered_objective));
    }

    Ok(Expansion { z_prime, phi_hat: phi, trace, converged, lambda })
}

/// Fit the Gaussian variogram to the current expanded cloud: binned weighted
/// least squares for a starting point, then a simplex polish directly on the
/// (unweighted) pair objective. `current` seeds the polish as well.
fn refit_phi(
    ctx: &PairContext,
    z_prime: &DMatrix<f64>,
    current: Option<&VariogramModel>,
) -> Result<VariogramModel> {
    let distances: Vec<f64> = ctx.pairs.iter().map(|p| ctx.distance(p, z_prime)).collect();
    let h_max = distances.iter().cloned().fold(0.0, f64::max);
    if h_max <= 0.0 {
        return Err(Error::validation("all expanded distances are zero"));
    }
    let cloud = crate::variogram::VariogramCloud {
        pairs: ctx
            .pairs
            .iter()
            .zip(&distances)
            .map(|(&(i, j, v, _), &h)| crate::variogram::CloudPair { h, v, i, j })
            .collect(),
    };
    let binned = bin_cloud(&cloud, FIT_BINS, h_max)?;
    let binned_fit = match fit_variogram(&binned, VariogramFamily::Gaussian) {
        Ok(fit) => fit.model,
        Err(Error::VariogramNonConvergence { fit, .. }) => fit.model,
        Err(e) => return Err(e),
    };

    // Polish on the pair objective itself (lambda term is constant here).
    // The parameters are boxed: without bounds the Gaussian family has a
    // degenerate ridge (sill and range growing together, gamma collapsing to
    // a pure quadratic that never saturates).
    let v_max = ctx.pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let sill_lo = (1e-9 * v_max.max(1e-9)).ln();
    let sill_hi = (10.0 * v_max.max(1e-9)).ln();
    let range_lo = (1e-3 * h_max).ln();
    let range_hi = (3.0 * h_max).ln();
    let boxed = move |x: &[f64]| -> (f64, f64) {
        (x[0].clamp(sill_lo, sill_hi).exp(), x[1].clamp(range_lo, range_hi).exp())
    };

    let pair_loss = |m: &VariogramModel| ctx.residual(z_prime, m);
    // Project the binned fit into the box; its own search is unbounded and
    // can wander onto the quadratic ridge on clouds that never plateau.
    let mut best = VariogramModel {
        family: VariogramFamily::Gaussian,
        sill: binned_fit.sill.clamp(sill_lo.exp(), sill_hi.exp()),
        range: binned_fit.range.clamp(range_lo.exp(), range_hi.exp()),
        nugget: binned_fit.nugget,
    };
    if let Some(cur) = current {
        if pair_loss(cur) < pair_loss(&best) {
            best = *cur;
        }
    }
    let nugget = best.nugget;
    let nm = NelderMead { max_iters: 200, tol: 1e-12, init_step: 0.2 };
    let r = nm.minimize(
        |x: &[f64]| {
            let (sill, range) = boxed(x);
            pair_loss(&VariogramModel { family: VariogramFamily::Gaussian, sill, range, nugget })
        },
        &[best.sill.ln().clamp(sill_lo, sill_hi), best.range.ln().clamp(range_lo, range_hi)],
    );
    let (sill, range) = boxed(&r.x);
    let polished = VariogramModel { family: VariogramFamily::Gaussian, sill, range, nugget };
    Ok(if pair_loss(&polished) < pair_loss(&best) { polished } else { best })
}

fn latent_step(
    ctx: &PairContext,
    z_prime: &DMatrix<f64>,
    phi: &VariogramModel,
    lambda: f64,
    optimizer: ExpansionOptimizer,
) -> (DMatrix<f64>, f64) {
    let n = z_prime.nrows();
    let p = z_prime.ncols();
    let x0: Vec<f64> = z_prime.iter().cloned().collect(); // column-major flatten
    let unflatten = |x: &[f64]| DMatrix::from_column_slice(n, p, x);
    let f = |x: &[f64]| ctx.objective(&unflatten(x), phi, lambda);

    match optimizer {
        ExpansionOptimizer::GradientDescentWithLineSearch => {
            let grad = |x: &[f64]| {
                let (g, _) = ctx.gradient(&unflatten(x), phi, lambda);
                g.iter().cloned().collect::<Vec<f64>>()
            };
            let gd = GradientDescent {
                max_iters: 60,
                tol: 1e-10,
                init_step: 1.0,
                backtrack: 0.5,
                min_step: 1e-16,
            };
            let r = gd.minimize(f, grad, &x0);
            (unflatten(&r.x), r.value)
        }
        ExpansionOptimizer::Simplex => {
            let nm = NelderMead { max_iters: 400, tol: 1e-12, init_step: 0.2 };
            let r = nm.minimize(f, &x0);
            (unflatten(&r.x), r.value)
        }
    }
}

/// Paired geographic-only vs expanded-space diagnostics.
#[derive(Debug, Clone)]
pub struct StationarityReport {
    /// Variogram fitted to the geographic-only cloud (same polish as the
    /// expanded side, so the comparison is like-for-like).
    pub geographic_model: VariogramModel,
    /// Unweighted pair residual of the geographic-only fit.
    pub geographic_residual: f64,
    /// The learned variogram.
    pub expanded_model: VariogramModel,
    /// Unweighted pair residual in the expanded space.
    pub expanded_residual: f64,
    /// expanded_residual / geographic_residual.
    pub improvement_ratio: f64,
    /// Minimum eigenvalue of the Gaussian covariance matrix built from the
    /// expanded coordinates (the positive-definiteness witness).
    pub psd_min_eigenvalue: f64,
    pub n_pairs: usize,
}

/// Compare the dispersion fit before and after expansion and verify that the
/// Gaussian covariance over the expanded coordinates stays positive
/// semi-definite.
pub fn stationarity_report(samples: &SampleSet, expansion: &Expansion) -> Result<StationarityReport> {
    let (std_coords, _) = standardize_columns(samples.coords());
    let ctx = PairContext::new(&std_coords, samples.values());
    let zero = DMatrix::zeros(samples.len(), expansion.z_prime.ncols());

    let geographic_model = refit_phi(&ctx, &zero, None)?;
    let geographic_residual = ctx.residual(&zero, &geographic_model);
    let expanded_residual = ctx.residual(&expansion.z_prime, &expansion.phi_hat);
    let improvement_ratio = expanded_residual / geographic_residual;

    // Theorem witness: the Gaussian covariance c(h) = sill exp(-3h^2/a^2)
    // over the expanded point set must be PSD. Checked at unit sill (the
    // correlation matrix) so the tolerance is scale-free; a positive sill
    // factor cannot change definiteness.
    let n = samples.len();
    let phi = &expansion.phi_hat;
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        cov[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let mut d2 = 0.0;
            for c in 0..std_coords.ncols() {
                let d = std_coords[(i, c)] - std_coords[(j, c)];
                d2 += d * d;
            }
            for c in 0..expansion.z_prime.ncols() {
                let d = expansion.z_prime[(i, c)] - expansion.z_prime[(j, c)];
                d2 += d * d;
            }
            let v = (-3.0 * d2 / (phi.range * phi.range)).exp();
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let psd_min_eigenvalue = min_symmetric_eigenvalue(&cov);

    Ok(StationarityReport {
        geographic_model,
        geographic_residual,
        expanded_model: expansion.phi_hat,
        expanded_residual,
        improvement_ratio,
        psd_min_eigenvalue,
        n_pairs: ctx.pairs.len(),
    })
}

/// Interpolate each latent column onto `grid` (g x d_s geographic points)
/// with a near-noise-free GP over the original geographic coordinates.
///
/// Hyperparameters are deterministic: signal variance = latent column
/// variance, length-scale = median pairwise sample distance / 3, noise =
/// 1e-8 x signal variance.
pub fn interpolate_latent(
    samples: &SampleSet,
    expansion: &Expansion,
    grid: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = samples.len();
    if expansion.z_prime.nrows() != n {
        return Err(Error::validation("expansion does not match the sample set"));
    }
    if grid.ncols() != samples.coord_dim() {
        return Err(Error::validation(format!(
            "grid has {} columns, geographic coordinates have {}",
            grid.ncols(),
            samples.coord_dim()
        )));
    }

    let dist = samples.distances();
    let mut ds: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            ds.push(dist.get(i, j));
        }
    }
    ds.sort_by(f64::total_cmp);
    let median = ds[ds.len() / 2];
    let length_scale = (median / 3.0).max(1e-9);

    let p = expansion.z_prime.ncols();
    let mut out = DMatrix::zeros(grid.nrows(), p);
    for c in 0..p {
        let col = DVector::from_column_slice(expansion.z_prime.column(c).as_slice());
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let signal = var.max(1e-12);
        let params = KernelParams {
            signal_variance: signal,
            length_scale,
            noise_variance: 1e-8 * signal,
        };
        let pred = gp_predict(samples.coords(), &col, grid, &params, MeanFunction::Constant)?;
        out.set_column(c, pred.mean());
    }
    Ok(out)
}

/// Point-biserial correlation between a continuous score and binary labels:
/// (mean_true - mean_false) / sd * sqrt(n_true n_false / n^2).
pub fn point_biserial(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let n = scores.len();
    if n != labels.len() || n < 2 {
        return Err(Error::validation("scores and labels must align, n >= 2"));
    }
    let n1 = labels.iter().filter(|&&b| b).count();
    let n0 = n - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::UndefinedStatistic("labels are all one class".into()));
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    let sd = (scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64).sqrt();
    if sd == 0.0 {
        return Err(Error::UndefinedStatistic("scores are constant".into()));
    }
    let mean1 = scores.iter().zip(labels).filter(|(_, &b)| b).map(|(s, _)| s).sum::<f64>()
        / n1 as f64;
    let mean0 = scores.iter().zip(labels).filter(|(_, &b)| !b).map(|(s, _)| s).sum::<f64>()
        / n0 as f64;
    Ok((mean1 - mean0) / sd * ((n1 as f64 * n0 as f64) / (n as f64 * n as f64)).sqrt())
}

//! `expand` subcommand: learn latent coordinates, report stationarity, and
//! draw the expanded variogram and the interpolated latent map.

use std::io::Write;
use std::path::PathBuf;

use nalgebra::DMatrix;

use geodex::expansion::{
    interpolate_latent, learn_expansion, stationarity_report, Expansion, ExpansionConfig,
    ExpansionOptimizer, StationarityReport,
};
use geodex::sample::{standardize_columns, SampleSet};
use geodex::variogram::{bin_cloud, CloudPair, VariogramCloud};

use crate::config::{resolve, resolve_opt, RunConfig};
use crate::csvio::{self, fmt_f64};
use crate::error::{CliError, CliResult};

use super::ensure_out_dir;

pub struct ExpandArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub p: Option<usize>,
    pub lambda: Option<f64>,
    pub max_iters: Option<usize>,
    pub tolerance: Option<f64>,
    pub optimizer: Option<String>,
    pub seed: u64,
}

pub fn run(cfg: &RunConfig, args: &ExpandArgs) -> CliResult<()> {
    let samples = csvio::read_samples(&args.input)?;
    let config = build_config(cfg, args)?;
    let expansion = learn_expansion(&samples, &config)?;
    let report = stationarity_report(&samples, &expansion)?;
    ensure_out_dir(&args.out)?;
    write_outputs(&args.out, &samples, &expansion, &report)?;
    println!(
        "expand: improvement ratio {:.4}, converged {} -> {}",
        report.improvement_ratio,
        expansion.converged,
        args.out.display()
    );
    Ok(())
}

pub fn build_config(cfg: &RunConfig, args: &ExpandArgs) -> CliResult<ExpansionConfig> {
    let optimizer_name =
        resolve(&args.optimizer, cfg, "expand.optimizer", "gradient-descent".to_string())?;
    let optimizer = match optimizer_name.as_str() {
        "gradient-descent" => ExpansionOptimizer::GradientDescentWithLineSearch,
        "simplex" => ExpansionOptimizer::Simplex,
        other => {
            return Err(CliError::Validation(format!(
                "unknown optimizer '{other}' (expected gradient-descent|simplex)"
            )))
        }
    };
    Ok(ExpansionConfig {
        p: resolve(&args.p, cfg, "expand.p", 1usize)?,
        lambda: resolve_opt(&args.lambda, cfg, "expand.lambda")?,
        optimizer,
        max_iters: resolve(&args.max_iters, cfg, "expand.max_iters", 80usize)?,
        tolerance: resolve(&args.tolerance, cfg, "expand.tolerance", 1e-6)?,
        seed: args.seed,
    })
}

/// Write every expand artifact into `out`. Shared with `repro-paper`.
pub fn write_outputs(
    out: &std::path::Path,
    samples: &SampleSet,
    expansion: &Expansion,
    report: &StationarityReport,
) -> CliResult<()> {
    csvio::write_zprime(&out.join("zprime.csv"), &expansion.z_prime)?;
    csvio::write_phi_csv(
        &out.join("phi.csv"),
        &expansion.phi_hat,
        report.expanded_residual,
    )?;
    csvio::write_trace(&out.join("trace.csv"), &expansion.trace)?;

    let mut rep = std::fs::File::create(out.join("report.txt"))?;
    writeln!(rep, "n_samples={}", samples.len())?;
    writeln!(rep, "n_pairs={}", report.n_pairs)?;
    writeln!(rep, "lambda={}", fmt_f64(expansion.lambda))?;
    writeln!(rep, "converged={}", expansion.converged)?;
    writeln!(rep, "geographic_sill={}", fmt_f64(report.geographic_model.sill))?;
    writeln!(rep, "geographic_range={}", fmt_f64(report.geographic_model.range))?;
    writeln!(rep, "geographic_residual={}", fmt_f64(report.geographic_residual))?;
    writeln!(rep, "expanded_sill={}", fmt_f64(report.expanded_model.sill))?;
    writeln!(rep, "expanded_range={}", fmt_f64(report.expanded_model.range))?;
    writeln!(rep, "expanded_residual={}", fmt_f64(report.expanded_residual))?;
    writeln!(rep, "improvement_ratio={}", fmt_f64(report.improvement_ratio))?;
    writeln!(rep, "psd_min_eigenvalue={}", fmt_f64(report.psd_min_eigenvalue))?;

    // Expanded-distance cloud with the learned model superimposed.
    let (std_coords, _) = standardize_columns(samples.coords());
    let n = samples.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
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
            let dz = samples.values()[i] - samples.values()[j];
            pairs.push(CloudPair { h: d2.sqrt(), v: 0.5 * dz * dz, i, j });
        }
    }
    let h_max = pairs.iter().map(|p| p.h).fold(0.0, f64::max);
    let cloud = VariogramCloud { pairs };
    let binned = bin_cloud(&cloud, 12, h_max)?;
    let cloud_pts: Vec<(f64, f64)> = cloud.pairs.iter().map(|p| (p.h, p.v)).collect();
    let bin_pts: Vec<(f64, f64)> = binned.bins.iter().map(|b| (b.h_center, b.gamma_mean)).collect();
    let svg = geodex::plot::variogram_plot(
        &cloud_pts,
        &bin_pts,
        Some((&expansion.phi_hat, h_max)),
        "Semivariogram in expanded space",
    );
    std::fs::write(out.join("variogram_expanded.svg"), svg)?;

    // Latent surface over the sample bounding box, contours at quartiles.
    let (nx, ny) = (40usize, 30usize);
    let coords = samples.coords();
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for i in 0..n {
        x0 = x0.min(coords[(i, 0)]);
        x1 = x1.max(coords[(i, 0)]);
        y0 = y0.min(coords[(i, 1)]);
        y1 = y1.max(coords[(i, 1)]);
    }
    let dx = (x1 - x0).max(1e-9) / (nx - 1) as f64;
    let dy = (y1 - y0).max(1e-9) / (ny - 1) as f64;
    // The latent map is drawn over the first two geographic axes; extra axes
    // (alt) are held at their sample mean.
    let mut grid = DMatrix::zeros(nx * ny, samples.coord_dim());
    for c in 2..samples.coord_dim() {
        let mean = coords.column(c).sum() / n as f64;
        for r in 0..nx * ny {
            grid[(r, c)] = mean;
        }
    }
    for iy in 0..ny {
        for ix in 0..nx {
            let r = iy * nx + ix;
            grid[(r, 0)] = x0 + ix as f64 * dx;
            grid[(r, 1)] = y0 + iy as f64 * dy;
        }
    }
    let surface = interpolate_latent(samples, expansion, &grid)?;
    let values: Vec<f64> = surface.column(0).iter().cloned().collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f) as usize];
    let levels = [q(0.25), q(0.5), q(0.75)];
    let sample_pts: Vec<(f64, f64, f64)> = (0..n)
        .map(|i| (coords[(i, 0)], coords[(i, 1)], expansion.z_prime[(i, 0)]))
        .collect();
    let svg = geodex::plot::latent_map(
        &values,
        nx,
        ny,
        (x0, y0),
        dx,
        &levels,
        &sample_pts,
        "Interpolated latent dimension",
    );
    std::fs::write(out.join("latent_map.svg"), svg)?;
    Ok(())
}

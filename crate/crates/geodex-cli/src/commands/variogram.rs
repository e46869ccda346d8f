//! `variogram` and `fit` subcommands: empirical cloud, binning, model fit.

use std::path::Path;

use geodex::variogram::{
    bin_cloud, empirical_semivariance, fit_variogram_with, BinnedVariogram, FitOptions,
    VariogramCloud, VariogramFamily, VariogramFit,
};

use crate::config::{resolve, resolve_opt, RunConfig};
use crate::csvio;
use crate::error::{CliError, CliResult};

use super::ensure_out_dir;

pub struct VariogramArgs {
    pub input: std::path::PathBuf,
    pub out: std::path::PathBuf,
    pub n_bins: Option<usize>,
    pub h_max: Option<f64>,
}

/// Shared first half of `variogram` and `fit`.
fn cloud_and_bins(
    input: &Path,
    n_bins: usize,
    h_max: Option<f64>,
) -> CliResult<(VariogramCloud, BinnedVariogram)> {
    let samples = csvio::read_samples(input)?;
    if samples.len() < 2 {
        return Err(CliError::Validation(format!(
            "variogram needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let cloud = empirical_semivariance(&samples)?;
    let h_max =
        h_max.unwrap_or_else(|| cloud.pairs.iter().map(|p| p.h).fold(0.0, f64::max));
    let binned = bin_cloud(&cloud, n_bins, h_max)?;
    Ok((cloud, binned))
}

fn cloud_points(cloud: &VariogramCloud) -> Vec<(f64, f64)> {
    cloud.pairs.iter().map(|p| (p.h, p.v)).collect()
}

fn bin_points(binned: &BinnedVariogram) -> Vec<(f64, f64)> {
    binned.bins.iter().map(|b| (b.h_center, b.gamma_mean)).collect()
}

pub fn run_variogram(cfg: &RunConfig, args: &VariogramArgs) -> CliResult<()> {
    let n_bins = resolve(&args.n_bins, cfg, "variogram.n_bins", 15usize)?;
    let h_max = resolve_opt(&args.h_max, cfg, "variogram.h_max")?;
    let (cloud, binned) = cloud_and_bins(&args.input, n_bins, h_max)?;

    ensure_out_dir(&args.out)?;
    csvio::write_cloud(&args.out.join("cloud.csv"), &cloud)?;
    csvio::write_binned(&args.out.join("binned.csv"), &binned)?;
    let svg = geodex::plot::variogram_plot(
        &cloud_points(&cloud),
        &bin_points(&binned),
        None,
        "Empirical semivariogram",
    );
    std::fs::write(args.out.join("variogram.svg"), svg)?;
    println!(
        "variogram: {} pairs, {} bins -> {}",
        cloud.pairs.len(),
        binned.bins.len(),
        args.out.display()
    );
    Ok(())
}

pub struct FitArgs {
    pub input: std::path::PathBuf,
    pub out: std::path::PathBuf,
    pub family: Option<String>,
    pub nugget: bool,
    pub n_bins: Option<usize>,
    pub h_max: Option<f64>,
}

pub fn run_fit(cfg: &RunConfig, args: &FitArgs) -> CliResult<()> {
    let family_name = resolve(&args.family, cfg, "fit.family", "gaussian".to_string())?;
    let family: VariogramFamily =
        family_name.parse().map_err(|e: geodex::Error| CliError::Validation(e.to_string()))?;
    let fit_nugget = args.nugget || cfg.get::<bool>("fit.nugget")?.unwrap_or(false);
    let n_bins = resolve(&args.n_bins, cfg, "fit.n_bins", 15usize)?;
    let h_max = resolve_opt(&args.h_max, cfg, "fit.h_max")?;

    let (cloud, binned) = cloud_and_bins(&args.input, n_bins, h_max)?;
    ensure_out_dir(&args.out)?;

    let opts = FitOptions { fit_nugget, ..FitOptions::default() };
    let (fit, failure): (VariogramFit, Option<CliError>) =
        match fit_variogram_with(&binned, family, opts) {
            Ok(fit) => (fit, None),
            Err(geodex::Error::VariogramNonConvergence { fit, iterations, loss }) => (
                *fit,
                Some(CliError::FitNonConvergence(format!(
                    "stopped after {iterations} iterations at loss {loss:e}"
                ))),
            ),
            Err(e) => return Err(e.into()),
        };

    // Best-so-far parameters are written even when the fit did not converge.
    csvio::write_model_txt(
        &args.out.join("model.txt"),
        &fit.model,
        fit.loss,
        fit.iterations,
        fit.converged,
        fit.flat_cloud,
    )?;
    let svg = geodex::plot::variogram_plot(
        &cloud_points(&cloud),
        &bin_points(&binned),
        Some((&fit.model, binned.h_max)),
        &format!("Fitted {} variogram", fit.model.family.name()),
    );
    std::fs::write(args.out.join("fit.svg"), svg)?;

    match failure {
        Some(err) => Err(err),
        None => {
            println!(
                "fit: {} sill={:.6} range={:.6} nugget={:.6} loss={:.6e}{}",
                fit.model.family.name(),
                fit.model.sill,
                fit.model.range,
                fit.model.nugget,
                fit.loss,
                if fit.flat_cloud { " (flat cloud)" } else { "" }
            );
            Ok(())
        }
    }
}

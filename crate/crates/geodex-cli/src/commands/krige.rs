//! `krige` subcommand: GP prediction onto a grid or a point file.

use std::io::Write;
use std::path::PathBuf;

use nalgebra::DMatrix;

use geodex::regression::{gp_predict, optimize_hyperparams, KernelParams, MeanFunction};

use crate::config::{resolve_opt, RunConfig};
use crate::csvio::{self, fmt_f64};
use crate::error::{CliError, CliResult};

use super::ensure_out_dir;

pub struct KrigeArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub predict_grid: Option<String>,
    pub test: Option<PathBuf>,
    pub sigma_f2: Option<f64>,
    pub length_scale: Option<f64>,
    pub noise: Option<f64>,
    pub optimize: bool,
    pub mean: Option<String>,
}

/// Grid spec `X0:X1:NX,Y0:Y1:NY`.
struct GridSpec {
    x0: f64,
    x1: f64,
    nx: usize,
    y0: f64,
    y1: f64,
    ny: usize,
}

fn parse_grid(spec: &str) -> CliResult<GridSpec> {
    let bad = || CliError::Validation(format!("grid spec '{spec}' must be X0:X1:NX,Y0:Y1:NY"));
    let (xs, ys) = spec.split_once(',').ok_or_else(bad)?;
    let parse_axis = |s: &str| -> CliResult<(f64, f64, usize)> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if !(b > a) || n < 2 {
            return Err(CliError::Validation(format!(
                "grid axis '{s}' needs max > min and at least 2 points"
            )));
        }
        Ok((a, b, n))
    };
    let (x0, x1, nx) = parse_axis(xs)?;
    let (y0, y1, ny) = parse_axis(ys)?;
    Ok(GridSpec { x0, x1, nx, y0, y1, ny })
}

impl GridSpec {
    fn points(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nx * self.ny, 2);
        let dx = (self.x1 - self.x0) / (self.nx - 1) as f64;
        let dy = (self.y1 - self.y0) / (self.ny - 1) as f64;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let r = iy * self.nx + ix;
                m[(r, 0)] = self.x0 + ix as f64 * dx;
                m[(r, 1)] = self.y0 + iy as f64 * dy;
            }
        }
        m
    }
}

pub fn run(cfg: &RunConfig, args: &KrigeArgs) -> CliResult<()> {
    let samples = csvio::read_samples(&args.input)?;
    let train_x = samples.coords().clone();
    let train_z = samples.values().clone();

    // Data-driven defaults: signal = var(z), length-scale = max distance / 4,
    // noise = 5% of var(z).
    let n = samples.len();
    let mean_z = train_z.sum() / n as f64;
    let var_z = if n > 1 {
        train_z.iter().map(|z| (z - mean_z) * (z - mean_z)).sum::<f64>() / (n as f64 - 1.0)
    } else {
        0.0
    };
    let d_max = {
        let dist = samples.distances();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                m = m.max(dist.get(i, j));
            }
        }
        m
    };
    let sigma_f2 = resolve_opt(&args.sigma_f2, cfg, "krige.sigma_f2")?
        .unwrap_or_else(|| if var_z > 0.0 { var_z } else { 1.0 });
    let length_scale = resolve_opt(&args.length_scale, cfg, "krige.length_scale")?
        .unwrap_or_else(|| if d_max > 0.0 { d_max / 4.0 } else { 1.0 });
    let noise = resolve_opt(&args.noise, cfg, "krige.noise")?.unwrap_or(0.05 * var_z);
    let mut params = KernelParams::new(sigma_f2, length_scale, noise)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let optimize = args.optimize || cfg.get::<bool>("krige.optimize")?.unwrap_or(false);
    if optimize {
        params = optimize_hyperparams(&train_x, &train_z, &params)?.params;
    }

    let mean_name = resolve_opt(&args.mean, cfg, "krige.mean")?
        .unwrap_or_else(|| "constant".to_string());
    let mean_fn = match mean_name.as_str() {
        "zero" => MeanFunction::Zero,
        "constant" => MeanFunction::Constant,
        other => {
            return Err(CliError::Validation(format!(
                "unknown mean function '{other}' (expected zero|constant)"
            )))
        }
    };

    ensure_out_dir(&args.out)?;
    let path = args.out.join("predictions.csv");

    match (&args.predict_grid, &args.test) {
        (Some(spec), None) => {
            let grid = parse_grid(spec)?;
            let test_x = grid.points();
            let pred = gp_predict(&train_x, &train_z, &test_x, &params, mean_fn)?;
            let sd = pred.sd();

            let mut out = std::fs::File::create(&path)?;
            writeln!(
                out,
                "# grid xmin={} xmax={} nx={} ymin={} ymax={} ny={} row-major",
                fmt_f64(grid.x0),
                fmt_f64(grid.x1),
                grid.nx,
                fmt_f64(grid.y0),
                fmt_f64(grid.y1),
                grid.ny
            )?;
            writeln!(out, "x,y,mean,sd")?;
            for r in 0..test_x.nrows() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(test_x[(r, 0)]),
                    fmt_f64(test_x[(r, 1)]),
                    fmt_f64(pred.mean()[r]),
                    fmt_f64(sd[r])
                )?;
            }

            let values: Vec<f64> = pred.mean().iter().cloned().collect();
            let dx = (grid.x1 - grid.x0) / (grid.nx - 1) as f64;
            let svg = geodex::plot::heatmap(
                &values,
                grid.nx,
                grid.ny,
                (grid.x0, grid.y0),
                dx,
                "Kriging predictive mean",
            );
            std::fs::write(args.out.join("krige.svg"), svg)?;
            println!("krige: {} grid predictions -> {}", test_x.nrows(), args.out.display());
        }
        (None, Some(test_path)) => {
            let test_x = csvio::read_points(test_path)?;
            if test_x.ncols() != train_x.ncols() {
                return Err(CliError::Validation(format!(
                    "test points have {} coordinates, training has {}",
                    test_x.ncols(),
                    train_x.ncols()
                )));
            }
            let pred = gp_predict(&train_x, &train_z, &test_x, &params, mean_fn)?;
            let sd = pred.sd();

            let mut out = std::fs::File::create(&path)?;
            let header = if test_x.ncols() == 3 { "x,y,alt,mean,sd" } else { "x,y,mean,sd" };
            writeln!(out, "{header}")?;
            for r in 0..test_x.nrows() {
                let mut cells: Vec<String> =
                    (0..test_x.ncols()).map(|c| fmt_f64(test_x[(r, c)])).collect();
                cells.push(fmt_f64(pred.mean()[r]));
                cells.push(fmt_f64(sd[r]));
                writeln!(out, "{}", cells.join(","))?;
            }

            let points: Vec<(f64, f64, f64)> = (0..test_x.nrows())
                .map(|r| (test_x[(r, 0)], test_x[(r, 1)], pred.mean()[r]))
                .collect();
            let svg = geodex::plot::point_map(&points, "Kriging predictions");
            std::fs::write(args.out.join("krige.svg"), svg)?;
            println!("krige: {} point predictions -> {}", test_x.nrows(), args.out.display());
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Validation(
                "use either --predict-grid or --test, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Validation(
                "krige needs --predict-grid or --test".into(),
            ))
        }
    }
    Ok(())
}

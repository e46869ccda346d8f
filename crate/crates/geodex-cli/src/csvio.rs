//! Strict CSV formats of the toolkit.
//!
//! Sample files carry a `lon,lat[,alt]` prefix, then zero or more `x_<name>`
//! covariate columns, then a final `z` column. Cells are decimal numbers,
//! comma-separated, `\n` line endings. Numbers are written with 17
//! significant digits so every f64 round-trips losslessly.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use geodex::sample::SampleSet;
use geodex::variogram::{BinnedVariogram, VariogramCloud, VariogramModel};

use crate::error::{CliError, CliResult};

/// 17-significant-digit serialization (lossless for f64).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_cell(cell: &str, line: usize) -> CliResult<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| CliError::Parse {
        line,
        message: format!("cell '{cell}' is not a decimal number"),
    })?;
    if !v.is_finite() {
        return Err(CliError::Parse { line, message: format!("cell '{cell}' is not finite") });
    }
    Ok(v)
}

/// Parsed sample-file header: coordinate column count and covariate names.
struct SampleHeader {
    coord_cols: usize,
    covariate_names: Vec<String>,
}

fn parse_header(header: &str) -> CliResult<SampleHeader> {
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 3 || cols[0] != "lon" || cols[1] != "lat" {
        return Err(CliError::Parse {
            line: 1,
            message: "header must start with 'lon,lat' and end with 'z'".into(),
        });
    }
    if *cols.last().unwrap() != "z" {
        return Err(CliError::Parse { line: 1, message: "last column must be 'z'".into() });
    }
    let mut idx = 2;
    let coord_cols = if cols.get(2) == Some(&"alt") {
        idx = 3;
        3
    } else {
        2
    };
    let mut covariate_names = Vec::new();
    for col in &cols[idx..cols.len() - 1] {
        match col.strip_prefix("x_") {
            Some(name) if !name.is_empty() => covariate_names.push(name.to_string()),
            _ => {
                return Err(CliError::Parse {
                    line: 1,
                    message: format!("covariate column '{col}' must be named x_<name>"),
                })
            }
        }
    }
    Ok(SampleHeader { coord_cols, covariate_names })
}

/// Read a sample CSV into a [`SampleSet`].
pub fn read_samples(path: &Path) -> CliResult<SampleSet> {
    let content = std::fs::read_to_string(path)?;
    let mut lines = content.lines();
    let header = lines
        .next()
        .ok_or(CliError::Parse { line: 1, message: "empty file".into() })?;
    let header = parse_header(header)?;
    let n_cols = header.coord_cols + header.covariate_names.len() + 1;

    let mut coords = Vec::new();
    let mut covariates = Vec::new();
    let mut values = Vec::new();
    let mut n = 0usize;
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_cols {
            return Err(CliError::Parse {
                line: line_no,
                message: format!("expected {n_cols} cells, found {}", cells.len()),
            });
        }
        for c in 0..header.coord_cols {
            coords.push(parse_cell(cells[c], line_no)?);
        }
        for c in 0..header.covariate_names.len() {
            covariates.push(parse_cell(cells[header.coord_cols + c], line_no)?);
        }
        values.push(parse_cell(cells[n_cols - 1], line_no)?);
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Validation("sample file contains no data rows".into()));
    }
    let coords = DMatrix::from_row_slice(n, header.coord_cols, &coords);
    let covariates = if header.covariate_names.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_row_slice(n, header.covariate_names.len(), &covariates)
    };
    SampleSet::new(coords, covariates, DVector::from_vec(values)).map_err(Into::into)
}

/// Write a sample set as a sample CSV (covariates named x_1, x_2, ...).
pub fn write_samples(path: &Path, samples: &SampleSet) -> CliResult<()> {
    let mut out = std::fs::File::create(path)?;
    let mut header = String::from("lon,lat");
    if samples.coord_dim() == 3 {
        header.push_str(",alt");
    }
    for k in 0..samples.covariate_dim() {
        header.push_str(&format!(",x_{}", k + 1));
    }
    header.push_str(",z");
    writeln!(out, "{header}")?;
    for i in 0..samples.len() {
        let mut row = Vec::with_capacity(samples.coord_dim() + samples.covariate_dim() + 1);
        for c in 0..samples.coord_dim() {
            row.push(fmt_f64(samples.coords()[(i, c)]));
        }
        for c in 0..samples.covariate_dim() {
            row.push(fmt_f64(samples.covariates()[(i, c)]));
        }
        row.push(fmt_f64(samples.values()[i]));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a bare point file (`lon,lat[,alt]` header, no covariates, no z).
pub fn read_points(path: &Path) -> CliResult<DMatrix<f64>> {
    let content = std::fs::read_to_string(path)?;
    let mut lines = content.lines();
    let header =
        lines.next().ok_or(CliError::Parse { line: 1, message: "empty file".into() })?;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    let coord_cols = match cols.as_slice() {
        ["lon", "lat"] => 2,
        ["lon", "lat", "alt"] => 3,
        _ => {
            return Err(CliError::Parse {
                line: 1,
                message: "point file header must be 'lon,lat' or 'lon,lat,alt'".into(),
            })
        }
    };
    let mut data = Vec::new();
    let mut n = 0usize;
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != coord_cols {
            return Err(CliError::Parse {
                line: line_no,
                message: format!("expected {coord_cols} cells, found {}", cells.len()),
            });
        }
        for cell in cells {
            data.push(parse_cell(cell, line_no)?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Validation("point file contains no data rows".into()));
    }
    Ok(DMatrix::from_row_slice(n, coord_cols, &data))
}

pub fn write_cloud(path: &Path, cloud: &VariogramCloud) -> CliResult<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "h,v,i,j")?;
    for p in &cloud.pairs {
        writeln!(out, "{},{},{},{}", fmt_f64(p.h), fmt_f64(p.v), p.i, p.j)?;
    }
    Ok(())
}

pub fn write_binned(path: &Path, binned: &BinnedVariogram) -> CliResult<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "h_center,gamma,count")?;
    for b in &binned.bins {
        writeln!(out, "{},{},{}", fmt_f64(b.h_center), fmt_f64(b.gamma_mean), b.count)?;
    }
    Ok(())
}

pub fn write_model_txt(
    path: &Path,
    model: &VariogramModel,
    loss: f64,
    iterations: usize,
    converged: bool,
    flat_cloud: bool,
) -> CliResult<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "family={}", model.family.name())?;
    writeln!(out, "sill={}", fmt_f64(model.sill))?;
    writeln!(out, "range={}", fmt_f64(model.range))?;
    writeln!(out, "nugget={}", fmt_f64(model.nugget))?;
    writeln!(out, "loss={}", fmt_f64(loss))?;
    writeln!(out, "iterations={iterations}")?;
    writeln!(out, "converged={converged}")?;
    if flat_cloud {
        writeln!(out, "warning=flat_cloud")?;
    }
    Ok(())
}

pub fn write_phi_csv(path: &Path, model: &VariogramModel, loss: f64) -> CliResult<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "family,sill,range,nugget,loss")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        model.family.name(),
        fmt_f64(model.sill),
        fmt_f64(model.range),
        fmt_f64(model.nugget),
        fmt_f64(loss)
    )?;
    Ok(())
}

pub fn write_zprime(path: &Path, z_prime: &DMatrix<f64>) -> CliResult<()> {
    let mut out = std::fs::File::create(path)?;
    let header: Vec<String> = (1..=z_prime.ncols()).map(|c| format!("z_prime_{c}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..z_prime.nrows() {
        let row: Vec<String> = (0..z_prime.ncols()).map(|c| fmt_f64(z_prime[(i, c)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[(usize, f64)]) -> CliResult<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "iteration,objective")?;
    for (i, v) in trace {
        writeln!(out, "{i},{}", fmt_f64(*v))?;
    }
    Ok(())
}

pub fn write_labels(path: &Path, labels: &[bool]) -> CliResult<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "index,label")?;
    for (i, &b) in labels.iter().enumerate() {
        writeln!(out, "{i},{}", if b { 1 } else { 0 })?;
    }
    Ok(())
}

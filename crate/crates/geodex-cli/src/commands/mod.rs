//! Subcommand implementations.

pub mod equiv;
pub mod expand;
pub mod krige;
pub mod repro;
pub mod synth;
pub mod variogram;

use std::path::Path;

use crate::error::CliResult;

/// Create the output directory if needed.
pub fn ensure_out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

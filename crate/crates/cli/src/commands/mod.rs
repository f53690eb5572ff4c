//! Subcommand implementations.

pub mod build_ref;
pub mod cluster;
pub mod compare_stats;
pub mod downsample;
pub mod eval;
pub mod simulate;

use std::path::Path;

use anyhow::{bail, Context};

use scbench_core::matrix::{read_matrix, AnyMatrix, MatrixFormat};

/// Read a matrix, inferring the format from the extension unless one is
/// given explicitly.
pub fn read_matrix_auto(path: &Path, format: Option<MatrixFormat>) -> anyhow::Result<AnyMatrix> {
    if !path.is_file() {
        bail!("input file {} does not exist", path.display());
    }
    let format = resolve_format(path, format)?;
    read_matrix(path, format).with_context(|| format!("reading {}", path.display()))
}

/// Resolve an optional explicit format against the path extension.
pub fn resolve_format(path: &Path, format: Option<MatrixFormat>) -> anyhow::Result<MatrixFormat> {
    match format.or_else(|| MatrixFormat::from_path(path)) {
        Some(f) => Ok(f),
        None => bail!(
            "cannot infer matrix format of {} (use .mtx/.csv or pass --format)",
            path.display()
        ),
    }
}

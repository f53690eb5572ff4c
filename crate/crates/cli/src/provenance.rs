//! Provenance records: every subcommand writes a JSON record sufficient to
//! re-run it exactly (inputs, seeds, parameters, tool version).

use std::path::Path;

use anyhow::Context;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Envelope wrapping a subcommand's parameter echo and result summary.
#[derive(Debug, Serialize)]
pub struct Record<P: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub subcommand: &'static str,
    /// Full argument echo; re-running with these reproduces the outputs.
    pub params: P,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<R>,
}

impl<P: Serialize, R: Serialize> Record<P, R> {
    pub fn new(subcommand: &'static str, params: P, results: Option<R>) -> Self {
        Record {
            schema_version: SCHEMA_VERSION,
            tool: "scbench",
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand,
            params,
            results,
        }
    }
}

/// Serialize any record as pretty JSON (struct declaration order is the
/// stable key order).
pub fn write_json<S: Serialize>(value: &S, path: &Path) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

//! Evaluation manifest: which files to score against which reference.
//!
//! Relative paths are resolved against the manifest's directory so a
//! results folder can be self-contained.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use scbench_core::matrix::Preprocess;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationManifest {
    /// The reference ("true expression") matrix.
    pub reference: PathBuf,
    /// The downsampled observed matrix; always evaluated as the baseline
    /// method `observed`.
    pub observed: PathBuf,
    #[serde(default)]
    pub methods: Vec<MethodEntry>,
    /// Reference classification used for ARI/Jaccard, if available.
    #[serde(default)]
    pub reference_labels: Option<PathBuf>,
    /// Cluster labels obtained on the observed matrix.
    #[serde(default)]
    pub observed_labels: Option<PathBuf>,
    /// Preprocessing applied before correlation metrics.
    #[serde(default)]
    pub preprocess: Preprocess,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub name: String,
    /// The method's recovered/imputed matrix.
    pub path: PathBuf,
    /// Cluster labels obtained on the method's output.
    #[serde(default)]
    pub labels: Option<PathBuf>,
}

impl EvaluationManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let mut manifest: EvaluationManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        manifest.resolve(base);
        manifest.validate()?;
        Ok(manifest)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        fix(&mut self.reference);
        fix(&mut self.observed);
        for m in &mut self.methods {
            fix(&mut m.path);
            if let Some(l) = &mut m.labels {
                fix(l);
            }
        }
        if let Some(l) = &mut self.reference_labels {
            fix(l);
        }
        if let Some(l) = &mut self.observed_labels {
            fix(l);
        }
    }

    fn validate(&self) -> anyhow::Result<()> {
        let mut names = HashSet::new();
        for m in &self.methods {
            if m.name == "observed" {
                bail!("method name \"observed\" is reserved for the baseline");
            }
            if !names.insert(m.name.as_str()) {
                bail!("duplicate method name {:?}", m.name);
            }
            if m.name.is_empty()
                || !m
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            {
                bail!(
                    "method name {:?} must be nonempty and use only [A-Za-z0-9._-] \
                     (it becomes a file name)",
                    m.name
                );
            }
        }
        let mut required: Vec<&PathBuf> = vec![&self.reference, &self.observed];
        required.extend(self.methods.iter().map(|m| &m.path));
        required.extend(self.methods.iter().filter_map(|m| m.labels.as_ref()));
        required.extend(self.reference_labels.iter());
        required.extend(self.observed_labels.iter());
        for p in required {
            if !p.is_file() {
                bail!("manifest references missing file {}", p.display());
            }
        }
        Ok(())
    }
}

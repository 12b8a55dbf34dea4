use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n: u32,
    pub ell: f64,
    pub q: f64,
}

/// Settings read with `--config`; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub model: Option<ModelSpec>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    /// Tolerance for kernel evaluation and quadrature.
    pub tol: Option<f64>,
    /// Radius grid `start:stop:step` for `eval`.
    pub grid: Option<String>,
    /// Spectral grid `start:stop:step` for `transform`.
    pub lambdas: Option<String>,
    pub lambda: Option<f64>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: CliConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for g in [&self.grid, &self.lambdas].into_iter().flatten() {
            GridSpec::parse(g)?;
        }
        if let Some(tol) = self.tol {
            anyhow::ensure!(
                tol > 0.0 && tol.is_finite(),
                "config tol must be positive, got {tol}"
            );
        }
        Ok(())
    }
}

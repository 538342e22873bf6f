//! Experiment configuration (TOML).
//!
//! ```toml
//! function = "oscillator"      # or: dataset = "pool.csv"
//! models = ["ok", "hrk"]
//! n_ini = 10                   # default 10·p
//! budget = 35                  # final design size
//! replicates = 10
//! seed = 42
//! out_dir = "results"
//! test_size = 2000             # default 2000 for p ≤ 2, else 1000·p
//! warm_start = true
//! initial_design = "lhd"       # or "maximin"
//! maximin_pool = 2000
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hrk_core::active::InitialDesign;
use hrk_core::functions::standard_suite;
use hrk_core::{ModelKind, TestFunction};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    #[default]
    Lhd,
    Maximin,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function: Option<String>,
    pub dataset: Option<PathBuf>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    pub n_ini: Option<usize>,
    pub budget: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub test_size: Option<usize>,
    #[serde(default = "default_true")]
    pub warm_start: bool,
    #[serde(default)]
    pub initial_design: InitialKind,
    #[serde(default = "default_pool")]
    pub maximin_pool: usize,
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Ok, ModelKind::Rk, ModelKind::Hrk]
}

fn default_replicates() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_pool() -> usize {
    2000
}

/// What the experiment runs on.
#[derive(Debug, Clone)]
pub enum Source {
    Function(TestFunction),
    Dataset(PathBuf),
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))
    }

    /// Reads a config file; a relative `dataset` path is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(d) = &cfg.dataset {
            if d.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.dataset = Some(base.join(d));
            }
        }
        Ok(cfg)
    }

    /// Checks everything that can be checked before any run starts.
    pub fn source(&self) -> Result<Source> {
        let src = match (&self.function, &self.dataset) {
            (Some(id), None) => Source::Function(standard_suite(id).map_err(|e| anyhow!("invalid config: {e}"))?),
            (None, Some(path)) => {
                if !path.is_file() {
                    bail!("invalid config: dataset {} does not exist", path.display());
                }
                Source::Dataset(path.clone())
            }
            (Some(_), Some(_)) => bail!("invalid config: set either 'function' or 'dataset', not both"),
            (None, None) => bail!("invalid config: one of 'function' or 'dataset' is required"),
        };
        if self.replicates < 1 {
            bail!("invalid config: replicates must be at least 1");
        }
        if self.models.is_empty() {
            bail!("invalid config: 'models' is empty");
        }
        Ok(src)
    }

    pub fn n_ini_for(&self, p: usize) -> usize {
        self.n_ini.unwrap_or(10 * p)
    }

    pub fn initial(&self) -> InitialDesign {
        match self.initial_design {
            InitialKind::Lhd => InitialDesign::Lhd,
            InitialKind::Maximin => InitialDesign::Maximin {
                pool: self.maximin_pool,
            },
        }
    }
}

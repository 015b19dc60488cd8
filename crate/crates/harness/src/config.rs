//! Experiment configuration, read from TOML.
//!
//! ```toml
//! source_size = 500
//! skew = [10.0, 50.0, 100.0]
//! k = [20, 50]
//! epsilon = [0.2, 0.4]
//! nu = [0.05, 0.09]
//! delta = 0.04
//! r = 1
//! algorithms = ["protobandit", "spot_greedy"]
//! strategies = ["aba"]
//! runs_per_cell = 10
//! base_seed = 7
//! accounting_mode = "cached"
//! output = "results/run"
//!
//! [dataset.synthetic]
//! components = 10
//! points = 6000
//! dims = 10
//! seed = 1
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use protoselect::bandit::BaiStrategy;
use protoselect::eval::{AccountingMode, Algorithm};
use protoselect::protobandit::ProtoBanditConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub components: usize,
    pub points: usize,
    pub dims: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Csv,
    Idx,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSpec {
    pub format: FileFormat,
    pub path: PathBuf,
    /// IDX label file.
    #[serde(default)]
    pub labels_path: Option<PathBuf>,
    /// Whether a CSV file ends with an integer label column.
    #[serde(default)]
    pub has_labels: bool,
}

/// Either a synthetic mixture, or a source file with an optional separate
/// target file. Without a target file the source size is sampled from the
/// pool and the targets are drawn from the rest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub source: Option<FileSpec>,
    #[serde(default)]
    pub target: Option<FileSpec>,
}

fn default_r() -> usize {
    1
}

fn default_runs() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_swap_passes() -> usize {
    100
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::ProtoBandit]
}

fn default_strategies() -> Vec<BaiStrategy> {
    vec![BaiStrategy::Aba]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub source_size: usize,
    /// Skew percentages θ; empty uses the whole target pool.
    #[serde(default)]
    pub skew: Vec<f64>,
    /// Label concentrated by the skew; defaults to the least populated one.
    #[serde(default)]
    pub skew_label: Option<i64>,
    pub k: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub nu: Vec<f64>,
    pub delta: f64,
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<BaiStrategy>,
    #[serde(default = "default_runs")]
    pub runs_per_cell: usize,
    /// Runs per cell for the exact algorithms; defaults to `runs_per_cell`.
    #[serde(default)]
    pub exact_runs_per_cell: Option<usize>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub accounting_mode: AccountingMode,
    /// Output prefix: `<output>.csv` and `<output>.jsonl`.
    pub output: PathBuf,
    /// SWAP exchanges per pass and pass limit for `pam`.
    #[serde(default = "default_r")]
    pub swap_l: usize,
    #[serde(default = "default_swap_passes")]
    pub max_swap_passes: usize,
    /// Pull budget per iteration for the KL-LUCB strategies.
    #[serde(default)]
    pub max_pulls: Option<u64>,
    /// Write zero wall times so repeated runs give byte-identical files.
    #[serde(default = "default_true")]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config =
            Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Makes relative paths relative to the config file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for spec in [&mut self.dataset.source, &mut self.dataset.target]
            .into_iter()
            .flatten()
        {
            fix(&mut spec.path);
            if let Some(l) = spec.labels_path.as_mut() {
                fix(l);
            }
        }
        fix(&mut self.output);
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        match (&d.synthetic, &d.source) {
            (Some(_), Some(_)) => bail!("dataset: give either `synthetic` or `source`, not both"),
            (None, None) => bail!("dataset: one of `synthetic` or `source` is required"),
            (Some(_), None) if d.target.is_some() => {
                bail!("dataset: `target` needs a `source` file")
            }
            _ => {}
        }
        ensure!(self.source_size >= 1, "source_size must be at least 1");
        ensure!(!self.k.is_empty(), "k grid is empty");
        ensure!(!self.algorithms.is_empty(), "no algorithms selected");
        ensure!(self.runs_per_cell >= 1, "runs_per_cell must be at least 1");
        ensure!(
            self.exact_runs_per_cell != Some(0),
            "exact_runs_per_cell must be at least 1"
        );
        for &k in &self.k {
            ensure!(
                k >= 1 && k <= self.source_size,
                "k = {k} outside [1, source_size]"
            );
            ensure!(
                self.r >= 1 && self.r <= k,
                "r = {} outside [1, k = {k}]",
                self.r
            );
            ensure!(
                self.swap_l >= 1 && self.swap_l <= k,
                "swap_l = {} outside [1, k = {k}]",
                self.swap_l
            );
        }
        for &theta in &self.skew {
            ensure!(
                theta > 0.0 && theta <= 100.0,
                "skew {theta} outside (0, 100]"
            );
        }
        if self.algorithms.contains(&Algorithm::ProtoBandit) {
            ensure!(!self.strategies.is_empty(), "no BAI strategies selected");
            ensure!(
                !self.epsilon.is_empty() && !self.nu.is_empty(),
                "epsilon and nu grids must be non-empty"
            );
            for &eps in &self.epsilon {
                for &nu in &self.nu {
                    ProtoBanditConfig::new(eps, nu, self.delta, BaiStrategy::Aba, 0)
                        .with_context(|| format!("grid point epsilon = {eps}, nu = {nu}"))?;
                }
            }
        }
        Ok(())
    }

    pub fn exact_runs(&self) -> usize {
        self.exact_runs_per_cell.unwrap_or(self.runs_per_cell)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output.with_extension("csv")
    }

    pub fn jsonl_path(&self) -> PathBuf {
        self.output.with_extension("jsonl")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        source_size = 50
        k = [5]
        epsilon = [0.2]
        nu = [0.05]
        delta = 0.04
        output = "out/run"

        [dataset.synthetic]
        components = 3
        points = 200
        dims = 2
        seed = 1
    "#;

    #[test]
    fn defaults_apply() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.runs_per_cell, 10);
        assert_eq!(c.r, 1);
        assert_eq!(c.algorithms, vec![Algorithm::ProtoBandit]);
        assert_eq!(c.strategies, vec![BaiStrategy::Aba]);
        assert_eq!(c.accounting_mode, AccountingMode::Cached);
        assert!(c.record_wall_time);
        assert_eq!(c.csv_path(), PathBuf::from("out/run.csv"));
    }

    #[test]
    fn rejects_out_of_range_grid() {
        let bad_nu = MINIMAL.replace("nu = [0.05]", "nu = [0.5]");
        assert!(ExperimentConfig::parse(&bad_nu).is_err());
        let bad_delta = MINIMAL.replace("delta = 0.04", "delta = 0.2");
        assert!(ExperimentConfig::parse(&bad_delta).is_err());
        let bad_k = MINIMAL.replace("k = [5]", "k = [51]");
        assert!(ExperimentConfig::parse(&bad_k).is_err());
        let zero_runs = format!("runs_per_cell = 0\n{MINIMAL}");
        assert!(ExperimentConfig::parse(&zero_runs).is_err());
        let unknown = format!("colour = 1\n{MINIMAL}");
        assert!(ExperimentConfig::parse(&unknown).is_err());
    }

    #[test]
    fn names_parse() {
        let text = format!(
            "algorithms = [\"pam\", \"spot_m\"]\nstrategies = [\"kl_lucb_early\"]\naccounting_mode = \"strict\"\n{MINIMAL}"
        );
        let c = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.algorithms, vec![Algorithm::Pam, Algorithm::SpotM]);
        assert_eq!(c.strategies, vec![BaiStrategy::KlLucbEarly]);
        assert_eq!(c.accounting_mode, AccountingMode::Strict);
    }
}

//! `train` configuration file (TOML). Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use m2no_core::m2no::{ModelConfig, TrainConfig};
use m2no_core::pdegrid::DatasetKind;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    #[serde(default)]
    pub seed: u64,
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub optim: OptimSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "one")]
    pub dim: usize,
    pub n: usize,
    pub train: usize,
    pub valid: usize,
}

fn default_kind() -> String {
    "poisson_rhs".into()
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub k: usize,
    pub c: usize,
    pub layers: usize,
    pub depth: usize,
    /// One count per level, or a single count used on every level.
    pub steps: Vec<usize>,
    pub detail_maps: bool,
    pub hscale: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelConfig::default();
        Self { k: d.k, c: d.c, layers: d.layers, depth: d.depth, steps: vec![1], detail_maps: d.detail_maps, hscale: d.hscale }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimSection {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub step_size: usize,
    pub gamma: f64,
}

impl Default for OptimSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self { epochs: d.epochs, batch: d.batch, lr: d.lr, step_size: d.step_size, gamma: d.gamma }
    }
}

impl TrainFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn kind(&self) -> CliResult<DatasetKind> {
        Ok(self.data.kind.parse()?)
    }

    pub fn model_config(&self) -> CliResult<ModelConfig> {
        let m = &self.model;
        let steps = match m.steps.as_slice() {
            [s] => vec![*s; m.depth],
            s if s.len() == m.depth => s.to_vec(),
            s => return Err(CliError::config(format!("model.steps has {} entries for depth {}", s.len(), m.depth))),
        };
        let cfg = ModelConfig {
            dim: self.data.dim,
            k: m.k,
            c: m.c,
            layers: m.layers,
            depth: m.depth,
            steps,
            detail_maps: m.detail_maps,
            hscale: m.hscale,
            resolution: self.data.n,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig {
        let o = &self.optim;
        TrainConfig { epochs: o.epochs, batch: o.batch, lr: o.lr, step_size: o.step_size, gamma: o.gamma, seed: self.seed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = TrainFile::parse("[data]\nn = 64\ntrain = 4\nvalid = 2\nepochz = 3\n").unwrap_err();
        assert_eq!(err.kind, crate::error::Kind::Config);
        assert!(err.message.contains("epochz"));
    }

    #[test]
    fn single_step_count_broadcasts() {
        let f = TrainFile::parse("[data]\nn = 64\ntrain = 4\nvalid = 2\n[model]\nk = 2\ndepth = 3\nsteps = [2]\n").unwrap();
        assert_eq!(f.model_config().unwrap().steps, vec![2, 2, 2]);
    }
}

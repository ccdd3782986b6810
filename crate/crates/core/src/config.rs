//! Run configuration shared by every command, loadable from TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adapter::TrainHyper;
use crate::error::{Error, Result};
use crate::eval::KGrid;
use crate::pipeline::PipelineConfig;
use crate::providers::ProviderConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    /// Store, perception cache, indexes and checkpoints live here.
    pub work_dir: PathBuf,
    pub reports: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig { corpus: None, work_dir: "work".into(), reports: "reports".into() }
    }
}

impl PathsConfig {
    pub fn store(&self) -> PathBuf {
        self.work_dir.join("store.jsonl")
    }

    pub fn perception_cache(&self) -> PathBuf {
        self.work_dir.join("perception.jsonl")
    }

    pub fn dense_index(&self, kind: crate::corpus::EntityKind) -> PathBuf {
        self.work_dir.join(format!("dense-{kind}.idx"))
    }

    pub fn bm25_docs(&self, kind: crate::corpus::EntityKind) -> PathBuf {
        self.work_dir.join(format!("bm25-{kind}.jsonl"))
    }

    pub fn adapter(&self) -> PathBuf {
        self.work_dir.join("adapter.ckpt")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub provider: ProviderConfig,
    pub pipeline: PipelineConfig,
    pub training: TrainHyper,
    pub eval: KGrid,
    pub seed: u64,
    /// Worker threads; all cores when unset.
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.provider.validate()?;
        self.pipeline.validate()?;
        self.eval.validate()?;
        if self.jobs == Some(0) {
            return Err(Error::InvalidArgument("jobs must be >= 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form. The auth token is never
    /// serialized and so never affects the fingerprint.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

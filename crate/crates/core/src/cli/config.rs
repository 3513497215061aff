use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gtrender::{CameraSpec, Channel};
use crate::learning::CdConfig;
use crate::sampler::SamplerConfig;
use crate::scene::AttributeRanges;

fn one() -> usize {
    1
}

fn all_channels() -> Vec<Channel> {
    Channel::ALL.to_vec()
}

/// Settings shared by every subcommand. Relative paths are resolved against
/// the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub skeleton: Option<PathBuf>,
    pub scenes: Option<PathBuf>,
    /// Learned grammar bundle; when set, `pipeline` skips learning.
    pub grammar: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub learning: CdConfig,
    pub sampling: SamplerConfig,
    pub attributes: AttributeRanges,
    /// Fixed cameras; when empty each layout's sampled cameras are used.
    pub cameras: Vec<CameraSpec>,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "all_channels")]
    pub channels: Vec<Channel>,
    /// Also export box-proxy OBJ files.
    pub obj: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            skeleton: None,
            scenes: None,
            grammar: None,
            catalog: None,
            out: None,
            learning: CdConfig::default(),
            sampling: SamplerConfig::default(),
            attributes: AttributeRanges::default(),
            cameras: Vec::new(),
            n: 1,
            channels: all_channels(),
            obj: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c: PipelineConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut c.skeleton, &mut c.scenes, &mut c.grammar, &mut c.catalog, &mut c.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("n must be >= 1".into()));
        }
        self.learning.validate()?;
        self.sampling.validate()?;
        self.attributes.validate()?;
        for c in &self.cameras {
            c.validate()?;
        }
        Ok(())
    }
}

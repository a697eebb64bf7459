use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attn::{RuleConfig, TreeConfig, DEFAULT_PERCENTILES, DEFAULT_THRESHOLDS};
use crate::baselines::TaggerConfig;
use crate::corpus::Resources;
use crate::crf::CrfConfig;
use crate::error::{Error, Result};
use crate::hash::fnv1a;

/// Environment variable consulted for the seed when neither the command
/// line nor the config file gives one.
pub const SEED_ENV: &str = "TOXSPANS_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub folds: usize,
    pub limit: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: None,
            folds: 5,
            limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttnSection {
    #[serde(flatten)]
    pub rule: RuleConfig,
    pub thresholds: Vec<f64>,
    pub percentiles: Vec<f64>,
}

impl Default for AttnSection {
    fn default() -> Self {
        AttnSection {
            rule: RuleConfig::default(),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            percentiles: DEFAULT_PERCENTILES.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub hate_words: Option<PathBuf>,
    pub sentiment: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

impl ResourcePaths {
    pub fn load(&self) -> Result<Resources> {
        Resources::load(
            self.hate_words.as_deref(),
            self.sentiment.as_deref(),
            self.stopwords.as_deref(),
        )
    }
}

/// Settings file: a TOML document with one table per module. Missing keys
/// keep their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub resources: ResourcePaths,
    pub baseline: TaggerConfig,
    pub attn: AttnSection,
    pub tree: TreeConfig,
    pub crf: CrfConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_col(text, s.start))
                .unwrap_or((0, 0));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}

fn line_col(text: &str, byte: usize) -> (usize, usize) {
    let before = &text[..byte.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Stable fingerprint of a configuration.
pub fn config_hash(cfg: &RunConfig) -> String {
    format!("{:016x}", fnv1a(cfg.to_toml().as_bytes()))
}

/// Command line first, then the config file, then [`SEED_ENV`]. Stochastic
/// steps refuse to run without a seed.
pub fn resolve_seed(cli: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = cli.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Validation(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
        }),
        Err(_) => Err(Error::Validation(format!(
            "no seed given; pass --seed, set [run] seed, or set {SEED_ENV}"
        ))),
    }
}

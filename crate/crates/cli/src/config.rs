//! The pipeline configuration file. Every field has a default, so an empty
//! file (or none at all) is valid; command-line flags override it.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use harassment_core::active_learning::ALConfig;
use harassment_core::classifier::{RecallTargets, TrainConfig};
use harassment_core::corpus::CorpusConfig;
use harassment_core::report::{FLAG_THRESHOLD, TABLE_THRESHOLD};
use harassment_service::AnnotatorToken;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seeds sampling, fold assignment and training shuffles.
    pub rng_seed: u64,
    pub paths: Paths,
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub targets: RecallTargets,
    pub active_learning: ALConfig,
    pub thresholds: FlagThresholds,
    pub service: ServiceSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            rng_seed: 42,
            paths: Paths::default(),
            corpus: CorpusConfig::default(),
            train: TrainConfig::default(),
            targets: RecallTargets::default(),
            active_learning: ALConfig::default(),
            thresholds: FlagThresholds::default(),
            service: ServiceSection::default(),
        }
    }
}

/// Artifact locations. Relative paths resolve against the directory holding
/// the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub subtypes: Option<PathBuf>,
    pub emotion_lexicon: Option<PathBuf>,
    pub gender_terms: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub apps: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub cross_validation: Option<PathBuf>,
    pub al_state: Option<PathBuf>,
    pub queue: Option<PathBuf>,
    pub audit: Option<PathBuf>,
    pub batch: Option<PathBuf>,
    pub decisions: Option<PathBuf>,
    pub emotions: Option<PathBuf>,
    pub gender: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.lexicon,
            &mut self.subtypes,
            &mut self.emotion_lexicon,
            &mut self.gender_terms,
            &mut self.graph,
            &mut self.apps,
            &mut self.seeds,
            &mut self.labels,
            &mut self.model,
            &mut self.cross_validation,
            &mut self.al_state,
            &mut self.queue,
            &mut self.audit,
            &mut self.batch,
            &mut self.decisions,
            &mut self.emotions,
            &mut self.gender,
            &mut self.summary,
            &mut self.table,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlagThresholds {
    /// Apps at or above this many harassment reviews get a notification bundle.
    pub flag: usize,
    /// Apps at or above this many appear in the report table.
    pub table: usize,
}

impl Default for FlagThresholds {
    fn default() -> Self {
        Self {
            flag: FLAG_THRESHOLD,
            table: TABLE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: SocketAddr,
    pub annotators: Vec<AnnotatorToken>,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            annotators: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(source: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(source).map_err(|e| CliError::Domain(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&source)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        Ok(cfg)
    }

    /// Training settings with the pipeline-wide seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            rng_seed: self.rng_seed,
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.corpus.validate()?;
        self.train_config().validate()?;
        for (name, t) in [("menacing", self.targets.menacing), ("profiling", self.targets.profiling)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(CliError::Domain(format!("config: {name} recall target {t} outside (0, 1]")));
            }
        }
        if self.active_learning.batch_size == 0 {
            return Err(CliError::Domain("config: batch_size must be at least 1".into()));
        }
        if self.active_learning.rounds_total == 0 {
            return Err(CliError::Domain("config: rounds_total must be at least 1".into()));
        }
        Ok(())
    }
}

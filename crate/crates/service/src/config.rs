use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorToken {
    pub id: String,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Active-learning state written by `al-select` / `al-advance`.
    pub state: PathBuf,
    /// Queue snapshot; created on first start.
    pub queue: PathBuf,
    /// Append-only JSONL audit log.
    pub audit: PathBuf,
    /// Harassment keyword lexicon; the bundled one when absent.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Corpus summary written by `report`. Without it `/reports/apps`
    /// serves the bundled per-app table.
    #[serde(default)]
    pub summary: Option<PathBuf>,
    #[serde(default)]
    pub annotators: Vec<AnnotatorToken>,
}

impl ServiceConfig {
    pub fn from_toml(source: &str) -> Result<Self, ServiceError> {
        toml::from_str(source).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path).map_err(|e| ServiceError::Io(path.display().to_string(), e))?;
        Self::from_toml(&source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml() {
        let cfg = ServiceConfig::from_toml(
            r#"
            bind = "127.0.0.1:8080"
            state = "al.json"
            queue = "queue.json"
            audit = "audit.jsonl"

            [[annotators]]
            id = "alice"
            token = "t1"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.annotators.len(), 1);
        assert_eq!(cfg.summary, None);
        assert!(ServiceConfig::from_toml("bind = 3").is_err());
    }
}

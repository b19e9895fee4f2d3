//! File helpers shared by the commands. Outputs are written to a temporary
//! sibling and renamed, so a failed run never leaves a half-written artifact.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use harassment_core::classifier::{Decision, LabelSet, LabeledExample};
use harassment_core::corpus::{Corpus, Review};
use harassment_core::lexicon::KeywordLexicon;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One line of a labeled-reviews file: the review plus both head labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledReview {
    #[serde(flatten)]
    pub review: Review,
    pub menacing: bool,
    pub profiling: bool,
}

impl LabeledReview {
    pub fn labels(&self) -> LabelSet {
        LabelSet::new(self.menacing, self.profiling)
    }

    pub fn into_pair(self) -> (Review, LabelSet) {
        let labels = self.labels();
        (self.review, labels)
    }

    pub fn example(&self) -> LabeledExample {
        LabeledExample::from((self.review.clone(), self.labels()))
    }
}

/// The flag value, else the config value, else a usage error naming both.
pub fn require(flag: Option<PathBuf>, config: &Option<PathBuf>, flag_name: &str, key: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| CliError::Usage(format!("missing {flag_name}: pass it or set paths.{key} in the config")))
}

pub fn read_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn ensure_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{}: no such file", path.display())))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let source = read_string(path)?;
    serde_json::from_str(&source).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| CliError::Domain(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(item);
    }
    Ok(out)
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        None => Ok(()),
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(value).map_err(CliError::domain)?;
    json.push('\n');
    write_bytes(path, json.as_bytes())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(CliError::domain)?);
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    ensure_file(path)?;
    Ok(Corpus::load(path)?)
}

pub fn load_decisions(path: &Path) -> Result<Vec<Decision>, CliError> {
    ensure_file(path)?;
    read_jsonl(path)
}

pub fn load_lexicon(path: Option<&Path>) -> Result<KeywordLexicon, CliError> {
    match path {
        None => Ok(KeywordLexicon::default_harassment()),
        Some(p) => {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(KeywordLexicon::parse(name, &read_string(p)?)?)
        }
    }
}

use std::io;
use std::path::Path;

use harassment_core::active_learning::ActiveLearningError;
use harassment_core::classifier::ClassifierError;
use harassment_core::corpus::CorpusError;
use harassment_core::emotion::EmotionError;
use harassment_core::expansion::ExpansionError;
use harassment_core::external::ExternalError;
use harassment_core::lexicon::LexiconError;
use harassment_core::report::ReportError;
use harassment_core::summary::SummaryError;
use harassment_service::ServiceError;
use thiserror::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DOMAIN: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn domain(e: impl std::fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::domain(other),
        }
    }
}

impl From<ExternalError> for CliError {
    fn from(e: ExternalError) -> Self {
        match e {
            ExternalError::Timeout | ExternalError::Network(_) => CliError::Io(e.to_string()),
            other => CliError::domain(other),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::External(inner) => inner.into(),
            other => CliError::domain(other),
        }
    }
}

impl From<ActiveLearningError> for CliError {
    fn from(e: ActiveLearningError) -> Self {
        match e {
            ActiveLearningError::Audit(_) => CliError::Io(e.to_string()),
            ActiveLearningError::Classifier(inner) => inner.into(),
            other => CliError::domain(other),
        }
    }
}

impl From<EmotionError> for CliError {
    fn from(e: EmotionError) -> Self {
        match e {
            EmotionError::External(inner) => inner.into(),
            other => CliError::domain(other),
        }
    }
}

impl From<SummaryError> for CliError {
    fn from(e: SummaryError) -> Self {
        match e {
            SummaryError::Emotion(inner) => inner.into(),
            other => CliError::domain(other),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Io(..) => CliError::Io(e.to_string()),
            ServiceError::ActiveLearning(inner) => inner.into(),
            other => CliError::domain(other),
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::domain(e)
            }
        })*
    };
}

domain_from!(ExpansionError, LexiconError, ReportError);

//! Two-head (Menacing / Profiling) multilabel classifier.
//!
//! The built-in backend is a hashed n-gram logistic model; [`Scorer`] lets an
//! external inference service stand in for it (see [`crate::external`]).

mod cv;
mod decision;
mod features;
mod labels;
mod metrics;
mod model;
mod thresholds;

use thiserror::Error;

pub use cv::{cross_validate, stratified_kfold, CrossValidation, FoldResult};
pub use decision::{classify_corpus, classify_reviews, Decision, CLASSIFY_BATCH};
pub use features::{featurize, hash_feature, hashed_counts, ngrams, SparseVector};
pub use labels::{HarassmentMix, Head, JointClass, LabelSet, LabeledExample, Prediction};
pub use metrics::{evaluate, HeadMetrics, Metrics};
pub use model::{
    predict, sigmoid, train, HeadWeights, LinearModel, LogisticObjective, Scorer, TrainConfig,
};
pub use thresholds::{
    largest_threshold_for_recall, select_thresholds, select_thresholds_from_scores, RecallTargets,
    ThresholdSelection, Thresholds,
};

use crate::external::ExternalError;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("degenerate head: {0}")]
    DegenerateHead(Head),
    #[error("no positive examples for head {0}")]
    NoPositives(Head),
    #[error("cannot split {examples} examples into {folds} folds")]
    TooFewExamples { folds: usize, examples: usize },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<ClassifierError>,
    },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("sent {sent} texts but received {received} predictions")]
    ArityMismatch { sent: usize, received: usize },
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    External(#[from] ExternalError),
}

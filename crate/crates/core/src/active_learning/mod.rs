//! Human-in-the-loop labeling rounds: uncertainty sampling over reviews the
//! keyword lexicon misses, dual annotation with conflict resolution, and
//! retraining.

mod agreement;
mod queue;
mod state;
mod task;

use thiserror::Error;

use crate::classifier::{ClassifierError, Prediction};

pub use agreement::{agreement_report, cohens_kappa, AgreementReport};
pub use queue::{AnnotationQueue, AuditEntry, AuditLog, QueueSnapshot};
pub use state::{select_batch, ALConfig, ALState, BatchSelection, RoundSummary};
pub use task::{resolve_conflict, submit_label, AnnotationTask, ReviewRef, TaskStatus};

#[derive(Debug, Error)]
pub enum ActiveLearningError {
    #[error("task {0} not found")]
    TaskNotFound(String),
    #[error("annotator {annotator} already labeled task {task_id}")]
    DuplicateAnnotator { task_id: String, annotator: String },
    #[error("task {task_id} is {status:?}; cannot {action}")]
    InvalidState {
        task_id: String,
        status: TaskStatus,
        action: &'static str,
    },
    #[error("round closed: task {0} belongs to a finished round")]
    RoundClosed(String),
    #[error("kappa undefined: both annotators used one identical constant label")]
    UndefinedKappa,
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label vectors are empty")]
    EmptyVectors,
    #[error("tasks not complete: {}", .0.join(", "))]
    IncompleteTasks(Vec<String>),
    #[error("all {0} rounds already run")]
    RoundsExhausted(usize),
    #[error("review {0} is not in the unlabeled pool")]
    NotInPool(String),
    #[error("invalid state: {0}")]
    CorruptState(String),
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("audit log: {0}")]
    Audit(#[from] std::io::Error),
}

/// Per head `1 - 2|p - 0.5|`; the combined score is the max over heads.
pub fn uncertainty(p: &Prediction) -> f64 {
    let u = |x: f64| 1.0 - 2.0 * (x - 0.5).abs();
    u(p.p_menacing).max(u(p.p_profiling))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(a: f64, b: f64) -> f64 {
        uncertainty(&Prediction::new(a, b).unwrap())
    }

    #[test]
    fn uncertainty_examples() {
        assert_eq!(u(0.5, 0.5), 1.0);
        assert_eq!(u(1.0, 0.0), 0.0);
        assert!((u(0.7, 0.4) - 0.8).abs() < 1e-12);
    }
}

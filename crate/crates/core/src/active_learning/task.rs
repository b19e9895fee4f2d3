use serde::{Deserialize, Serialize};

use crate::classifier::{LabelSet, Prediction};
use crate::corpus::ReviewKey;

use super::ActiveLearningError;

pub type ReviewRef = ReviewKey;

/// Pending → LabeledOnce → (Complete | Conflict); Conflict → Complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    LabeledOnce,
    Complete,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub review_ref: ReviewRef,
    pub snapshot_text: String,
    pub model_prediction: Prediction,
    pub uncertainty: f64,
    pub round: usize,
    pub status: TaskStatus,
    /// Original labels in submission order; never rewritten by resolution.
    pub labels: Vec<(String, LabelSet)>,
    pub final_label: Option<LabelSet>,
    /// 2 for dual annotation, 1 in single-annotator mode.
    pub required_labels: usize,
}

impl AnnotationTask {
    pub fn new(
        task_id: impl Into<String>,
        review_ref: ReviewRef,
        snapshot_text: impl Into<String>,
        model_prediction: Prediction,
        round: usize,
        dual: bool,
    ) -> Self {
        Self {
            task_id: task_id.into(),
            review_ref,
            snapshot_text: snapshot_text.into(),
            uncertainty: super::uncertainty(&model_prediction),
            model_prediction,
            round,
            status: TaskStatus::Pending,
            labels: Vec::new(),
            final_label: None,
            required_labels: if dual { 2 } else { 1 },
        }
    }

    pub fn labeled_by(&self, annotator: &str) -> bool {
        self.labels.iter().any(|(a, _)| a == annotator)
    }

    pub fn is_complete(&self) -> bool {
        self.status == TaskStatus::Complete
    }

    /// Checks the status/label consistency a deserialized task must satisfy.
    pub fn validate(&self) -> Result<(), ActiveLearningError> {
        let n = self.labels.len();
        let ok = match self.status {
            TaskStatus::Pending => n == 0 && self.final_label.is_none(),
            TaskStatus::LabeledOnce => n == 1 && self.required_labels == 2 && self.final_label.is_none(),
            TaskStatus::Conflict => n == 2 && self.final_label.is_none() && self.labels[0].1 != self.labels[1].1,
            TaskStatus::Complete => (1..=2).contains(&n) && self.final_label.is_some(),
        };
        if ok && (1..=2).contains(&self.required_labels) {
            Ok(())
        } else {
            Err(ActiveLearningError::CorruptState(format!(
                "task {} has status {:?} with {n} labels",
                self.task_id, self.status
            )))
        }
    }
}

/// Records one annotator's label. In single-annotator mode the first label
/// completes the task.
pub fn submit_label(
    task: &mut AnnotationTask,
    annotator: &str,
    label: LabelSet,
) -> Result<TaskStatus, ActiveLearningError> {
    if matches!(task.status, TaskStatus::Complete | TaskStatus::Conflict) {
        return Err(ActiveLearningError::InvalidState {
            task_id: task.task_id.clone(),
            status: task.status,
            action: "label",
        });
    }
    if task.labeled_by(annotator) {
        return Err(ActiveLearningError::DuplicateAnnotator {
            task_id: task.task_id.clone(),
            annotator: annotator.to_string(),
        });
    }
    task.labels.push((annotator.to_string(), label));
    task.status = match (task.status, task.required_labels) {
        (TaskStatus::Pending, 1) => {
            task.final_label = Some(label);
            TaskStatus::Complete
        }
        (TaskStatus::Pending, _) => TaskStatus::LabeledOnce,
        _ if task.labels[0].1 == label => {
            task.final_label = Some(label);
            TaskStatus::Complete
        }
        _ => TaskStatus::Conflict,
    };
    Ok(task.status)
}

pub fn resolve_conflict(
    task: &mut AnnotationTask,
    final_label: LabelSet,
) -> Result<(), ActiveLearningError> {
    if task.status != TaskStatus::Conflict {
        return Err(ActiveLearningError::InvalidState {
            task_id: task.task_id.clone(),
            status: task.status,
            action: "resolve",
        });
    }
    task.final_label = Some(final_label);
    task.status = TaskStatus::Complete;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Store;

    const M: LabelSet = LabelSet::new(true, false);
    const N: LabelSet = LabelSet::NEITHER;

    fn fresh(dual: bool) -> AnnotationTask {
        let key = ReviewKey {
            store: Store::Apple,
            app_id: "app".into(),
            review_id: "r1".into(),
        };
        AnnotationTask::new("t1", key, "text", Prediction::new(0.5, 0.5).unwrap(), 0, dual)
    }

    #[test]
    fn state_machine_examples() {
        let mut t = fresh(true);
        assert_eq!(submit_label(&mut t, "a", M).unwrap(), TaskStatus::LabeledOnce);
        assert_eq!(submit_label(&mut t, "b", M).unwrap(), TaskStatus::Complete);
        assert_eq!(t.final_label, Some(M));

        let mut t = fresh(true);
        submit_label(&mut t, "a", M).unwrap();
        assert_eq!(submit_label(&mut t, "b", N).unwrap(), TaskStatus::Conflict);
        resolve_conflict(&mut t, M).unwrap();
        assert!(t.is_complete());
        assert_eq!(t.labels, vec![("a".to_string(), M), ("b".to_string(), N)]);
        assert!(matches!(resolve_conflict(&mut t, M), Err(ActiveLearningError::InvalidState { .. })));
    }

    #[test]
    fn duplicate_annotator_rejected_without_change() {
        let mut t = fresh(true);
        submit_label(&mut t, "a", M).unwrap();
        let before = t.clone();
        assert!(matches!(
            submit_label(&mut t, "a", N),
            Err(ActiveLearningError::DuplicateAnnotator { .. })
        ));
        assert_eq!(t, before);
    }

    #[test]
    fn single_annotator_mode() {
        let mut t = fresh(false);
        assert_eq!(submit_label(&mut t, "a", N).unwrap(), TaskStatus::Complete);
        assert_eq!(t.final_label, Some(N));
        t.validate().unwrap();
    }

    /// Exhaustive walk over every sequence of up to four operations drawn
    /// from {label by a/b/c with each LabelSet, resolve with each LabelSet}.
    #[test]
    fn no_undeclared_transitions() {
        use TaskStatus::*;
        let allowed = [
            (Pending, LabeledOnce),
            (LabeledOnce, Complete),
            (LabeledOnce, Conflict),
            (Conflict, Complete),
        ];
        let labels: Vec<LabelSet> = crate::classifier::JointClass::ALL.iter().map(|c| c.labels()).collect();
        let mut ops: Vec<(Option<&str>, LabelSet)> = Vec::new();
        for l in &labels {
            for a in ["a", "b", "c"] {
                ops.push((Some(a), *l));
            }
            ops.push((None, *l));
        }
        fn walk(task: AnnotationTask, depth: usize, ops: &[(Option<&str>, LabelSet)], allowed: &[(TaskStatus, TaskStatus)]) {
            task.validate().unwrap();
            if depth == 0 {
                return;
            }
            for (who, l) in ops {
                let mut next = task.clone();
                let res = match who {
                    Some(a) => submit_label(&mut next, a, *l).map(|_| ()),
                    None => resolve_conflict(&mut next, *l),
                };
                match res {
                    Ok(()) => assert!(allowed.contains(&(task.status, next.status)), "{:?} -> {:?}", task.status, next.status),
                    Err(_) => assert_eq!(next, task),
                }
                if next != task {
                    walk(next, depth - 1, ops, allowed);
                }
            }
        }
        walk(fresh(true), 4, &ops, &allowed);
    }
}

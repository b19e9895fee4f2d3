//! Recall-prioritized decision thresholds.

use serde::{Deserialize, Serialize};

use super::labels::{Head, LabelSet, LabeledExample, Prediction};
use super::model::Scorer;
use super::ClassifierError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecallTargets {
    pub menacing: f64,
    pub profiling: f64,
}

impl Default for RecallTargets {
    fn default() -> Self {
        Self {
            menacing: 0.90,
            profiling: 0.85,
        }
    }
}

impl RecallTargets {
    pub fn get(&self, head: Head) -> f64 {
        match head {
            Head::Menacing => self.menacing,
            Head::Profiling => self.profiling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub t_menacing: f64,
    pub t_profiling: f64,
    pub recall_target_menacing: f64,
    pub recall_target_profiling: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let targets = RecallTargets::default();
        Self {
            t_menacing: 0.5,
            t_profiling: 0.5,
            recall_target_menacing: targets.menacing,
            recall_target_profiling: targets.profiling,
        }
    }
}

impl Thresholds {
    pub fn get(&self, head: Head) -> f64 {
        match head {
            Head::Menacing => self.t_menacing,
            Head::Profiling => self.t_profiling,
        }
    }

    pub fn targets(&self) -> RecallTargets {
        RecallTargets {
            menacing: self.recall_target_menacing,
            profiling: self.recall_target_profiling,
        }
    }

    /// `p >= t` per head.
    pub fn decide(&self, p: &Prediction) -> LabelSet {
        LabelSet::new(p.p_menacing >= self.t_menacing, p.p_profiling >= self.t_profiling)
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        for v in [
            self.t_menacing,
            self.t_profiling,
            self.recall_target_menacing,
            self.recall_target_profiling,
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ClassifierError::Config(format!("threshold value {v} not in [0,1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSelection {
    pub thresholds: Thresholds,
    /// Heads whose target was only reachable at t = 0 (everything positive).
    pub fallback_heads: Vec<Head>,
}

/// Largest threshold whose recall over `positive_scores` reaches `target`.
/// Recall is a step function of t that only changes at observed scores, so
/// the answer is the k-th largest positive score for the smallest k with
/// k / P >= target (or 1.0 when k = 0).
pub fn largest_threshold_for_recall(positive_scores: &[f64], target: f64) -> f64 {
    let mut sorted = positive_scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let p = sorted.len() as f64;
    let k = (0..=sorted.len())
        .find(|&k| k as f64 / p >= target)
        .unwrap_or(sorted.len());
    if k == 0 {
        1.0
    } else {
        sorted[k - 1]
    }
}

pub fn select_thresholds_from_scores(
    scored: &[(Prediction, LabelSet)],
    targets: RecallTargets,
) -> Result<ThresholdSelection, ClassifierError> {
    for t in [targets.menacing, targets.profiling] {
        if !(0.0..=1.0).contains(&t) {
            return Err(ClassifierError::Config(format!("recall target {t} not in [0,1]")));
        }
    }
    let mut chosen = [0.0; 2];
    let mut fallback_heads = Vec::new();
    for (slot, head) in chosen.iter_mut().zip(Head::BOTH) {
        let positives: Vec<f64> = scored
            .iter()
            .filter(|(_, l)| l.get(head))
            .map(|(p, _)| p.get(head))
            .collect();
        if positives.is_empty() {
            return Err(ClassifierError::NoPositives(head));
        }
        let t = largest_threshold_for_recall(&positives, targets.get(head));
        if t <= 0.0 {
            tracing::warn!(%head, "recall target only reachable by flagging everything");
            fallback_heads.push(head);
        }
        *slot = t.max(0.0);
    }
    Ok(ThresholdSelection {
        thresholds: Thresholds {
            t_menacing: chosen[0],
            t_profiling: chosen[1],
            recall_target_menacing: targets.menacing,
            recall_target_profiling: targets.profiling,
        },
        fallback_heads,
    })
}

pub fn select_thresholds(
    model: &dyn Scorer,
    validation: &[LabeledExample],
    targets: RecallTargets,
) -> Result<ThresholdSelection, ClassifierError> {
    let texts: Vec<&str> = validation.iter().map(|e| e.text.as_str()).collect();
    let predictions = model.predict_batch(&texts)?;
    let scored: Vec<(Prediction, LabelSet)> = predictions
        .into_iter()
        .zip(validation.iter().map(|e| e.labels))
        .collect();
    select_thresholds_from_scores(&scored, targets)
}

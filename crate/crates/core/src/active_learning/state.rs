use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{
    evaluate, select_thresholds, train, LabelSet, LabeledExample, LinearModel, Metrics, RecallTargets,
    Thresholds, TrainConfig,
};
use crate::corpus::{Review, ReviewKey};
use crate::lexicon::KeywordLexicon;

use super::task::AnnotationTask;
use super::{uncertainty, ActiveLearningError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ALConfig {
    pub rounds_total: usize,
    pub batch_size: usize,
    /// Two annotators per task; `false` completes a task on its first label.
    pub dual_annotation: bool,
}

impl Default for ALConfig {
    fn default() -> Self {
        Self {
            rounds_total: 3,
            batch_size: 200,
            dual_annotation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ALState {
    /// Rounds completed so far.
    pub round_index: usize,
    pub config: ALConfig,
    pub train_config: TrainConfig,
    pub targets: RecallTargets,
    pub labeled_pool: Vec<(Review, LabelSet)>,
    pub unlabeled_pool: Vec<Review>,
    pub model: LinearModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSelection {
    pub round: usize,
    pub tasks: Vec<AnnotationTask>,
    /// Set when no unlabeled review was eligible.
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    /// Index of the round just completed (0-based).
    pub round: usize,
    pub rounds_total: usize,
    pub new_labels: usize,
    pub labeled_pool: usize,
    pub unlabeled_pool: usize,
    /// The previous model scored on this round's human labels.
    pub batch_metrics: Option<Metrics>,
    pub thresholds: Thresholds,
    pub warning: Option<String>,
}

fn examples(pool: &[(Review, LabelSet)]) -> Vec<LabeledExample> {
    pool.iter().map(|(r, l)| LabeledExample::from((r.clone(), *l))).collect()
}

fn fit(
    pool: &[(Review, LabelSet)],
    cfg: &TrainConfig,
    targets: RecallTargets,
) -> Result<LinearModel, ActiveLearningError> {
    let ex = examples(pool);
    let mut model = train(&ex, cfg)?;
    model.thresholds = select_thresholds(&model, &ex, targets)?.thresholds;
    Ok(model)
}

impl ALState {
    /// Trains the initial model on `labeled` (typically the keyword seed set).
    pub fn new(
        labeled: Vec<(Review, LabelSet)>,
        unlabeled: Vec<Review>,
        config: ALConfig,
        train_config: TrainConfig,
        targets: RecallTargets,
    ) -> Result<Self, ActiveLearningError> {
        let model = fit(&labeled, &train_config, targets)?;
        let mut state = Self {
            round_index: 0,
            config,
            train_config,
            targets,
            labeled_pool: labeled,
            unlabeled_pool: unlabeled,
            model,
        };
        state.unlabeled_pool.sort_by_key(|r| r.key());
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), ActiveLearningError> {
        let bad = |m: String| Err(ActiveLearningError::CorruptState(m));
        if self.config.batch_size == 0 {
            return bad("batch_size is 0".into());
        }
        if self.round_index > self.config.rounds_total {
            return bad(format!(
                "round_index {} exceeds rounds_total {}",
                self.round_index, self.config.rounds_total
            ));
        }
        let mut seen: HashSet<ReviewKey> = HashSet::new();
        for r in self.labeled_pool.iter().map(|(r, _)| r).chain(&self.unlabeled_pool) {
            if !seen.insert(r.key()) {
                return bad(format!("review {} appears twice across pools", r.key()));
            }
        }
        Ok(())
    }

    pub fn rounds_remaining(&self) -> usize {
        self.config.rounds_total - self.round_index
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ActiveLearningError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut state: Self = serde_json::from_str(&text)
            .map_err(|e| ActiveLearningError::CorruptState(format!("{}: {e}", path.display())))?;
        state.unlabeled_pool.sort_by_key(|r| r.key());
        state.validate()?;
        Ok(state)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ActiveLearningError> {
        let json = serde_json::to_string(self)
            .map_err(|e| ActiveLearningError::CorruptState(e.to_string()))?;
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, json)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    /// Merges completed tasks into the labeled pool, retrains on the whole
    /// pool and advances the round. Nothing changes on error.
    pub fn run_round(&mut self, tasks: &[AnnotationTask]) -> Result<RoundSummary, ActiveLearningError> {
        if self.round_index >= self.config.rounds_total {
            return Err(ActiveLearningError::RoundsExhausted(self.config.rounds_total));
        }
        let incomplete: Vec<String> = tasks
            .iter()
            .filter(|t| !t.is_complete())
            .map(|t| t.task_id.clone())
            .collect();
        if !incomplete.is_empty() {
            return Err(ActiveLearningError::IncompleteTasks(incomplete));
        }
        let mut incoming: Vec<(ReviewKey, LabelSet)> = Vec::with_capacity(tasks.len());
        let mut seen = HashSet::new();
        for t in tasks {
            if !seen.insert(t.review_ref.clone()) {
                return Err(ActiveLearningError::CorruptState(format!(
                    "review {} labeled twice in one round",
                    t.review_ref
                )));
            }
            let label = t.final_label.ok_or_else(|| {
                ActiveLearningError::CorruptState(format!("task {} complete without a label", t.task_id))
            })?;
            incoming.push((t.review_ref.clone(), label));
        }
        let mut unlabeled = self.unlabeled_pool.clone();
        let mut labeled = self.labeled_pool.clone();
        let mut scored = Vec::with_capacity(incoming.len());
        for (key, label) in incoming {
            let pos = unlabeled
                .binary_search_by(|r| r.key().cmp(&key))
                .map_err(|_| ActiveLearningError::NotInPool(key.to_string()))?;
            let review = unlabeled.remove(pos);
            scored.push((self.model.predict(&review.text), label));
            labeled.push((review, label));
        }
        let model = fit(&labeled, &self.train_config, self.targets)?;
        let warning = tasks.is_empty().then(|| {
            tracing::warn!(round = self.round_index, "advancing a round with no new labels");
            "no new labels this round; retrained on the unchanged pool".to_string()
        });
        let summary = RoundSummary {
            round: self.round_index,
            rounds_total: self.config.rounds_total,
            new_labels: tasks.len(),
            labeled_pool: labeled.len(),
            unlabeled_pool: unlabeled.len(),
            batch_metrics: (!scored.is_empty()).then(|| evaluate(&scored, &self.model.thresholds)),
            thresholds: model.thresholds,
            warning,
        };
        self.labeled_pool = labeled;
        self.unlabeled_pool = unlabeled;
        self.model = model;
        self.round_index += 1;
        tracing::info!(summary = %serde_json::to_string(&summary).unwrap_or_default(), "round complete");
        Ok(summary)
    }
}

/// The `k` most uncertain unlabeled reviews that the lexicon does not match,
/// ties broken by review id (then full key) ascending.
pub fn select_batch(
    state: &ALState,
    k: usize,
    lex: &KeywordLexicon,
) -> Result<BatchSelection, ActiveLearningError> {
    if k == 0 {
        return Err(ActiveLearningError::ZeroBatch);
    }
    if state.round_index >= state.config.rounds_total {
        return Err(ActiveLearningError::RoundsExhausted(state.config.rounds_total));
    }
    let mut candidates: Vec<(f64, &Review, _)> = state
        .unlabeled_pool
        .iter()
        .filter(|r| !lex.is_match(&r.text))
        .map(|r| {
            let p = state.model.predict(&r.text);
            (uncertainty(&p), r, p)
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.review_id.cmp(&b.1.review_id))
            .then_with(|| a.1.key().cmp(&b.1.key()))
    });
    candidates.truncate(k);
    let round = state.round_index;
    let warning = candidates.is_empty().then(|| {
        tracing::warn!(round, "no eligible unlabeled review for selection");
        "no unlabeled review outside the keyword lexicon".to_string()
    });
    let tasks = candidates
        .into_iter()
        .enumerate()
        .map(|(rank, (_, r, p))| {
            AnnotationTask::new(
                format!("r{round}-{rank:05}"),
                r.key(),
                r.text.clone(),
                p,
                round,
                state.config.dual_annotation,
            )
        })
        .collect();
    Ok(BatchSelection { round, tasks, warning })
}

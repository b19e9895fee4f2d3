//! Per-review decisions over the eligible part of a corpus.

use serde::{Deserialize, Serialize};

use super::labels::{LabelSet, Prediction};
use super::model::Scorer;
use super::thresholds::Thresholds;
use super::ClassifierError;
use crate::corpus::{Corpus, CorpusConfig, Review, ReviewKey, Store};

/// Texts sent to a scorer per call.
pub const CLASSIFY_BATCH: usize = 256;

/// One line of the decisions JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub review_id: String,
    pub app_id: String,
    pub store: Store,
    pub p_menacing: f64,
    pub p_profiling: f64,
    pub menacing: bool,
    pub profiling: bool,
}

impl Decision {
    pub fn new(review: &Review, prediction: Prediction, thr: &Thresholds) -> Self {
        let labels = thr.decide(&prediction);
        Self {
            review_id: review.review_id.clone(),
            app_id: review.app_id.clone(),
            store: review.store,
            p_menacing: prediction.p_menacing,
            p_profiling: prediction.p_profiling,
            menacing: labels.menacing,
            profiling: labels.profiling,
        }
    }

    pub fn labels(&self) -> LabelSet {
        LabelSet::new(self.menacing, self.profiling)
    }

    pub fn key(&self) -> ReviewKey {
        ReviewKey {
            store: self.store,
            app_id: self.app_id.clone(),
            review_id: self.review_id.clone(),
        }
    }
}

pub fn classify_reviews<'a>(
    reviews: impl IntoIterator<Item = &'a Review>,
    scorer: &dyn Scorer,
    thr: &Thresholds,
) -> Result<Vec<Decision>, ClassifierError> {
    thr.validate()?;
    let reviews: Vec<&Review> = reviews.into_iter().collect();
    let mut out = Vec::with_capacity(reviews.len());
    for chunk in reviews.chunks(CLASSIFY_BATCH) {
        let texts: Vec<&str> = chunk.iter().map(|r| r.text.as_str()).collect();
        let predictions = scorer.predict_batch(&texts)?;
        if predictions.len() != chunk.len() {
            return Err(ClassifierError::ArityMismatch {
                sent: chunk.len(),
                received: predictions.len(),
            });
        }
        out.extend(chunk.iter().zip(predictions).map(|(r, p)| Decision::new(r, p, thr)));
    }
    Ok(out)
}

/// Classifies only the reviews that pass the eligibility filter.
pub fn classify_corpus(
    corpus: &Corpus,
    cfg: &CorpusConfig,
    scorer: &dyn Scorer,
    thr: &Thresholds,
) -> Result<Vec<Decision>, ClassifierError> {
    classify_reviews(corpus.eligible(cfg), scorer, thr)
}

//! Corpus-level rollups over classified reviews.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Decision, HarassmentMix, Head, LabelSet};
use crate::corpus::{Corpus, Polarity, Review, Store};
use crate::emotion::{dominant_distribution, EmotionBackend, EmotionError, EmotionShares};
use crate::expansion::AppRecord;
use crate::gender::{extract_abuser_gender, gender_distribution, GenderDistribution, GenderTag, GenderTerms};
use crate::lexicon::SubtypeLexicons;
use crate::report::{aggregate_app, polarity_distribution, store_distribution, AppHarassmentReport, ReportError, StoreDistribution};

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("decision for unknown review {0}")]
    UnknownReview(String),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Emotion(#[from] EmotionError),
}

/// Pairs each decision with its review from the corpus.
pub fn join_decisions(corpus: &Corpus, decisions: &[Decision]) -> Result<Vec<(Review, LabelSet)>, SummaryError> {
    decisions
        .iter()
        .map(|d| {
            let key = d.key();
            corpus
                .get(&key)
                .map(|r| (r.clone(), d.labels()))
                .ok_or_else(|| SummaryError::UnknownReview(key.to_string()))
        })
        .collect()
}

/// One report per (store, app) present in `decisions`. Apps missing from
/// `apps` are named by their id.
pub fn app_reports(
    decisions: &[(Review, LabelSet)],
    apps: &[AppRecord],
    subs: &SubtypeLexicons,
) -> Result<Vec<AppHarassmentReport>, ReportError> {
    let mut groups: BTreeMap<(Store, &str), Vec<(Review, LabelSet)>> = BTreeMap::new();
    for (r, l) in decisions {
        groups.entry((r.store, r.app_id.as_str())).or_default().push((r.clone(), *l));
    }
    groups
        .into_iter()
        .map(|((store, app_id), items)| {
            let record = apps
                .iter()
                .find(|a| a.store == store && a.app_id == app_id)
                .cloned()
                .unwrap_or_else(|| AppRecord {
                    app_id: app_id.to_string(),
                    store,
                    name: app_id.to_string(),
                    category: String::new(),
                });
            aggregate_app(&record, &items, subs)
        })
        .collect()
}

/// Dominant-emotion shares among the reviews flagged on each head.
pub fn emotions_by_head<'a>(
    items: impl IntoIterator<Item = (&'a crate::emotion::EmotionScores, &'a LabelSet)>,
) -> BTreeMap<Head, EmotionShares> {
    dominant_distribution(
        items
            .into_iter()
            .flat_map(|(s, l)| Head::BOTH.into_iter().filter(|h| l.get(*h)).map(move |h| (s.dominant, h))),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub apps: Vec<AppHarassmentReport>,
    pub stores: StoreDistribution,
    pub polarity: BTreeMap<Polarity, HarassmentMix>,
    pub emotions: BTreeMap<Head, EmotionShares>,
    pub gender: GenderDistribution,
}

/// Emotion and gender are computed over flagged reviews only.
pub fn summarize(
    decisions: &[(Review, LabelSet)],
    apps: &[AppRecord],
    subs: &SubtypeLexicons,
    emotion: &dyn EmotionBackend,
    terms: &GenderTerms,
) -> Result<CorpusSummary, SummaryError> {
    let flagged: Vec<&(Review, LabelSet)> = decisions.iter().filter(|(_, l)| l.any()).collect();
    let texts: Vec<&str> = flagged.iter().map(|(r, _)| r.text.as_str()).collect();
    let scores = if texts.is_empty() { Vec::new() } else { emotion.classify_batch(&texts)? };
    if scores.len() != flagged.len() {
        return Err(EmotionError::InvalidScores(format!("{} scores for {} texts", scores.len(), flagged.len())).into());
    }
    let tags: Vec<GenderTag> = flagged.iter().map(|(r, _)| extract_abuser_gender(&r.text, terms)).collect();
    Ok(CorpusSummary {
        apps: app_reports(decisions, apps, subs)?,
        stores: store_distribution(decisions.iter().map(|(r, l)| (r.store, *l))),
        polarity: polarity_distribution(decisions.iter().map(|(r, l)| (r.polarity(), *l))),
        emotions: emotions_by_head(scores.iter().zip(flagged.iter().map(|(_, l)| l))),
        gender: gender_distribution(tags.iter().zip(flagged.iter().map(|(_, l)| l))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::{EmotionLabel, LexiconEmotionBackend};
    use crate::gender::Gender;
    use chrono::NaiveDate;

    fn review(id: &str, app: &str, store: Store, rating: u8, text: &str) -> Review {
        Review {
            review_id: id.into(),
            app_id: app.into(),
            store,
            rating,
            text: text.into(),
            posted_date: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            author_hash: None,
        }
    }

    fn decisions() -> Vec<(Review, LabelSet)> {
        vec![
            (review("1", "a", Store::Google, 1, "he sent me disgusting pictures"), LabelSet::new(true, false)),
            (review("2", "a", Store::Google, 3, "she tried to blackmail me, i am furious"), LabelSet::new(true, true)),
            (review("3", "b", Store::Apple, 2, "the app is slow"), LabelSet::NEITHER),
        ]
    }

    #[test]
    fn summary_over_mixed_decisions() {
        let apps = [AppRecord {
            app_id: "a".into(),
            store: Store::Google,
            name: "App A".into(),
            category: String::new(),
        }];
        let s = summarize(
            &decisions(),
            &apps,
            &SubtypeLexicons::default_lexicons(),
            &LexiconEmotionBackend::default_lexicon(),
            &GenderTerms::default_terms(),
        )
        .unwrap();
        assert_eq!(s.apps.len(), 2);
        assert_eq!(s.apps[0].app.name, "b");
        assert_eq!(s.apps[0].total, 0);
        assert_eq!(s.apps[1].app.name, "App A");
        assert_eq!((s.apps[1].total, s.apps[1].both), (2, 1));
        assert_eq!(s.stores.omitted, vec![Store::Apple]);
        assert_eq!(s.emotions[&Head::Menacing].n, 2);
        assert_eq!(s.emotions[&Head::Profiling].n, 1);
        assert_eq!(s.emotions[&Head::Profiling].proportions[&EmotionLabel::Anger], 1.0);
        assert_eq!(s.gender.menacing.n, 2);
        assert_eq!(s.gender.menacing.male, 1);
        assert_eq!(s.gender.by_gender.keys().copied().collect::<Vec<_>>(), [Gender::Male, Gender::Female]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<CorpusSummary>(&json).unwrap(), s);
    }

    #[test]
    fn join_rejects_unknown_reviews() {
        let corpus = Corpus::from_reviews(decisions().into_iter().map(|(r, _)| r));
        let d = Decision {
            review_id: "zzz".into(),
            app_id: "a".into(),
            store: Store::Google,
            p_menacing: 0.1,
            p_profiling: 0.1,
            menacing: false,
            profiling: false,
        };
        assert!(matches!(join_decisions(&corpus, &[d]), Err(SummaryError::UnknownReview(_))));
    }
}

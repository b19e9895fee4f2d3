//! Stratified k-fold splitting and cross-validation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::labels::{Head, JointClass, LabelSet, LabeledExample, Prediction};
use super::metrics::{evaluate, Metrics};
use super::model::{train, TrainConfig};
use super::thresholds::{select_thresholds, RecallTargets, Thresholds};
use super::ClassifierError;

/// Partition `examples` into `k` folds of indices, stratified on the joint
/// class. Within a class, members are ordered by id, shuffled with
/// `rng_seed`, then dealt round-robin; the dealing position carries over
/// between classes so overall fold sizes also differ by at most one.
pub fn stratified_kfold(
    examples: &[LabeledExample],
    k: usize,
    rng_seed: u64,
) -> Result<Vec<Vec<usize>>, ClassifierError> {
    if k < 2 {
        return Err(ClassifierError::Config(format!("k = {k}, need at least 2 folds")));
    }
    if k > examples.len() {
        return Err(ClassifierError::TooFewExamples {
            folds: k,
            examples: examples.len(),
        });
    }
    let mut by_class: BTreeMap<JointClass, Vec<usize>> = BTreeMap::new();
    for (i, e) in examples.iter().enumerate() {
        by_class.entry(e.labels.joint()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0usize;
    for members in by_class.values_mut() {
        members.sort_by(|&a, &b| examples[a].id.cmp(&examples[b].id).then(a.cmp(&b)));
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub thresholds: Thresholds,
    pub fallback_heads: Vec<Head>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
    pub mean: Metrics,
}

fn run_fold(
    examples: &[LabeledExample],
    folds: &[Vec<usize>],
    fold: usize,
    cfg: &TrainConfig,
    targets: RecallTargets,
) -> Result<FoldResult, ClassifierError> {
    let train_set: Vec<LabeledExample> = folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != fold)
        .flat_map(|(_, idx)| idx.iter().map(|&i| examples[i].clone()))
        .collect();
    let test_set: Vec<&LabeledExample> = folds[fold].iter().map(|&i| &examples[i]).collect();
    let mut model = train(&train_set, cfg)?;
    let selection = select_thresholds(&model, &train_set, targets)?;
    model.thresholds = selection.thresholds;
    let scored: Vec<(Prediction, LabelSet)> = test_set
        .iter()
        .map(|e| (model.predict(&e.text), e.labels))
        .collect();
    Ok(FoldResult {
        fold,
        train_size: train_set.len(),
        test_size: test_set.len(),
        thresholds: model.thresholds,
        fallback_heads: selection.fallback_heads,
        metrics: evaluate(&scored, &model.thresholds),
    })
}

/// For each fold: train on the rest, pick thresholds on that training split,
/// evaluate on the held-out fold. Folds train in parallel.
pub fn cross_validate(
    examples: &[LabeledExample],
    cfg: &TrainConfig,
    targets: RecallTargets,
) -> Result<CrossValidation, ClassifierError> {
    cfg.validate()?;
    let folds = stratified_kfold(examples, cfg.folds, cfg.rng_seed)?;
    let results: Vec<Result<FoldResult, ClassifierError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..folds.len())
            .map(|i| {
                let folds = &folds;
                scope.spawn(move || run_fold(examples, folds, i, cfg, targets))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fold worker panicked"))
            .collect()
    });
    let mut fold_results = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        fold_results.push(r.map_err(|e| ClassifierError::Fold {
            fold: i,
            source: Box::new(e),
        })?);
    }
    let mean = Metrics::mean(&fold_results.iter().map(|f| f.metrics).collect::<Vec<_>>());
    Ok(CrossValidation {
        folds: fold_results,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn examples(classes: &[JointClass]) -> Vec<LabeledExample> {
        classes
            .iter()
            .enumerate()
            .map(|(i, c)| LabeledExample::new(format!("id{i:03}"), format!("text {i}"), c.labels()))
            .collect()
    }

    fn class_counts(ex: &[LabeledExample], fold: &[usize], c: JointClass) -> usize {
        fold.iter().filter(|&&i| ex[i].labels.joint() == c).count()
    }

    #[test]
    fn exact_divisibility() {
        let mut classes = vec![JointClass::MenacingOnly; 5];
        classes.extend(vec![JointClass::Neither; 5]);
        let ex = examples(&classes);
        let folds = stratified_kfold(&ex, 5, 1).unwrap();
        for f in &folds {
            assert_eq!(class_counts(&ex, f, JointClass::MenacingOnly), 1);
            assert_eq!(class_counts(&ex, f, JointClass::Neither), 1);
        }
    }

    #[test]
    fn small_class_counting() {
        let mut classes = vec![JointClass::Both; 3];
        classes.extend(vec![JointClass::Neither; 10]);
        let ex = examples(&classes);
        let folds = stratified_kfold(&ex, 5, 9).unwrap();
        let mut counts: Vec<usize> = folds.iter().map(|f| class_counts(&ex, f, JointClass::Both)).collect();
        counts.sort_unstable();
        assert_eq!(counts, vec![0, 0, 1, 1, 1]);
    }

    #[test]
    fn errors() {
        let ex = examples(&[JointClass::Both; 3]);
        assert!(matches!(stratified_kfold(&ex, 5, 0), Err(ClassifierError::TooFewExamples { .. })));
        assert!(stratified_kfold(&ex, 1, 0).is_err());
    }

    #[test]
    fn duplicated_single_example_fails_with_fold_index() {
        let ex: Vec<LabeledExample> = (0..10)
            .map(|i| LabeledExample::new(format!("d{i}"), "same text", LabelSet::new(true, false)))
            .collect();
        let cfg = TrainConfig {
            hash_dims: 1 << 10,
            ..TrainConfig::default()
        };
        match cross_validate(&ex, &cfg, RecallTargets::default()) {
            Err(ClassifierError::Fold { source, .. }) => {
                assert!(matches!(*source, ClassifierError::DegenerateHead(Head::Menacing)));
            }
            other => panic!("expected fold error, got {other:?}"),
        }
    }

    #[test]
    fn separable_corpus_has_full_recall() {
        // identical texts per class: every positive ties at one score
        let mut ex = Vec::new();
        for i in 0..40 {
            let (text, labels) = match i % 4 {
                0 => ("a stalker keeps following me", LabelSet::new(false, true)),
                1 => ("he keeps sending nudes", LabelSet::new(true, false)),
                2 => ("a stalker keeps sending nudes", LabelSet::new(true, true)),
                _ => ("the app crashes on login", LabelSet::NEITHER),
            };
            ex.push(LabeledExample::new(format!("s{i:02}"), text, labels));
        }
        let cfg = TrainConfig {
            hash_dims: 1 << 12,
            ..TrainConfig::default()
        };
        let cv = cross_validate(&ex, &cfg, RecallTargets::default()).unwrap();
        assert_eq!(cv.folds.len(), 5);
        assert_eq!(cv.mean.menacing.recall, Some(1.0));
        assert_eq!(cv.mean.profiling.recall, Some(1.0));
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(
            classes in proptest::collection::vec(0usize..4, 2..80),
            k in 2usize..8,
            seed in any::<u64>(),
        ) {
            prop_assume!(k <= classes.len());
            let ex = examples(&classes.iter().map(|&c| JointClass::ALL[c]).collect::<Vec<_>>());
            let folds = stratified_kfold(&ex, k, seed).unwrap();
            prop_assert_eq!(folds.len(), k);
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..ex.len()).collect::<Vec<_>>());
            for c in JointClass::ALL {
                let counts: Vec<usize> = folds.iter().map(|f| class_counts(&ex, f, c)).collect();
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
            prop_assert_eq!(&folds, &stratified_kfold(&ex, k, seed).unwrap());
        }
    }
}

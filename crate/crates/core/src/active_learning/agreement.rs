use serde::{Deserialize, Serialize};

use crate::classifier::Head;

use super::task::AnnotationTask;
use super::ActiveLearningError;

/// Cohen's kappa for two boolean label vectors:
/// `(p_o - p_e) / (1 - p_e)` with `p_e` from the annotators' marginals.
pub fn cohens_kappa(a: &[bool], b: &[bool]) -> Result<f64, ActiveLearningError> {
    if a.len() != b.len() {
        return Err(ActiveLearningError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(ActiveLearningError::EmptyVectors);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = b.iter().filter(|&&x| x).count() as f64 / n;
    let p_o = agree / n;
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    if p_e >= 1.0 {
        return Err(ActiveLearningError::UndefinedKappa);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Per-head kappa over doubly-labeled tasks, from the original labels.
/// A head's kappa is `None` when undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa_menacing: Option<f64>,
    pub kappa_profiling: Option<f64>,
    pub n_items: usize,
}

pub fn agreement_report<'a>(tasks: impl IntoIterator<Item = &'a AnnotationTask>) -> AgreementReport {
    let pairs: Vec<_> = tasks
        .into_iter()
        .filter(|t| t.labels.len() >= 2)
        .map(|t| (t.labels[0].1, t.labels[1].1))
        .collect();
    let kappa = |head: Head| {
        let a: Vec<bool> = pairs.iter().map(|(x, _)| x.get(head)).collect();
        let b: Vec<bool> = pairs.iter().map(|(_, y)| y.get(head)).collect();
        cohens_kappa(&a, &b).ok()
    };
    AgreementReport {
        kappa_menacing: kappa(Head::Menacing),
        kappa_profiling: kappa(Head::Profiling),
        n_items: pairs.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::active_learning::{resolve_conflict, submit_label};
    use crate::classifier::{LabelSet, Prediction};
    use crate::corpus::{ReviewKey, Store};
    use proptest::prelude::*;

    fn bools(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == 'T').collect()
    }

    #[test]
    fn hand_case() {
        let k = cohens_kappa(&bools("TTTFFFFFFF"), &bools("TTFFFFFFFT")).unwrap();
        // p_o = 0.8, p_e = 0.3*0.3 + 0.7*0.7 = 0.58
        assert!((k - 0.22 / 0.42).abs() < 1e-12);
        assert!((k - 0.5238).abs() < 1e-4);
    }

    #[test]
    fn perfect_and_undefined() {
        let a = bools("TFTF");
        assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
        assert!(matches!(cohens_kappa(&bools("TTT"), &bools("TTT")), Err(ActiveLearningError::UndefinedKappa)));
        assert!(cohens_kappa(&[], &[]).is_err());
        assert!(cohens_kappa(&[true], &[true, false]).is_err());
    }

    #[test]
    fn constant_but_different_is_defined() {
        // p_e = 0, p_o = 0
        assert_eq!(cohens_kappa(&bools("TT"), &bools("FF")).unwrap(), 0.0);
    }

    #[test]
    fn report_uses_original_labels() {
        let mut tasks = Vec::new();
        for (i, (x, y)) in [(true, true), (true, false), (false, false), (false, false)].iter().enumerate() {
            let key = ReviewKey { store: Store::Google, app_id: "a".into(), review_id: format!("{i}") };
            let mut t = AnnotationTask::new(format!("t{i}"), key, "", Prediction::new(0.5, 0.5).unwrap(), 0, true);
            submit_label(&mut t, "a", LabelSet::new(*x, false)).unwrap();
            submit_label(&mut t, "b", LabelSet::new(*y, false)).unwrap();
            if x != y {
                resolve_conflict(&mut t, LabelSet::new(*x, false)).unwrap();
            }
            tasks.push(t);
        }
        let r = agreement_report(&tasks);
        assert_eq!(r.n_items, 4);
        // a = TTFF, b = TFFF: p_o = .75, p_e = .5*.25 + .5*.75 = .5
        assert!((r.kappa_menacing.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r.kappa_profiling, None);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let a: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            match (cohens_kappa(&a, &b), cohens_kappa(&b, &a)) {
                (Ok(x), Ok(y)) => {
                    prop_assert!((x - y).abs() < 1e-12);
                    prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&x));
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric definedness"),
            }
        }
    }
}

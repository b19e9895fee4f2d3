use serde::{Deserialize, Serialize};

use super::labels::{Head, LabelSet, Prediction};
use super::thresholds::Thresholds;

/// Confusion counts and derived ratios for one head. Ratios with a zero
/// denominator are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HeadMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn harmonic(precision: Option<f64>, recall: Option<f64>) -> Option<f64> {
    match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    }
}

impl HeadMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub menacing: HeadMetrics,
    pub profiling: HeadMetrics,
}

impl Metrics {
    pub fn head(&self, head: Head) -> &HeadMetrics {
        match head {
            Head::Menacing => &self.menacing,
            Head::Profiling => &self.profiling,
        }
    }

    /// Unweighted mean of per-fold ratios (over folds where a ratio is
    /// defined); confusion counts are summed.
    pub fn mean(folds: &[Metrics]) -> Metrics {
        let mean_head = |head: Head| {
            let hs: Vec<&HeadMetrics> = folds.iter().map(|m| m.head(head)).collect();
            let avg = |f: fn(&HeadMetrics) -> Option<f64>| {
                let vals: Vec<f64> = hs.iter().filter_map(|h| f(h)).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            };
            HeadMetrics {
                tp: hs.iter().map(|h| h.tp).sum(),
                fp: hs.iter().map(|h| h.fp).sum(),
                fn_: hs.iter().map(|h| h.fn_).sum(),
                tn: hs.iter().map(|h| h.tn).sum(),
                precision: avg(|h| h.precision),
                recall: avg(|h| h.recall),
                f1: avg(|h| h.f1),
            }
        };
        Metrics {
            menacing: mean_head(Head::Menacing),
            profiling: mean_head(Head::Profiling),
        }
    }
}

/// Confusion counts per head under the `p >= t` rule.
pub fn evaluate(predictions: &[(Prediction, LabelSet)], thr: &Thresholds) -> Metrics {
    let head_metrics = |head: Head| {
        let t = thr.get(head);
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (p, gold) in predictions {
            match (p.get(head) >= t, gold.get(head)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        HeadMetrics::from_counts(tp, fp, fn_, tn)
    };
    Metrics {
        menacing: head_metrics(Head::Menacing),
        profiling: head_metrics(Head::Profiling),
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Review;

use super::ClassifierError;

/// The two harassment heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Menacing,
    Profiling,
}

impl Head {
    pub const BOTH: [Head; 2] = [Head::Menacing, Head::Profiling];

    pub fn name(self) -> &'static str {
        match self {
            Head::Menacing => "menacing",
            Head::Profiling => "profiling",
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSet {
    pub menacing: bool,
    pub profiling: bool,
}

impl LabelSet {
    pub const NEITHER: LabelSet = LabelSet::new(false, false);

    pub const fn new(menacing: bool, profiling: bool) -> Self {
        Self {
            menacing,
            profiling,
        }
    }

    pub fn get(&self, head: Head) -> bool {
        match head {
            Head::Menacing => self.menacing,
            Head::Profiling => self.profiling,
        }
    }

    pub fn joint(&self) -> JointClass {
        match (self.menacing, self.profiling) {
            (true, false) => JointClass::MenacingOnly,
            (false, true) => JointClass::ProfilingOnly,
            (true, true) => JointClass::Both,
            (false, false) => JointClass::Neither,
        }
    }

    /// Flagged as harassment on either head.
    pub fn any(&self) -> bool {
        self.menacing || self.profiling
    }
}

/// The 4-way class induced by the two heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointClass {
    MenacingOnly,
    ProfilingOnly,
    Both,
    Neither,
}

impl JointClass {
    pub const ALL: [JointClass; 4] = [
        JointClass::MenacingOnly,
        JointClass::ProfilingOnly,
        JointClass::Both,
        JointClass::Neither,
    ];

    pub fn labels(self) -> LabelSet {
        match self {
            JointClass::MenacingOnly => LabelSet::new(true, false),
            JointClass::ProfilingOnly => LabelSet::new(false, true),
            JointClass::Both => LabelSet::new(true, true),
            JointClass::Neither => LabelSet::NEITHER,
        }
    }
}

/// Per-head probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub p_menacing: f64,
    pub p_profiling: f64,
}

impl Prediction {
    pub fn new(p_menacing: f64, p_profiling: f64) -> Result<Self, ClassifierError> {
        for p in [p_menacing, p_profiling] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(ClassifierError::ProbabilityOutOfRange(p));
            }
        }
        Ok(Self {
            p_menacing,
            p_profiling,
        })
    }

    pub fn get(&self, head: Head) -> f64 {
        match head {
            Head::Menacing => self.p_menacing,
            Head::Profiling => self.p_profiling,
        }
    }
}

/// A text with its gold labels. `id` drives deterministic ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub labels: LabelSet,
}

impl LabeledExample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, labels: LabelSet) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            labels,
        }
    }
}

impl From<(Review, LabelSet)> for LabeledExample {
    fn from((review, labels): (Review, LabelSet)) -> Self {
        Self {
            id: review.key().to_string(),
            text: review.text,
            labels,
        }
    }
}

/// Shares of harassment-flagged items in the three disjoint cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarassmentMix {
    pub profiling_only: f64,
    pub menacing_only: f64,
    pub both: f64,
    pub flagged: usize,
}

impl HarassmentMix {
    /// `None` when no item is flagged on either head.
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a LabelSet>) -> Option<Self> {
        let (mut p, mut m, mut b) = (0usize, 0usize, 0usize);
        for l in labels {
            match l.joint() {
                JointClass::ProfilingOnly => p += 1,
                JointClass::MenacingOnly => m += 1,
                JointClass::Both => b += 1,
                JointClass::Neither => {}
            }
        }
        let n = p + m + b;
        (n > 0).then(|| HarassmentMix {
            profiling_only: p as f64 / n as f64,
            menacing_only: m as f64 / n as f64,
            both: b as f64 / n as f64,
            flagged: n,
        })
    }

    /// One-decimal percentages in (profiling-only, menacing-only, both) order.
    pub fn percentages(&self) -> [String; 3] {
        [self.profiling_only, self.menacing_only, self.both].map(|p| format!("{:.1}", p * 100.0))
    }
}

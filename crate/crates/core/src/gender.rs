//! Rule-based abuser-gender extraction from explicit gendered terms.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::classifier::{HarassmentMix, Head, LabelSet};
use crate::lexicon::{parse_sections, LexiconError};
use crate::text::tokenize_sentences;

pub const DEFAULT_GENDER_TERMS: &str = include_str!("../data/gender_terms.txt");

/// Tokens after a first-person marker that are treated as self-description.
pub const SELF_REFERENCE_WINDOW: usize = 3;

const FIRST_PERSON_MARKERS: [&[&str]; 5] = [&["i", "m"], &["im"], &["i", "am"], &["as", "a"], &["as", "an"]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub term: String,
    /// Token offset in the whole review.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderTag {
    pub gender: Gender,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenderTerms {
    terms: HashMap<String, Gender>,
}

impl GenderTerms {
    /// `[Male]` and `[Female]` sections of single-word terms.
    pub fn parse(source: &str) -> Result<Self, LexiconError> {
        let mut terms = HashMap::new();
        let mut seen = [false; 2];
        for section in parse_sections(source)? {
            let gender = match section.name.to_ascii_lowercase().as_str() {
                "male" => Gender::Male,
                "female" => Gender::Female,
                _ => {
                    return Err(LexiconError::UnknownSection {
                        line: section.line,
                        name: section.name,
                    })
                }
            };
            seen[(gender == Gender::Female) as usize] = true;
            for entry in section.entries {
                let term = entry.to_lowercase();
                let invalid = |reason: &str| LexiconError::InvalidEntry {
                    line: section.line,
                    entry: entry.clone(),
                    reason: reason.to_string(),
                };
                if term.split_whitespace().count() != 1 {
                    return Err(invalid("must be a single word"));
                }
                if terms.insert(term, gender).is_some_and(|prev| prev != gender) {
                    return Err(invalid("is listed under both genders"));
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(LexiconError::MissingSection("Male/Female".into()));
        }
        Ok(Self { terms })
    }

    pub fn default_terms() -> Self {
        Self::parse(DEFAULT_GENDER_TERMS).expect("bundled gender terms are valid")
    }

    pub fn get(&self, token: &str) -> Option<Gender> {
        self.terms.get(token).copied()
    }
}

pub fn extract_abuser_gender(text: &str, terms: &GenderTerms) -> GenderTag {
    let mut evidence: Vec<(Gender, Evidence)> = Vec::new();
    let mut base = 0;
    for sentence in tokenize_sentences(text) {
        let mut excluded = vec![false; sentence.len()];
        for marker in FIRST_PERSON_MARKERS {
            for start in 0..sentence.len().saturating_sub(marker.len() - 1) {
                if sentence[start..start + marker.len()].iter().zip(marker).all(|(a, b)| a == b) {
                    let from = start + marker.len();
                    let to = (from + SELF_REFERENCE_WINDOW).min(sentence.len());
                    excluded[from..to].iter_mut().for_each(|e| *e = true);
                }
            }
        }
        for (i, tok) in sentence.iter().enumerate() {
            if excluded[i] {
                continue;
            }
            if let Some(g) = terms.get(tok) {
                evidence.push((g, Evidence { term: tok.clone(), offset: base + i }));
            }
        }
        base += sentence.len();
    }
    let gender = match evidence.first() {
        Some((g, _)) if evidence.iter().all(|(h, _)| h == g) => *g,
        _ => Gender::Unknown,
    };
    GenderTag {
        gender,
        evidence: evidence.into_iter().map(|(_, e)| e).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadGender {
    /// Reviews flagged on this head.
    pub n: usize,
    pub male: usize,
    pub female: usize,
    /// Shares over Male + Female only; absent when both counts are zero.
    pub male_share: Option<f64>,
    pub female_share: Option<f64>,
    /// (male + female) / n.
    pub coverage: f64,
}

impl HeadGender {
    fn from_counts(n: usize, male: usize, female: usize) -> Self {
        let tagged = male + female;
        Self {
            n,
            male,
            female,
            male_share: (tagged > 0).then(|| male as f64 / tagged as f64),
            female_share: (tagged > 0).then(|| female as f64 / tagged as f64),
            coverage: if n == 0 { 0.0 } else { tagged as f64 / n as f64 },
        }
    }

    /// One-decimal (male, female) percentages.
    pub fn percentages(&self) -> Option<(String, String)> {
        Some((
            format!("{:.1}", self.male_share? * 100.0),
            format!("{:.1}", self.female_share? * 100.0),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderDistribution {
    pub menacing: HeadGender,
    pub profiling: HeadGender,
    /// Per abuser gender, the harassment mix among its flagged reviews.
    pub by_gender: BTreeMap<Gender, HarassmentMix>,
}

impl GenderDistribution {
    pub fn head(&self, head: Head) -> &HeadGender {
        match head {
            Head::Menacing => &self.menacing,
            Head::Profiling => &self.profiling,
        }
    }
}

pub fn gender_distribution<'a>(tagged: impl IntoIterator<Item = (&'a GenderTag, &'a LabelSet)>) -> GenderDistribution {
    let items: Vec<(Gender, LabelSet)> = tagged.into_iter().map(|(t, l)| (t.gender, *l)).collect();
    let per_head = |head: Head| {
        let on_head: Vec<Gender> = items.iter().filter(|(_, l)| l.get(head)).map(|(g, _)| *g).collect();
        let count = |g: Gender| on_head.iter().filter(|&&x| x == g).count();
        HeadGender::from_counts(on_head.len(), count(Gender::Male), count(Gender::Female))
    };
    let by_gender = [Gender::Male, Gender::Female]
        .into_iter()
        .filter_map(|g| {
            let labels: Vec<&LabelSet> = items.iter().filter(|(h, _)| *h == g).map(|(_, l)| l).collect();
            HarassmentMix::from_labels(labels).map(|m| (g, m))
        })
        .collect();
    GenderDistribution {
        menacing: per_head(Head::Menacing),
        profiling: per_head(Head::Profiling),
        by_gender,
    }
}

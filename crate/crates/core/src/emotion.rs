//! Seven-class emotion tagging and per-group dominant-emotion proportions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::external::{checked_probability, ExternalError, InferenceClient};
use crate::lexicon::{parse_sections, KeywordLexicon, LexiconError};
use crate::text::tokenize;

pub const DEFAULT_EMOTION_LEXICON: &str = include_str!("../data/emotions.txt");

/// Pseudo-count given to Base by the lexicon backend.
pub const BASE_PSEUDO_COUNT: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("unknown emotion {0:?}")]
    UnknownEmotion(String),
    #[error("invalid emotion scores: {0}")]
    InvalidScores(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    External(#[from] ExternalError),
}

/// Declaration order is the tie-break order for the dominant emotion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Anger,
    Disgust,
    Fear,
    Joy,
    /// The neutral class.
    Base,
    Sadness,
    Surprise,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 7] = [
        EmotionLabel::Anger,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Joy,
        EmotionLabel::Base,
        EmotionLabel::Sadness,
        EmotionLabel::Surprise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "anger",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Joy => "joy",
            EmotionLabel::Base => "base",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::Surprise => "surprise",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = EmotionError;

    /// Case-insensitive; `neutral` is accepted for Base.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "neutral" {
            return Ok(EmotionLabel::Base);
        }
        EmotionLabel::ALL
            .into_iter()
            .find(|e| e.name() == lower)
            .ok_or_else(|| EmotionError::UnknownEmotion(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionScores {
    pub scores: BTreeMap<EmotionLabel, f64>,
    pub dominant: EmotionLabel,
}

impl EmotionScores {
    /// Missing labels score 0. Scores must be finite and non-negative.
    pub fn new(scores: impl IntoIterator<Item = (EmotionLabel, f64)>) -> Result<Self, EmotionError> {
        let mut map: BTreeMap<EmotionLabel, f64> = EmotionLabel::ALL.iter().map(|&e| (e, 0.0)).collect();
        for (e, s) in scores {
            if !(s.is_finite() && s >= 0.0) {
                return Err(EmotionError::InvalidScores(format!("{e} scored {s}")));
            }
            map.insert(e, s);
        }
        let mut dominant = EmotionLabel::ALL[0];
        for e in EmotionLabel::ALL {
            if map[&e] > map[&dominant] {
                dominant = e;
            }
        }
        Ok(Self { scores: map, dominant })
    }

    pub fn get(&self, e: EmotionLabel) -> f64 {
        self.scores.get(&e).copied().unwrap_or(0.0)
    }
}

pub trait EmotionBackend {
    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<EmotionScores>, EmotionError>;
}

pub fn classify_emotion(text: &str, backend: &dyn EmotionBackend) -> Result<EmotionScores, EmotionError> {
    backend
        .classify_batch(&[text])?
        .pop()
        .ok_or_else(|| EmotionError::InvalidScores("backend returned no scores".into()))
}

/// Deterministic backend: hit counts per emotion plus a Base pseudo-count,
/// normalized to sum to 1.
#[derive(Debug, Clone)]
pub struct LexiconEmotionBackend {
    lexicons: BTreeMap<EmotionLabel, KeywordLexicon>,
    base_pseudo_count: f64,
}

impl LexiconEmotionBackend {
    pub fn parse(source: &str) -> Result<Self, EmotionError> {
        let mut lexicons = BTreeMap::new();
        for section in parse_sections(source)? {
            let label: EmotionLabel = section.name.parse().map_err(|_| LexiconError::UnknownSection {
                line: section.line,
                name: section.name.clone(),
            })?;
            let lex = KeywordLexicon::new(label.name(), section.entries)?;
            lexicons.insert(label, lex);
        }
        Ok(Self {
            lexicons,
            base_pseudo_count: BASE_PSEUDO_COUNT,
        })
    }

    pub fn default_lexicon() -> Self {
        Self::parse(DEFAULT_EMOTION_LEXICON).expect("bundled emotion lexicon is valid")
    }

    pub fn with_base_pseudo_count(mut self, count: f64) -> Self {
        self.base_pseudo_count = count;
        self
    }

    pub fn hit_counts(&self, text: &str) -> BTreeMap<EmotionLabel, usize> {
        let tokens = tokenize(text);
        self.lexicons
            .iter()
            .map(|(e, lex)| (*e, lex.count_hits(&tokens)))
            .collect()
    }

    pub fn score(&self, text: &str) -> EmotionScores {
        let mut raw: BTreeMap<EmotionLabel, f64> =
            self.hit_counts(text).into_iter().map(|(e, c)| (e, c as f64)).collect();
        *raw.entry(EmotionLabel::Base).or_insert(0.0) += self.base_pseudo_count;
        let total: f64 = raw.values().sum();
        EmotionScores::new(raw.into_iter().map(|(e, c)| (e, c / total)))
            .expect("normalized counts are finite and non-negative")
    }
}

impl EmotionBackend for LexiconEmotionBackend {
    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<EmotionScores>, EmotionError> {
        Ok(texts.iter().map(|t| self.score(t)).collect())
    }
}

/// HTTP backend. Each prediction is an object with one probability per
/// emotion name (`neutral` or `base` for Base) summing to 1.
#[derive(Debug, Clone)]
pub struct ExternalEmotionBackend {
    client: InferenceClient,
    chunk_size: usize,
    max_in_flight: usize,
}

impl ExternalEmotionBackend {
    pub fn new(client: InferenceClient) -> Self {
        Self {
            client,
            chunk_size: 64,
            max_in_flight: 4,
        }
    }

    pub fn with_limits(mut self, chunk_size: usize, max_in_flight: usize) -> Self {
        self.chunk_size = chunk_size.max(1);
        self.max_in_flight = max_in_flight.max(1);
        self
    }

    fn decode(offset: usize, raw: Vec<HashMap<String, f64>>) -> Result<Vec<EmotionScores>, EmotionError> {
        raw.into_iter()
            .enumerate()
            .map(|(i, obj)| {
                let index = offset + i;
                let mut pairs = BTreeMap::new();
                for (name, p) in obj {
                    let e: EmotionLabel = name.parse().map_err(|_| {
                        ExternalError::Schema(format!("prediction {index}: unknown emotion {name:?}"))
                    })?;
                    let p = checked_probability(p, e.name(), index)?;
                    if pairs.insert(e, p).is_some() {
                        return Err(ExternalError::Schema(format!("prediction {index}: {e} given twice")).into());
                    }
                }
                if pairs.len() != EmotionLabel::ALL.len() {
                    return Err(ExternalError::Schema(format!(
                        "prediction {index}: expected 7 emotions, got {}",
                        pairs.len()
                    ))
                    .into());
                }
                let sum: f64 = pairs.values().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(ExternalError::Schema(format!("prediction {index}: probabilities sum to {sum}")).into());
                }
                EmotionScores::new(pairs)
            })
            .collect()
    }
}

impl EmotionBackend for ExternalEmotionBackend {
    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<EmotionScores>, EmotionError> {
        let chunks: Vec<(usize, &[&str])> = texts
            .chunks(self.chunk_size)
            .enumerate()
            .map(|(i, c)| (i * self.chunk_size, c))
            .collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in chunks.chunks(self.max_in_flight) {
            let results: Vec<Result<Vec<EmotionScores>, EmotionError>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|&(offset, chunk)| {
                        s.spawn(move || Self::decode(offset, self.client.infer::<HashMap<String, f64>>(chunk)?))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("emotion request thread panicked"))
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionShares {
    pub n: usize,
    pub proportions: BTreeMap<EmotionLabel, f64>,
}

/// Per group, the share of items whose dominant emotion is each label.
pub fn emotion_distribution<'a, K, I>(items: I) -> BTreeMap<K, EmotionShares>
where
    K: Ord + Clone + 'a,
    I: IntoIterator<Item = (&'a EmotionScores, &'a K)>,
{
    dominant_distribution(items.into_iter().map(|(s, k)| (s.dominant, k.clone())))
}

pub fn dominant_distribution<K: Ord>(items: impl IntoIterator<Item = (EmotionLabel, K)>) -> BTreeMap<K, EmotionShares> {
    let mut counts: BTreeMap<K, [usize; 7]> = BTreeMap::new();
    for (e, k) in items {
        counts.entry(k).or_insert([0; 7])[e as usize] += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| {
            let n: usize = c.iter().sum();
            let proportions = EmotionLabel::ALL
                .iter()
                .map(|&e| (e, c[e as usize] as f64 / n as f64))
                .collect();
            (k, EmotionShares { n, proportions })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::external::mock::MockServer;
    use proptest::prelude::*;

    fn lex() -> LexiconEmotionBackend {
        LexiconEmotionBackend::default_lexicon()
    }

    #[test]
    fn examples() {
        assert_eq!(lex().score("").dominant, EmotionLabel::Base);
        assert_eq!(lex().score("I am disgusted by these creeps").dominant, EmotionLabel::Disgust);
        let s = lex().score("so angry, absolutely furious and scared");
        assert_eq!(lex().hit_counts("so angry, absolutely furious and scared")[&EmotionLabel::Anger], 2);
        assert_eq!(s.dominant, EmotionLabel::Anger);
    }

    #[test]
    fn single_hit_beats_base_for_every_emotion() {
        for (e, word) in [
            (EmotionLabel::Anger, "furious"),
            (EmotionLabel::Disgust, "gross"),
            (EmotionLabel::Fear, "terrified"),
            (EmotionLabel::Joy, "happy"),
            (EmotionLabel::Sadness, "lonely"),
            (EmotionLabel::Surprise, "shocked"),
        ] {
            assert_eq!(lex().score(word).dominant, e, "{word}");
        }
    }

    #[test]
    fn ties_follow_declaration_order() {
        let s = EmotionScores::new([(EmotionLabel::Sadness, 0.5), (EmotionLabel::Fear, 0.5)]).unwrap();
        assert_eq!(s.dominant, EmotionLabel::Fear);
        assert!(EmotionScores::new([(EmotionLabel::Joy, -0.1)]).is_err());
    }

    #[test]
    fn parse_rejects_unknown_section() {
        assert!(LexiconEmotionBackend::parse("[Boredom]\nmeh\n").is_err());
        assert!("Neutral".parse::<EmotionLabel>().unwrap() == EmotionLabel::Base);
    }

    #[test]
    fn distribution_examples() {
        let joy = [EmotionLabel::Joy; 4];
        let d = dominant_distribution(joy.iter().map(|&e| (e, "g")));
        assert_eq!(d["g"].proportions[&EmotionLabel::Joy], 1.0);
        assert_eq!(d["g"].proportions[&EmotionLabel::Anger], 0.0);
        let mixed = [EmotionLabel::Anger, EmotionLabel::Anger, EmotionLabel::Joy, EmotionLabel::Joy];
        let d = dominant_distribution(mixed.iter().map(|&e| (e, 1)));
        assert_eq!(d[&1].proportions[&EmotionLabel::Anger], 0.5);
        assert_eq!(d[&1].proportions[&EmotionLabel::Joy], 0.5);
    }

    fn emotion_payload(values: &[f64; 7]) -> String {
        let names = ["anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"];
        let fields: Vec<String> = names.iter().zip(values).map(|(n, v)| format!("\"{n}\": {v}")).collect();
        format!("{{{}}}", fields.join(","))
    }

    #[test]
    fn external_backend_parses_and_validates() {
        let server = MockServer::start(2, |texts| {
            if texts[0] == "bad" {
                (200, format!("{{\"predictions\": [{}]}}", emotion_payload(&[0.5; 7])))
            } else {
                let one = emotion_payload(&[0.1, 0.6, 0.1, 0.05, 0.05, 0.05, 0.05]);
                (200, format!("{{\"predictions\": [{}]}}", vec![one; texts.len()].join(",")))
            }
        });
        let backend = ExternalEmotionBackend::new(InferenceClient::new(&server.url));
        let out = backend.classify_batch(&["a", "b"]).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].dominant, EmotionLabel::Disgust);
        assert!(matches!(
            backend.classify_batch(&["bad"]),
            Err(EmotionError::External(ExternalError::Schema(_)))
        ));
    }

    #[test]
    fn external_chunks_keep_order() {
        let server = MockServer::start(3, |texts| {
            let items: Vec<String> = texts
                .iter()
                .map(|t| {
                    let mut v = [0.0; 7];
                    v[t.parse::<usize>().unwrap() % 7] = 1.0;
                    emotion_payload(&v)
                })
                .collect();
            (200, format!("{{\"predictions\": [{}]}}", items.join(",")))
        });
        let backend = ExternalEmotionBackend::new(InferenceClient::new(&server.url)).with_limits(3, 2);
        let texts: Vec<String> = (0..7).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let out = backend.classify_batch(&refs).unwrap();
        let got: Vec<EmotionLabel> = out.iter().map(|s| s.dominant).collect();
        assert_eq!(got, EmotionLabel::ALL.to_vec());
    }

    proptest! {
        #[test]
        fn proportions_sum_to_one(items in proptest::collection::vec((0usize..7, 0u8..4), 1..200)) {
            let d = dominant_distribution(items.iter().map(|&(e, g)| (EmotionLabel::ALL[e], g)));
            for shares in d.values() {
                let total: f64 = shares.proportions.values().sum();
                prop_assert!((total - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn lexicon_scores_are_a_distribution(text in "[a-z ]{0,80}") {
            let s = lex().score(&text);
            let total: f64 = s.scores.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert_eq!(&s, &lex().score(&text));
        }
    }
}

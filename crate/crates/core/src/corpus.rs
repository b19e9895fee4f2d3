//! Review corpus: data model, ingestion from store dumps, eligibility
//! filtering and an append-log backed store.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("rating {0} is outside 1..=5")]
    RatingOutOfRange(i64),
    #[error("unknown store {0:?}, expected \"apple\" or \"google\"")]
    UnknownStore(String),
    #[error("unknown import format {0:?}")]
    UnknownFormat(String),
    #[error("ingest failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("ingest failed: {0}")]
    Csv(String),
    #[error("corpus log {path} is corrupt at line {line}: {reason}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid corpus config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Store {
    Apple,
    Google,
}

impl Store {
    pub fn as_str(self) -> &'static str {
        match self {
            Store::Apple => "apple",
            Store::Google => "google",
        }
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Store {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "apple" => Ok(Store::Apple),
            "google" => Ok(Store::Google),
            other => Err(CorpusError::UnknownStore(other.to_string())),
        }
    }
}

/// Identity of a review inside a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReviewKey {
    pub store: Store,
    pub app_id: String,
    pub review_id: String,
}

impl fmt::Display for ReviewKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.store, self.app_id, self.review_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub app_id: String,
    pub store: Store,
    pub rating: u8,
    pub text: String,
    pub posted_date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_hash: Option<String>,
}

impl Review {
    pub fn key(&self) -> ReviewKey {
        ReviewKey {
            store: self.store,
            app_id: self.app_id.clone(),
            review_id: self.review_id.clone(),
        }
    }

    pub fn polarity(&self) -> Polarity {
        // ratings are validated on every construction path that reaches a corpus
        polarity_of(self.rating as i64).unwrap_or(Polarity::Positive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

/// Star rating to polarity bucket: 1–2 negative, 3 neutral, 4–5 positive.
pub fn polarity_of(rating: i64) -> Result<Polarity, CorpusError> {
    match rating {
        1 | 2 => Ok(Polarity::Negative),
        3 => Ok(Polarity::Neutral),
        4 | 5 => Ok(Polarity::Positive),
        other => Err(CorpusError::RatingOutOfRange(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageFilter {
    EnglishOnly,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub date_cutoff: NaiveDate,
    pub language_filter: LanguageFilter,
    pub english_stopword_hit_min: f64,
}

pub const DEFAULT_STOPWORD_HIT_MIN: f64 = 0.12;

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            date_cutoff: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            language_filter: LanguageFilter::EnglishOnly,
            english_stopword_hit_min: DEFAULT_STOPWORD_HIT_MIN,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if !(0.0..=1.0).contains(&self.english_stopword_hit_min) {
            return Err(CorpusError::Config(format!(
                "english_stopword_hit_min {} not in [0,1]",
                self.english_stopword_hit_min
            )));
        }
        Ok(())
    }
}

/// Decides whether a text is English.
pub trait LanguageDetector {
    fn is_english(&self, text: &str) -> bool;
}

const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "don", "down", "during", "each", "even",
    "every", "few", "for", "from", "further", "get", "got", "had", "has", "have", "having", "he",
    "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into",
    "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not",
    "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "out", "over", "own",
    "really", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "theirs", "them", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
];

fn is_latin_letter(ch: char) -> bool {
    matches!(ch,
        'A'..='Z' | 'a'..='z'
        | '\u{00C0}'..='\u{024F}'
        | '\u{1E00}'..='\u{1EFF}')
}

/// Stopword-ratio plus Latin-script heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopwordDetector {
    pub min_stopword_ratio: f64,
    pub min_latin_ratio: f64,
}

impl Default for StopwordDetector {
    fn default() -> Self {
        Self {
            min_stopword_ratio: DEFAULT_STOPWORD_HIT_MIN,
            min_latin_ratio: 0.8,
        }
    }
}

impl StopwordDetector {
    pub fn with_stopword_ratio(min_stopword_ratio: f64) -> Self {
        Self {
            min_stopword_ratio,
            ..Self::default()
        }
    }
}

impl LanguageDetector for StopwordDetector {
    fn is_english(&self, text: &str) -> bool {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return false;
        }
        let letters = text.chars().filter(|c| c.is_alphabetic()).count();
        if letters == 0 {
            return false;
        }
        let latin = text.chars().filter(|&c| is_latin_letter(c)).count();
        if (latin as f64) < self.min_latin_ratio * letters as f64 {
            return false;
        }
        let hits = tokens
            .iter()
            .filter(|t| ENGLISH_STOPWORDS.binary_search(&t.as_str()).is_ok())
            .count();
        hits as f64 >= self.min_stopword_ratio * tokens.len() as f64
    }
}

/// English detection with the default thresholds.
pub fn detect_english(text: &str) -> bool {
    StopwordDetector::default().is_english(text)
}

pub fn is_eligible(review: &Review, cfg: &CorpusConfig) -> bool {
    is_eligible_with(
        review,
        cfg,
        &StopwordDetector::with_stopword_ratio(cfg.english_stopword_hit_min),
    )
}

/// Negative or neutral, on or after the cutoff, and English when the
/// language filter is on.
pub fn is_eligible_with(
    review: &Review,
    cfg: &CorpusConfig,
    detector: &dyn LanguageDetector,
) -> bool {
    matches!(review.polarity(), Polarity::Negative | Polarity::Neutral)
        && review.posted_date >= cfg.date_cutoff
        && (cfg.language_filter == LanguageFilter::Off || detector.is_english(&review.text))
}

/// One-way hash of an author handle. Handles never reach the corpus in clear.
pub fn hash_author(handle: &str) -> String {
    let digest = Sha256::digest(handle.trim().as_bytes());
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportFormat {
    JsonLines,
    Csv,
}

impl FromStr for ImportFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json-lines" | "jsonlines" | "ndjson" => Ok(ImportFormat::JsonLines),
            "csv" => Ok(ImportFormat::Csv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub imported: usize,
    pub duplicates: usize,
    pub malformed: usize,
}

impl IngestSummary {
    pub fn records(&self) -> usize {
        self.imported + self.duplicates + self.malformed
    }
}

/// A record as it appears in a dump, before validation.
#[derive(Debug, Default)]
struct RawRecord {
    review_id: Option<String>,
    app_id: Option<String>,
    store: Option<String>,
    rating: Option<i64>,
    text: Option<String>,
    posted_date: Option<String>,
    author: Option<String>,
}

impl RawRecord {
    fn from_json(line: &str) -> Option<Self> {
        let value: serde_json::Value = serde_json::from_str(line).ok()?;
        let obj = value.as_object()?;
        let string = |k: &str| obj.get(k).and_then(|v| v.as_str()).map(str::to_string);
        Some(RawRecord {
            review_id: obj.get("review_id").and_then(|v| match v {
                serde_json::Value::String(s) => Some(s.clone()),
                serde_json::Value::Number(n) => Some(n.to_string()),
                _ => None,
            }),
            app_id: string("app_id"),
            store: string("store"),
            rating: obj.get("rating").and_then(|v| v.as_i64()),
            text: string("text"),
            posted_date: string("posted_date"),
            author: string("author"),
        })
    }

    fn validate(self, store: Store) -> Option<Review> {
        let review_id = self.review_id.filter(|s| !s.trim().is_empty())?;
        let app_id = self.app_id.filter(|s| !s.trim().is_empty())?;
        if let Some(declared) = self.store.filter(|s| !s.trim().is_empty()) {
            if declared.parse::<Store>().ok()? != store {
                return None;
            }
        }
        let rating = self.rating?;
        polarity_of(rating).ok()?;
        let text = self.text.filter(|t| !t.trim().is_empty())?;
        let posted_date = NaiveDate::parse_from_str(self.posted_date?.trim(), "%Y-%m-%d").ok()?;
        Some(Review {
            review_id,
            app_id,
            store,
            rating: rating as u8,
            text,
            posted_date,
            author_hash: self
                .author
                .filter(|a| !a.trim().is_empty())
                .map(|a| hash_author(&a)),
        })
    }
}

/// In-memory review index, optionally mirrored to an append-only JSON-lines
/// log. Reviews keep their insertion order.
#[derive(Debug, Default)]
pub struct Corpus {
    reviews: Vec<Review>,
    index: HashMap<ReviewKey, usize>,
    log: Option<BufWriter<File>>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load the log at `path` (creating it if absent) and append future
    /// imports to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let mut corpus = if path.exists() {
            Self::load(path)?
        } else {
            Self::new()
        };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        corpus.log = Some(BufWriter::new(file));
        Ok(corpus)
    }

    /// Read-only load of a corpus log.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path)?);
        let mut corpus = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let review: Review =
                serde_json::from_str(&line).map_err(|e| CorpusError::CorruptLog {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            if review.text.trim().is_empty() || polarity_of(review.rating as i64).is_err() {
                return Err(CorpusError::CorruptLog {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: "record violates review invariants".into(),
                });
            }
            corpus.insert(review);
        }
        Ok(corpus)
    }

    pub fn from_reviews(reviews: impl IntoIterator<Item = Review>) -> Self {
        let mut corpus = Self::new();
        for r in reviews {
            corpus.insert(r);
        }
        corpus
    }

    /// Returns false if the key is already present.
    fn insert(&mut self, review: Review) -> bool {
        let key = review.key();
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key, self.reviews.len());
        self.reviews.push(review);
        true
    }

    fn add(&mut self, review: Review) -> Result<bool, CorpusError> {
        if let Some(log) = self.log.as_mut() {
            if self.index.contains_key(&review.key()) {
                return Ok(false);
            }
            serde_json::to_writer(&mut *log, &review).map_err(std::io::Error::from)?;
            log.write_all(b"\n")?;
        }
        Ok(self.insert(review))
    }

    pub fn import_reviews<R: Read>(
        &mut self,
        source: R,
        format: ImportFormat,
        store: Store,
    ) -> Result<IngestSummary, CorpusError> {
        let mut summary = IngestSummary::default();
        match format {
            ImportFormat::JsonLines => {
                for line in BufReader::new(source).lines() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    self.account(
                        RawRecord::from_json(&line).and_then(|r| r.validate(store)),
                        &mut summary,
                    )?;
                }
            }
            ImportFormat::Csv => {
                let mut reader = csv::ReaderBuilder::new()
                    .has_headers(true)
                    .flexible(true)
                    .from_reader(source);
                let headers = match reader.headers() {
                    Ok(h) => h.clone(),
                    Err(e) => return Err(csv_error(e)),
                };
                let column = |name: &str| headers.iter().position(|h| h.trim() == name);
                let cols = [
                    column("review_id"),
                    column("app_id"),
                    column("store"),
                    column("rating"),
                    column("text"),
                    column("posted_date"),
                    column("author"),
                ];
                for record in reader.records() {
                    let record = match record {
                        Ok(r) => r,
                        Err(e) if e.is_io_error() => return Err(csv_error(e)),
                        Err(_) => {
                            summary.malformed += 1;
                            continue;
                        }
                    };
                    let field =
                        |i: usize| cols[i].and_then(|c| record.get(c)).map(str::to_string);
                    let raw = RawRecord {
                        review_id: field(0),
                        app_id: field(1),
                        store: field(2),
                        rating: field(3).and_then(|r| r.trim().parse().ok()),
                        text: field(4),
                        posted_date: field(5),
                        author: field(6),
                    };
                    self.account(raw.validate(store), &mut summary)?;
                }
            }
        }
        if let Some(log) = self.log.as_mut() {
            log.flush()?;
        }
        Ok(summary)
    }

    fn account(
        &mut self,
        review: Option<Review>,
        summary: &mut IngestSummary,
    ) -> Result<(), CorpusError> {
        match review {
            None => summary.malformed += 1,
            Some(r) => {
                if self.add(r)? {
                    summary.imported += 1;
                } else {
                    summary.duplicates += 1;
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn get(&self, key: &ReviewKey) -> Option<&Review> {
        self.index.get(key).map(|&i| &self.reviews[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Review> {
        self.reviews.iter()
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn eligible<'a>(&'a self, cfg: &'a CorpusConfig) -> impl Iterator<Item = &'a Review> + 'a {
        let detector = StopwordDetector::with_stopword_ratio(cfg.english_stopword_hit_min);
        self.reviews
            .iter()
            .filter(move |r| is_eligible_with(r, cfg, &detector))
    }
}

fn csv_error(e: csv::Error) -> CorpusError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CorpusError::Io(io),
            other => CorpusError::Csv(format!("{other:?}")),
        }
    } else {
        CorpusError::Csv(e.to_string())
    }
}

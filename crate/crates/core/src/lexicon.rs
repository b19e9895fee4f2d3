//! Keyword lexicons: harassment seed matching, subtype tagging and seed-set
//! sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{is_eligible_with, Corpus, CorpusConfig, Review, StopwordDetector};
use crate::text::{count_phrase, tokenize};

pub const DEFAULT_HARASSMENT_LEXICON: &str = include_str!("../data/harassment.txt");
pub const DEFAULT_SUBTYPE_LEXICONS: &str = include_str!("../data/subtypes.txt");

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("lexicon {lexicon}: entry {entry:?} has {tokens} tokens, expected 1 to 3")]
    BadEntryLength {
        lexicon: String,
        entry: String,
        tokens: usize,
    },
    #[error("line {line}: entry outside of any [section]")]
    EntryOutsideSection { line: usize },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: entry {entry:?} {reason}")]
    InvalidEntry {
        line: usize,
        entry: String,
        reason: String,
    },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("sample size must be at least 1")]
    ZeroSampleSize,
}

/// A named list of lowercase keyword phrases of one to three tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLexicon", into = "RawLexicon")]
pub struct KeywordLexicon {
    name: String,
    entries: Vec<String>,
    phrases: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RawLexicon {
    name: String,
    entries: Vec<String>,
}

impl TryFrom<RawLexicon> for KeywordLexicon {
    type Error = LexiconError;
    fn try_from(raw: RawLexicon) -> Result<Self, Self::Error> {
        KeywordLexicon::new(raw.name, raw.entries)
    }
}

impl From<KeywordLexicon> for RawLexicon {
    fn from(lex: KeywordLexicon) -> Self {
        RawLexicon {
            name: lex.name,
            entries: lex.entries,
        }
    }
}

impl KeywordLexicon {
    /// Entries are normalized through the tokenizer ("Cyber-Stalker" becomes
    /// "cyber stalker") and deduplicated, keeping first occurrence order.
    pub fn new<S: AsRef<str>>(
        name: impl Into<String>,
        entries: impl IntoIterator<Item = S>,
    ) -> Result<Self, LexiconError> {
        let name = name.into();
        let mut seen = BTreeSet::new();
        let mut out = Self {
            name,
            entries: Vec::new(),
            phrases: Vec::new(),
        };
        for entry in entries {
            let tokens = tokenize(entry.as_ref());
            if tokens.is_empty() || tokens.len() > 3 {
                return Err(LexiconError::BadEntryLength {
                    lexicon: out.name.clone(),
                    entry: entry.as_ref().to_string(),
                    tokens: tokens.len(),
                });
            }
            let normalized = tokens.join(" ");
            if seen.insert(normalized.clone()) {
                out.entries.push(normalized);
                out.phrases.push(tokens);
            }
        }
        Ok(out)
    }

    /// One phrase per line; blank lines and `#` comments are ignored.
    pub fn parse(name: impl Into<String>, source: &str) -> Result<Self, LexiconError> {
        Self::new(name, content_lines(source).map(|(_, l)| l))
    }

    pub fn default_harassment() -> Self {
        Self::parse("harassment", DEFAULT_HARASSMENT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn matches(&self, text: &str) -> BTreeSet<String> {
        self.matches_tokens(&tokenize(text))
    }

    pub fn matches_tokens(&self, tokens: &[String]) -> BTreeSet<String> {
        self.entries
            .iter()
            .zip(&self.phrases)
            .filter(|(_, p)| count_phrase(tokens, p) > 0)
            .map(|(e, _)| e.clone())
            .collect()
    }

    pub fn is_match(&self, text: &str) -> bool {
        let tokens = tokenize(text);
        self.phrases.iter().any(|p| count_phrase(&tokens, p) > 0)
    }

    /// Total number of phrase occurrences in `tokens`.
    pub fn count_hits(&self, tokens: &[String]) -> usize {
        self.phrases.iter().map(|p| count_phrase(tokens, p)).sum()
    }
}

pub fn match_keywords(text: &str, lex: &KeywordLexicon) -> BTreeSet<String> {
    lex.matches(text)
}

fn content_lines(source: &str) -> impl Iterator<Item = (usize, &str)> {
    source
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// One `[Name]` block of a sectioned word-list file.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    /// 1-based line of the header.
    pub line: usize,
    pub name: String,
    pub entries: Vec<String>,
}

/// Parse a `[Section]`-headed word-list file.
pub fn parse_sections(source: &str) -> Result<Vec<Section>, LexiconError> {
    let mut sections: Vec<Section> = Vec::new();
    for (line, content) in content_lines(source) {
        if let Some(name) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
            sections.push(Section {
                line,
                name: name.trim().to_string(),
                entries: Vec::new(),
            });
        } else {
            match sections.last_mut() {
                Some(section) => section.entries.push(content.to_string()),
                None => return Err(LexiconError::EntryOutsideSection { line }),
            }
        }
    }
    Ok(sections)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtype {
    Blackmail,
    ChildAbuse,
    Doxxing,
    Pedophilia,
    Stalking,
}

impl Subtype {
    pub const ALL: [Subtype; 5] = [
        Subtype::Blackmail,
        Subtype::ChildAbuse,
        Subtype::Doxxing,
        Subtype::Pedophilia,
        Subtype::Stalking,
    ];

    /// Display name as used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Subtype::Blackmail => "blackmail",
            Subtype::ChildAbuse => "child abuse",
            Subtype::Doxxing => "doxxing",
            Subtype::Pedophilia => "pedophilia",
            Subtype::Stalking => "stalking",
        }
    }
}

impl fmt::Display for Subtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Subtype {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "blackmail" | "blackmailing" => Ok(Subtype::Blackmail),
            "childabuse" => Ok(Subtype::ChildAbuse),
            "doxxing" | "doxing" => Ok(Subtype::Doxxing),
            "pedophilia" => Ok(Subtype::Pedophilia),
            "stalking" => Ok(Subtype::Stalking),
            _ => Err(format!("unknown harassment subtype {s:?}")),
        }
    }
}

/// Render subtypes as a comma-joined list sorted by display name.
pub fn join_subtypes<'a>(subtypes: impl IntoIterator<Item = &'a Subtype>) -> String {
    let mut labels: Vec<&str> = subtypes.into_iter().map(|s| s.label()).collect();
    labels.sort_unstable();
    labels.dedup();
    labels.join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeLexicons {
    lexicons: BTreeMap<Subtype, KeywordLexicon>,
}

impl SubtypeLexicons {
    pub fn new(lexicons: BTreeMap<Subtype, KeywordLexicon>) -> Result<Self, LexiconError> {
        for subtype in Subtype::ALL {
            if !lexicons.contains_key(&subtype) {
                return Err(LexiconError::MissingSection(subtype.label().to_string()));
            }
        }
        Ok(Self { lexicons })
    }

    pub fn parse(source: &str) -> Result<Self, LexiconError> {
        let mut lexicons: BTreeMap<Subtype, KeywordLexicon> = BTreeMap::new();
        for Section { line, name, entries } in parse_sections(source)? {
            let subtype: Subtype = name
                .parse()
                .map_err(|_| LexiconError::UnknownSection { line, name: name.clone() })?;
            let merged: Vec<String> = lexicons
                .remove(&subtype)
                .map(|l| l.entries)
                .unwrap_or_default()
                .into_iter()
                .chain(entries)
                .collect();
            lexicons.insert(subtype, KeywordLexicon::new(subtype.label(), merged)?);
        }
        Self::new(lexicons)
    }

    pub fn default_lexicons() -> Self {
        Self::parse(DEFAULT_SUBTYPE_LEXICONS).expect("bundled subtype lexicons are valid")
    }

    pub fn get(&self, subtype: Subtype) -> &KeywordLexicon {
        &self.lexicons[&subtype]
    }

    pub fn tag(&self, text: &str) -> BTreeSet<Subtype> {
        let tokens = tokenize(text);
        self.lexicons
            .iter()
            .filter(|(_, lex)| lex.count_hits(&tokens) > 0)
            .map(|(s, _)| *s)
            .collect()
    }
}

pub fn tag_subtypes(text: &str, subs: &SubtypeLexicons) -> BTreeSet<Subtype> {
    subs.tag(text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSample {
    pub reviews: Vec<Review>,
    /// Size of the eligible keyword-matching population sampled from.
    pub population: usize,
    /// Set when no eligible review matched the lexicon.
    pub warning: Option<String>,
}

/// Uniform sample without replacement of eligible, keyword-matching reviews.
/// Output is ordered by review key so the artifact is stable.
pub fn sample_seed_set(
    corpus: &Corpus,
    cfg: &CorpusConfig,
    lex: &KeywordLexicon,
    n: usize,
    rng_seed: u64,
) -> Result<SeedSample, LexiconError> {
    if n == 0 {
        return Err(LexiconError::ZeroSampleSize);
    }
    let detector = StopwordDetector::with_stopword_ratio(cfg.english_stopword_hit_min);
    let mut population: Vec<&Review> = corpus
        .iter()
        .filter(|r| is_eligible_with(r, cfg, &detector) && lex.is_match(&r.text))
        .collect();
    population.sort_by_key(|r| r.key());
    if population.is_empty() {
        return Ok(SeedSample {
            reviews: Vec::new(),
            population: 0,
            warning: Some(format!(
                "no eligible review matches lexicon {:?}",
                lex.name()
            )),
        });
    }
    let size = n.min(population.len());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = sample(&mut rng, population.len(), size).into_vec();
    picked.sort_unstable();
    Ok(SeedSample {
        reviews: picked.into_iter().map(|i| population[i].clone()).collect(),
        population: population.len(),
        warning: None,
    })
}

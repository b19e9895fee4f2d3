//! Synthetic corpora and decision fixtures with known ground truth.

use chrono::NaiveDate;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{JointClass, LabelSet, LabeledExample};
use crate::corpus::{Review, Store};
use crate::expansion::AppRecord;

const FILLER: [&str; 24] = [
    "the app keeps crashing when i open my inbox",
    "support never replies to my tickets",
    "way too many ads between every screen",
    "the subscription price went up again",
    "i cannot upload a profile photo",
    "matches disappear after a day",
    "notifications arrive hours late",
    "the new update made everything slower",
    "login fails unless i reinstall",
    "the chat screen freezes on older phones",
    "most profiles in my area are inactive",
    "the search filters reset every time",
    "i was charged twice this month",
    "the dark mode hurts my eyes",
    "video calls drop after a minute",
    "it drains my battery all day",
    "the verification step never finishes",
    "i get logged out constantly",
    "location settings are confusing",
    "premium features barely work",
    "the feed shows the same people over and over",
    "messages take forever to send",
    "the layout changed for no reason",
    "refunds are impossible to get",
];

const MENACING: [&str; 10] = [
    "some guy sent me unsolicited nudes",
    "i keep getting explicit pictures i never asked for",
    "people send sexual messages all day",
    "a user bullied me with insults about my weight",
    "trolls spam me with vulgar comments",
    "someone sent graphic porn links in chat",
    "i was harassed with obscene messages",
    "a creep keeps sending dick pics",
    "users call me slurs and threaten me",
    "strangers send me lewd videos",
];

const PROFILING: [&str; 10] = [
    "a stalker tracked down my home address",
    "someone threatened to blackmail me with my photos",
    "a predator asked a minor for her location",
    "my personal information was doxxed online",
    "a scammer tried to get my bank details",
    "this person found my instagram and followed me everywhere",
    "he kept asking where i live and work",
    "someone used my pictures for a fake profile",
    "a man demanded money or he would leak my chats",
    "they collected my phone number and kept calling",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpusConfig {
    pub n: usize,
    /// Fraction of reviews whose recorded joint class is replaced by a
    /// different, uniformly chosen class.
    pub noise_rate: f64,
    /// Sampling weights in `JointClass::ALL` order.
    pub class_weights: [f64; 4],
    pub rng_seed: u64,
}

impl Default for PlantedCorpusConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            noise_rate: 0.1,
            class_weights: [0.25; 4],
            rng_seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    /// Texts with their recorded (possibly corrupted) labels.
    pub examples: Vec<LabeledExample>,
    /// Labels the texts were generated from.
    pub clean_labels: Vec<LabelSet>,
    /// Indices of corrupted examples, ascending.
    pub corrupted: Vec<usize>,
}

/// Reviews built from neutral complaint sentences plus one planted phrase
/// per positive head. Exactly `round(n * noise_rate)` labels are corrupted.
pub fn planted_corpus(cfg: &PlantedCorpusConfig) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let total_weight: f64 = cfg.class_weights.iter().sum();
    let mut examples = Vec::with_capacity(cfg.n);
    let mut clean_labels = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let mut draw = rng.gen::<f64>() * total_weight;
        let mut class = JointClass::Neither;
        for (c, w) in JointClass::ALL.iter().zip(cfg.class_weights) {
            if draw < w {
                class = *c;
                break;
            }
            draw -= w;
        }
        let labels = class.labels();
        let n_filler = rng.gen_range(1..=2);
        let mut sentences: Vec<&str> = FILLER.choose_multiple(&mut rng, n_filler).copied().collect();
        if labels.menacing {
            sentences.push(MENACING.choose(&mut rng).copied().unwrap_or_default());
        }
        if labels.profiling {
            sentences.push(PROFILING.choose(&mut rng).copied().unwrap_or_default());
        }
        sentences.shuffle(&mut rng);
        examples.push(LabeledExample::new(format!("p{i:05}"), sentences.join(". "), labels));
        clean_labels.push(labels);
    }
    let n_noisy = ((cfg.n as f64) * cfg.noise_rate).round() as usize;
    let mut corrupted = index::sample(&mut rng, cfg.n, n_noisy.min(cfg.n)).into_vec();
    corrupted.sort_unstable();
    for &i in &corrupted {
        let current = examples[i].labels.joint();
        let others: Vec<JointClass> = JointClass::ALL.into_iter().filter(|c| *c != current).collect();
        examples[i].labels = others.choose(&mut rng).copied().unwrap_or(current).labels();
    }
    PlantedCorpus {
        examples,
        clean_labels,
        corrupted,
    }
}

pub fn fixture_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 6, 1).expect("valid date")
}

/// Per-review decisions for one app with the given joint-class counts.
pub fn decisions_from_counts(
    app: &AppRecord,
    menacing_only: usize,
    profiling_only: usize,
    both: usize,
    neither: usize,
) -> Vec<(Review, LabelSet)> {
    let cells = [
        (JointClass::MenacingOnly, menacing_only),
        (JointClass::ProfilingOnly, profiling_only),
        (JointClass::Both, both),
        (JointClass::Neither, neither),
    ];
    let mut out = Vec::with_capacity(menacing_only + profiling_only + both + neither);
    for (class, count) in cells {
        for _ in 0..count {
            let i = out.len();
            out.push((
                Review {
                    review_id: format!("{}-{i:06}", app.app_id),
                    app_id: app.app_id.clone(),
                    store: app.store,
                    rating: 1,
                    text: String::new(),
                    posted_date: fixture_date(),
                    author_hash: None,
                },
                class.labels(),
            ));
        }
    }
    out
}

/// Decisions for one store reproducing percentages given in tenths of a
/// percent (profiling-only, menacing-only, both), over 1000 flagged reviews.
pub fn store_decisions_per_mille(store: Store, per_mille: [usize; 3]) -> Vec<(Store, LabelSet)> {
    let [p, m, b] = per_mille;
    std::iter::repeat_n(LabelSet::new(false, true), p)
        .chain(std::iter::repeat_n(LabelSet::new(true, false), m))
        .chain(std::iter::repeat_n(LabelSet::new(true, true), b))
        .map(|l| (store, l))
        .collect()
}

const MALE_SENTENCES: [&str; 3] = [
    "he kept sending me messages after i blocked him",
    "some guy would not leave me alone",
    "a man followed my profile everywhere",
];

const FEMALE_SENTENCES: [&str; 3] = [
    "she kept sending me messages after i blocked her",
    "some girl would not leave me alone",
    "a woman followed my profile everywhere",
];

const UNGENDERED_SENTENCES: [&str; 3] = [
    "someone kept sending me messages after i blocked them",
    "a stranger would not leave me alone",
    "an account followed my profile everywhere",
];

/// Review texts naming a male abuser, a female abuser, or nobody, in that
/// order, all carrying `labels`.
pub fn planted_gender_reviews(male: usize, female: usize, unknown: usize, labels: LabelSet) -> Vec<(String, LabelSet)> {
    let pick = |pool: &[&str; 3], n: usize| (0..n).map(|i| pool[i % 3].to_string()).collect::<Vec<_>>();
    pick(&MALE_SENTENCES, male)
        .into_iter()
        .chain(pick(&FEMALE_SENTENCES, female))
        .chain(pick(&UNGENDERED_SENTENCES, unknown))
        .map(|t| (t, labels))
        .collect()
}

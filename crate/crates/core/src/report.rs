//! Per-app aggregation, flagging, tables, distributions and developer
//! notification bundles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{HarassmentMix, LabelSet};
use crate::corpus::{Polarity, Review, Store};
use crate::expansion::AppRecord;
use crate::lexicon::{join_subtypes, Subtype, SubtypeLexicons};

pub const APP_TABLE_FIXTURE: &str = include_str!("../data/app_table.csv");

/// Default "over N" thresholds.
pub const FLAG_THRESHOLD: usize = 50;
pub const TABLE_THRESHOLD: usize = 500;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("app {app}: {reason}")]
    InconsistentCounts { app: String, reason: String },
    #[error("review {review} belongs to app {found}, not {app}")]
    ForeignReview {
        app: String,
        review: String,
        found: String,
    },
    #[error("app {app} has {total} harassment reviews, not over {threshold}; no bundle produced")]
    NotFlagged {
        app: String,
        total: usize,
        threshold: usize,
    },
    #[error("fixture line {line}: {reason}")]
    Fixture { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppHarassmentReport {
    pub app: AppRecord,
    /// Reviews flagged Menacing or Profiling.
    pub total: usize,
    pub menacing: usize,
    pub profiling: usize,
    pub both: usize,
    pub subtypes: BTreeSet<Subtype>,
    pub flagged_50: bool,
    pub flagged_500: bool,
}

impl AppHarassmentReport {
    /// Builds a report from head counts; `total` is the union size.
    pub fn from_counts(
        app: AppRecord,
        menacing: usize,
        profiling: usize,
        both: usize,
        subtypes: BTreeSet<Subtype>,
    ) -> Result<Self, ReportError> {
        if both > menacing.min(profiling) {
            return Err(ReportError::InconsistentCounts {
                app: app.name.clone(),
                reason: format!("both = {both} exceeds min(menacing {menacing}, profiling {profiling})"),
            });
        }
        let total = menacing + profiling - both;
        Ok(Self {
            app,
            total,
            menacing,
            profiling,
            both,
            subtypes,
            flagged_50: total > FLAG_THRESHOLD,
            flagged_500: total > TABLE_THRESHOLD,
        })
    }

    /// Builds a report from a published (total, menacing, profiling) row,
    /// recovering the overlap as `menacing + profiling - total`.
    pub fn from_table_row(
        app: AppRecord,
        total: usize,
        menacing: usize,
        profiling: usize,
        subtypes: BTreeSet<Subtype>,
    ) -> Result<Self, ReportError> {
        let both = (menacing + profiling).checked_sub(total).ok_or_else(|| ReportError::InconsistentCounts {
            app: app.name.clone(),
            reason: format!("menacing {menacing} + profiling {profiling} < total {total}"),
        })?;
        Self::from_counts(app, menacing, profiling, both, subtypes)
    }

    pub fn is_flagged(&self, threshold: usize) -> bool {
        self.total > threshold
    }
}

pub fn aggregate_app(
    app: &AppRecord,
    decisions: &[(Review, LabelSet)],
    subs: &SubtypeLexicons,
) -> Result<AppHarassmentReport, ReportError> {
    let (mut m, mut p, mut b) = (0, 0, 0);
    let mut subtypes = BTreeSet::new();
    for (review, labels) in decisions {
        if review.app_id != app.app_id || review.store != app.store {
            return Err(ReportError::ForeignReview {
                app: format!("{}/{}", app.store, app.app_id),
                review: review.review_id.clone(),
                found: format!("{}/{}", review.store, review.app_id),
            });
        }
        m += labels.menacing as usize;
        p += labels.profiling as usize;
        b += (labels.menacing && labels.profiling) as usize;
        if labels.any() {
            subtypes.extend(subs.tag(&review.text));
        }
    }
    AppHarassmentReport::from_counts(app.clone(), m, p, b, subtypes)
}

/// Harassment mix per key, over flagged items only. Keys with no flagged
/// item are left out.
pub fn mix_by<K: Ord>(items: impl IntoIterator<Item = (K, LabelSet)>) -> BTreeMap<K, HarassmentMix> {
    let mut groups: BTreeMap<K, Vec<LabelSet>> = BTreeMap::new();
    for (k, l) in items {
        groups.entry(k).or_default().push(l);
    }
    groups
        .into_iter()
        .filter_map(|(k, ls)| HarassmentMix::from_labels(&ls).map(|m| (k, m)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDistribution {
    pub stores: BTreeMap<Store, HarassmentMix>,
    /// Stores present in the input without any flagged review.
    pub omitted: Vec<Store>,
}

pub fn store_distribution(decisions: impl IntoIterator<Item = (Store, LabelSet)>) -> StoreDistribution {
    let items: Vec<(Store, LabelSet)> = decisions.into_iter().collect();
    let seen: BTreeSet<Store> = items.iter().map(|(s, _)| *s).collect();
    let stores = mix_by(items);
    let omitted: Vec<Store> = seen.into_iter().filter(|s| !stores.contains_key(s)).collect();
    for s in &omitted {
        tracing::warn!(store = %s, "store has no flagged reviews; omitted from distribution");
    }
    StoreDistribution { stores, omitted }
}

pub fn polarity_distribution(decisions: impl IntoIterator<Item = (Polarity, LabelSet)>) -> BTreeMap<Polarity, HarassmentMix> {
    mix_by(decisions)
}

/// Reports with `total > threshold`, by total descending then name.
pub fn flag_apps(reports: &[AppHarassmentReport], threshold: usize) -> Vec<AppHarassmentReport> {
    let mut out: Vec<AppHarassmentReport> = reports.iter().filter(|r| r.is_flagged(threshold)).cloned().collect();
    out.sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.app.name.cmp(&b.app.name)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("unknown table format {other:?} (expected markdown or csv)")),
        }
    }
}

const TABLE_HEADER: [&str; 5] = ["App Name", "Harassment Types", "Total", "Menacing", "Profiling"];

fn table_cells(r: &AppHarassmentReport) -> [String; 5] {
    [
        r.app.name.clone(),
        join_subtypes(&r.subtypes),
        r.total.to_string(),
        r.menacing.to_string(),
        r.profiling.to_string(),
    ]
}

pub fn render_table(reports: &[AppHarassmentReport], format: TableFormat) -> Result<String, ReportError> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(TABLE_HEADER)?;
            for r in reports {
                w.write_record(table_cells(r))?;
            }
            let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output of utf-8 cells is utf-8"))
        }
        TableFormat::Markdown => {
            let escape = |s: &str| s.replace('|', "\\|");
            let mut out = format!("| {} |\n|---|---|---:|---:|---:|\n", TABLE_HEADER.join(" | "));
            for r in reports {
                let cells = table_cells(r).map(|c| escape(&c));
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            Ok(out)
        }
    }
}

fn redaction_patterns() -> &'static [(Regex, &'static str)] {
    static PATTERNS: OnceLock<Vec<(Regex, &'static str)>> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        vec![
            (Regex::new(r"[\w.+-]+@[\w-]+(\.[\w-]+)+").unwrap(), "[email]"),
            (Regex::new(r"@\w+").unwrap(), "@[user]"),
            (Regex::new(r"https?://\S+").unwrap(), "[link]"),
            (Regex::new(r"\+?\d[\d\s().-]{7,}\d").unwrap(), "[number]"),
        ]
    })
}

/// Masks emails, @handles, links and phone-like numbers.
pub fn redact(text: &str) -> String {
    redaction_patterns()
        .iter()
        .fold(text.to_string(), |acc, (re, with)| re.replace_all(&acc, *with).into_owned())
}

pub const EXCERPT_CHARS: usize = 280;

fn excerpt(text: &str) -> String {
    let clean = redact(text.trim()).replace('\n', " ");
    if clean.chars().count() <= EXCERPT_CHARS {
        clean
    } else {
        let cut: String = clean.chars().take(EXCERPT_CHARS).collect();
        format!("{}...", cut.trim_end())
    }
}

/// A Markdown evidence document for one app: counts, subtypes and up to `k`
/// redacted excerpts. Only review text and date are used; author data never
/// appears.
pub fn notification_bundle(report: &AppHarassmentReport, examples: &[Review], k: usize) -> Result<String, ReportError> {
    if !report.flagged_50 {
        return Err(ReportError::NotFlagged {
            app: report.app.name.clone(),
            total: report.total,
            threshold: FLAG_THRESHOLD,
        });
    }
    let subtypes = if report.subtypes.is_empty() {
        "none identified".to_string()
    } else {
        join_subtypes(&report.subtypes)
    };
    let mut doc = String::new();
    let _ = writeln!(doc, "# Harassment report: {} ({})\n", report.app.name, report.app.store);
    let _ = writeln!(doc, "| Measure | Reviews |\n|---|---:|");
    let _ = writeln!(doc, "| Harassment (total) | {} |", report.total);
    let _ = writeln!(doc, "| Menacing | {} |", report.menacing);
    let _ = writeln!(doc, "| Profiling | {} |", report.profiling);
    let _ = writeln!(doc, "| Both | {} |\n", report.both);
    let _ = writeln!(doc, "Critical harassment types: {subtypes}\n");
    let shown: Vec<&Review> = examples.iter().take(k).collect();
    let _ = writeln!(doc, "## Sample reviews ({} of {})\n", shown.len(), examples.len());
    for (i, r) in shown.iter().enumerate() {
        let _ = writeln!(doc, "{}. ({}, {} stars) \"{}\"", i + 1, r.posted_date, r.rating, excerpt(&r.text));
    }
    Ok(doc)
}

#[derive(Debug, Deserialize)]
struct TableRow {
    store: Store,
    app_name: String,
    harassment_types: String,
    total: usize,
    menacing: usize,
    profiling: usize,
}

/// Stable identifier for a fixture app name.
pub fn app_slug(name: &str) -> String {
    let mut slug = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    slug.trim_end_matches('-').to_string()
}

/// Loads `store,app_name,harassment_types,total,menacing,profiling` rows.
pub fn load_table_fixture<R: Read>(reader: R) -> Result<Vec<AppHarassmentReport>, ReportError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<TableRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| ReportError::Fixture { line, reason: e.to_string() })?;
        let subtypes = row
            .harassment_types
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Subtype>().map_err(|e| ReportError::Fixture { line, reason: e.to_string() }))
            .collect::<Result<BTreeSet<_>, _>>()?;
        let app = AppRecord {
            app_id: app_slug(&row.app_name),
            store: row.store,
            name: row.app_name,
            category: String::new(),
        };
        out.push(AppHarassmentReport::from_table_row(app, row.total, row.menacing, row.profiling, subtypes)?);
    }
    Ok(out)
}

/// The 48 published per-app rows (37 Google Play, 11 App Store).
pub fn app_table_fixture() -> Vec<AppHarassmentReport> {
    load_table_fixture(APP_TABLE_FIXTURE.as_bytes()).expect("bundled table fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn app(name: &str) -> AppRecord {
        AppRecord {
            app_id: app_slug(name),
            store: Store::Apple,
            name: name.into(),
            category: String::new(),
        }
    }

    fn report(name: &str, total: usize) -> AppHarassmentReport {
        AppHarassmentReport::from_counts(app(name), total, 0, 0, BTreeSet::new()).unwrap()
    }

    fn review(id: &str, app_id: &str, text: &str) -> Review {
        Review {
            review_id: id.into(),
            app_id: app_id.into(),
            store: Store::Apple,
            rating: 1,
            text: text.into(),
            posted_date: NaiveDate::from_ymd_opt(2022, 3, 4).unwrap(),
            author_hash: Some("deadbeef".into()),
        }
    }

    #[test]
    fn union_arithmetic_examples() {
        let subs: BTreeSet<Subtype> = [Subtype::Blackmail, Subtype::Pedophilia, Subtype::Stalking].into();
        let r = AppHarassmentReport::from_counts(app("MeetMe"), 632, 1406, 354, subs).unwrap();
        assert_eq!(r.total, 1684);
        assert!(r.flagged_50 && r.flagged_500);
        let zero = AppHarassmentReport::from_counts(app("Z"), 0, 0, 0, BTreeSet::new()).unwrap();
        assert_eq!((zero.total, zero.flagged_50), (0, false));
        assert!(AppHarassmentReport::from_counts(app("X"), 3, 2, 3, BTreeSet::new()).is_err());
        assert!(AppHarassmentReport::from_table_row(app("X"), 10, 3, 2, BTreeSet::new()).is_err());
    }

    #[test]
    fn aggregate_all_both() {
        let a = app("Yubo");
        let decisions: Vec<_> = (0..10)
            .map(|i| (review(&i.to_string(), "yubo", "he tried to blackmail me"), LabelSet::new(true, true)))
            .collect();
        let r = aggregate_app(&a, &decisions, &SubtypeLexicons::default_lexicons()).unwrap();
        assert_eq!((r.total, r.menacing, r.profiling, r.both), (10, 10, 10, 10));
        assert_eq!(r.subtypes, [Subtype::Blackmail].into());
        let foreign = vec![(review("x", "other", ""), LabelSet::NEITHER)];
        assert!(matches!(
            aggregate_app(&a, &foreign, &SubtypeLexicons::default_lexicons()),
            Err(ReportError::ForeignReview { .. })
        ));
    }

    #[test]
    fn subtypes_only_from_flagged_reviews() {
        let a = app("A");
        let decisions = vec![
            (review("1", "a", "a stalker"), LabelSet::NEITHER),
            (review("2", "a", "pedophile in chat"), LabelSet::new(true, false)),
        ];
        let r = aggregate_app(&a, &decisions, &SubtypeLexicons::default_lexicons()).unwrap();
        assert_eq!(r.subtypes, [Subtype::Pedophilia].into());
    }

    #[test]
    fn strict_flagging_and_ordering() {
        let reports = vec![report("c", 50), report("a", 1684), report("d", 3), report("b", 60)];
        let flagged = flag_apps(&reports, 50);
        assert_eq!(flagged.iter().map(|r| r.total).collect::<Vec<_>>(), vec![1684, 60]);
        let ties = vec![report("zed", 70), report("abe", 70)];
        assert_eq!(flag_apps(&ties, 50)[0].app.name, "abe");
        assert!(flag_apps(&[], 50).is_empty());
        assert!(!report("x", 500).flagged_500 && report("x", 501).flagged_500);
    }

    #[test]
    fn distribution_examples() {
        let d = store_distribution([(Store::Google, LabelSet::new(true, false))]);
        assert_eq!(d.stores[&Store::Google].menacing_only, 1.0);
        let thirds = [LabelSet::new(true, false), LabelSet::new(false, true), LabelSet::new(true, true)];
        let d = store_distribution(thirds.iter().map(|l| (Store::Apple, *l)));
        let m = d.stores[&Store::Apple];
        assert!((m.both - 1.0 / 3.0).abs() < 1e-15 && (m.menacing_only - 1.0 / 3.0).abs() < 1e-15);
        let d = store_distribution([(Store::Google, LabelSet::NEITHER)]);
        assert!(d.stores.is_empty());
        assert_eq!(d.omitted, vec![Store::Google]);
    }

    #[test]
    fn table_rendering() {
        let rows = app_table_fixture();
        let meetme: Vec<_> = rows.iter().filter(|r| r.app.store == Store::Apple && r.app.name == "MeetMe").cloned().collect();
        let csv = render_table(&meetme, TableFormat::Csv).unwrap();
        assert_eq!(
            csv,
            "App Name,Harassment Types,Total,Menacing,Profiling\nMeetMe,\"blackmail, pedophilia, stalking\",1684,632,1406\n"
        );
        let md = render_table(&meetme, TableFormat::Markdown).unwrap();
        assert!(md.contains("| MeetMe | blackmail, pedophilia, stalking | 1684 | 632 | 1406 |"));
        assert_eq!(render_table(&[], TableFormat::Csv).unwrap().lines().count(), 1);
        let comma = vec![report("Dating, Inc", 10)];
        assert!(render_table(&comma, TableFormat::Csv).unwrap().contains("\"Dating, Inc\""));
    }

    #[test]
    fn fixture_has_all_rows() {
        let rows = app_table_fixture();
        assert_eq!(rows.len(), 48);
        assert_eq!(rows.iter().filter(|r| r.app.store == Store::Google).count(), 37);
        let once = rows.iter().find(|r| r.app.name == "Once" && r.app.store == Store::Google).unwrap();
        assert_eq!(once.both, 99);
        let tumblr = rows.iter().find(|r| r.app.name == "Tumblr").unwrap();
        assert_eq!(tumblr.both, 66);
        let apple: Vec<_> = rows.iter().filter(|r| r.app.store == Store::Apple).cloned().collect();
        assert_eq!(flag_apps(&apple, 500).len(), 11);
    }

    #[test]
    fn bad_fixture_rows() {
        let bad = "store,app_name,harassment_types,total,menacing,profiling\napple,X,stalking,10,2,3\n";
        assert!(load_table_fixture(bad.as_bytes()).is_err());
        let bad = "store,app_name,harassment_types,total,menacing,profiling\napple,X,arson,1,1,1\n";
        assert!(matches!(load_table_fixture(bad.as_bytes()), Err(ReportError::Fixture { line: 2, .. })));
    }

    #[test]
    fn bundle_contract() {
        let r = AppHarassmentReport::from_counts(app("Wizz"), 60, 10, 5, [Subtype::Stalking].into()).unwrap();
        let examples: Vec<Review> = (0..8)
            .map(|i| review(&i.to_string(), "wizz", &format!("user @creep{i} mailed me at a.b@example.com, call 555 123 4567")))
            .collect();
        let doc = notification_bundle(&r, &examples, 5).unwrap();
        assert_eq!(doc.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 5);
        assert!(!doc.contains("deadbeef") && !doc.contains("@creep") && !doc.contains("example.com"));
        assert!(!doc.contains("555"));
        let all = notification_bundle(&r, &examples[..2], 5).unwrap();
        assert!(all.contains("(2 of 2)"));
        let small = report("tiny", 50);
        assert!(matches!(notification_bundle(&small, &examples, 5), Err(ReportError::NotFlagged { .. })));
    }

    proptest! {
        #[test]
        fn flagging_is_monotone(totals in proptest::collection::vec(0usize..1000, 0..30), t1 in 0usize..1000, t2 in 0usize..1000) {
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let reports: Vec<_> = totals.iter().enumerate().map(|(i, &t)| report(&format!("app{i}"), t)).collect();
            let a: BTreeSet<String> = flag_apps(&reports, lo).into_iter().map(|r| r.app.name).collect();
            let b: BTreeSet<String> = flag_apps(&reports, hi).into_iter().map(|r| r.app.name).collect();
            prop_assert!(b.is_subset(&a));
        }

        #[test]
        fn store_total_is_sum_of_app_totals(apps in proptest::collection::vec(proptest::collection::vec((any::<bool>(), any::<bool>()), 0..20), 1..6)) {
            let subs = SubtypeLexicons::default_lexicons();
            let mut all = Vec::new();
            let mut sum = 0;
            for (i, labels) in apps.iter().enumerate() {
                let a = AppRecord { app_id: format!("a{i}"), ..app("x") };
                let decisions: Vec<_> = labels.iter().enumerate()
                    .map(|(j, &(m, p))| (review(&j.to_string(), &a.app_id, ""), LabelSet::new(m, p)))
                    .collect();
                let r = aggregate_app(&a, &decisions, &subs).unwrap();
                prop_assert_eq!(r.total, r.menacing + r.profiling - r.both);
                sum += r.total;
                all.extend(decisions.into_iter().map(|(_, l)| (Store::Apple, l)));
            }
            let flagged = store_distribution(all).stores.get(&Store::Apple).map_or(0, |m| m.flagged);
            prop_assert_eq!(flagged, sum);
        }
    }
}

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use harassment_core::active_learning::{select_batch, ALConfig, ALState, AnnotationQueue, AuditLog, QueueSnapshot};
use harassment_core::classifier::{
    classify_corpus, cross_validate, select_thresholds, train, Decision, LabelSet, LinearModel, Scorer,
};
use harassment_core::corpus::{Corpus, ImportFormat, Review, Store};
use harassment_core::emotion::{EmotionBackend, ExternalEmotionBackend, LexiconEmotionBackend};
use harassment_core::expansion::{expand_seeds, AppRecord, GraphFixture};
use harassment_core::external::{ExternalScorer, InferenceClient};
use harassment_core::gender::{extract_abuser_gender, gender_distribution, GenderTag, GenderTerms};
use harassment_core::lexicon::{sample_seed_set, SubtypeLexicons};
use harassment_core::report::{flag_apps, notification_bundle, render_table, app_table_fixture, TableFormat};
use harassment_core::summary::{app_reports, emotions_by_head, join_decisions, summarize};
use harassment_service::ServiceConfig;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::io::*;

/// What a command produced, for the run summary.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub details: Value,
}

impl Outcome {
    fn new(artifacts: Vec<PathBuf>, details: Value) -> Self {
        Self { artifacts, details }
    }
}

impl From<StoreArg> for Store {
    fn from(s: StoreArg) -> Self {
        match s {
            StoreArg::Apple => Store::Apple,
            StoreArg::Google => Store::Google,
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Import(_) => "import",
            Command::Expand(_) => "expand",
            Command::SeedSample(_) => "seed-sample",
            Command::Train(_) => "train",
            Command::CrossValidate(_) => "cross-validate",
            Command::AlSelect(_) => "al-select",
            Command::AlAdvance(_) => "al-advance",
            Command::Classify(_) => "classify",
            Command::Emotions(_) => "emotions",
            Command::Gender(_) => "gender",
            Command::Report(_) => "report",
            Command::Bundle(_) => "bundle",
            Command::Serve(_) => "serve",
        }
    }
}

pub fn run(command: Command, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Import(a) => import(a, cfg),
        Command::Expand(a) => expand(a, cfg),
        Command::SeedSample(a) => seed_sample(a, cfg),
        Command::Train(a) => train_cmd(a, cfg),
        Command::CrossValidate(a) => cross_validate_cmd(a, cfg),
        Command::AlSelect(a) => al_select(a, cfg),
        Command::AlAdvance(a) => al_advance(a, cfg),
        Command::Classify(a) => classify(a, cfg),
        Command::Emotions(a) => emotions(a, cfg),
        Command::Gender(a) => gender(a, cfg),
        Command::Report(a) => report(a, cfg),
        Command::Bundle(a) => bundle(a, cfg),
        Command::Serve(a) => serve(a, cfg),
    }
}

fn import(a: ImportArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let corpus_path = require(a.corpus, &cfg.paths.corpus, "--corpus", "corpus")?;
    let format = match a.format {
        Some(DumpFormat::Csv) => ImportFormat::Csv,
        Some(DumpFormat::Jsonl) => ImportFormat::JsonLines,
        None if a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => ImportFormat::Csv,
        None => ImportFormat::JsonLines,
    };
    let dump = File::open(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    ensure_parent(&corpus_path)?;
    let mut corpus = Corpus::open(&corpus_path)?;
    let summary = corpus.import_reviews(dump, format, a.store.into())?;
    Ok(Outcome::new(
        vec![corpus_path],
        json!({
            "imported": summary.imported,
            "duplicates": summary.duplicates,
            "malformed": summary.malformed,
            "corpus_size": corpus.len(),
        }),
    ))
}

fn expand(a: ExpandArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let graph_path = require(a.graph, &cfg.paths.graph, "--graph", "graph")?;
    let out = require(a.out, &cfg.paths.apps, "--out", "apps")?;
    let file = File::open(&graph_path).map_err(|e| CliError::io(&graph_path, e))?;
    let fixture = GraphFixture::from_reader(file)?;
    let ids = expand_seeds(&a.seeds, &fixture.graph(), a.max_apps, a.max_depth)?;
    let (records, unresolved): (Vec<_>, Vec<_>) = ids.iter().partition(|id| fixture.app(id).is_some());
    let records: Vec<AppRecord> = records.into_iter().filter_map(|id| fixture.app(id).cloned()).collect();
    write_json(&out, &records)?;
    Ok(Outcome::new(
        vec![out],
        json!({ "apps": ids, "records": records.len(), "unresolved": unresolved }),
    ))
}

fn seed_sample(a: SeedSampleArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let corpus_path = require(a.corpus, &cfg.paths.corpus, "--corpus", "corpus")?;
    let out = require(a.out, &cfg.paths.seeds, "--out", "seeds")?;
    let lex = load_lexicon(a.lexicon.as_deref().or(cfg.paths.lexicon.as_deref()))?;
    let corpus = load_corpus(&corpus_path)?;
    let sample = sample_seed_set(&corpus, &cfg.corpus, &lex, a.n, cfg.rng_seed)?;
    if let Some(w) = &sample.warning {
        tracing::warn!("{w}");
    }
    write_jsonl(&out, &sample.reviews)?;
    Ok(Outcome::new(
        vec![out],
        json!({
            "requested": a.n,
            "sampled": sample.reviews.len(),
            "population": sample.population,
            "warning": sample.warning,
        }),
    ))
}

fn load_labeled(path: &Path) -> Result<Vec<LabeledReview>, CliError> {
    ensure_file(path)?;
    read_jsonl(path)
}

fn label_counts(labels: impl IntoIterator<Item = LabelSet>) -> Value {
    let (mut n, mut m, mut p, mut both) = (0, 0, 0, 0);
    for l in labels {
        n += 1;
        m += usize::from(l.menacing);
        p += usize::from(l.profiling);
        both += usize::from(l.menacing && l.profiling);
    }
    json!({ "reviews": n, "menacing": m, "profiling": p, "both": both })
}

fn train_cmd(a: TrainArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let labels_path = require(a.labels, &cfg.paths.labels, "--labels", "labels")?;
    let out = require(a.out, &cfg.paths.model, "--out", "model")?;
    let mut tc = cfg.train_config();
    tc.epochs = a.epochs.unwrap_or(tc.epochs);
    let mut targets = cfg.targets;
    targets.menacing = a.recall_menacing.unwrap_or(targets.menacing);
    targets.profiling = a.recall_profiling.unwrap_or(targets.profiling);
    let labeled = load_labeled(&labels_path)?;
    let examples: Vec<_> = labeled.iter().map(LabeledReview::example).collect();
    let mut model = train(&examples, &tc)?;
    let selection = select_thresholds(&model, &examples, targets)?;
    model.thresholds = selection.thresholds;
    let mut json = model.to_json()?;
    json.push('\n');
    write_bytes(&out, json.as_bytes())?;
    Ok(Outcome::new(
        vec![out],
        json!({
            "labels": label_counts(labeled.iter().map(LabeledReview::labels)),
            "epochs": tc.epochs,
            "thresholds": model.thresholds,
            "fallback_heads": selection.fallback_heads,
        }),
    ))
}

fn cross_validate_cmd(a: CrossValidateArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let labels_path = require(a.labels, &cfg.paths.labels, "--labels", "labels")?;
    let out = require(a.out, &cfg.paths.cross_validation, "--out", "cross_validation")?;
    let mut tc = cfg.train_config();
    tc.folds = a.folds.unwrap_or(tc.folds);
    tc.epochs = a.epochs.unwrap_or(tc.epochs);
    let mut targets = cfg.targets;
    targets.menacing = a.recall_menacing.unwrap_or(targets.menacing);
    targets.profiling = a.recall_profiling.unwrap_or(targets.profiling);
    let labeled = load_labeled(&labels_path)?;
    let examples: Vec<_> = labeled.iter().map(LabeledReview::example).collect();
    let cv = cross_validate(&examples, &tc, targets)?;
    write_json(&out, &cv)?;
    Ok(Outcome::new(
        vec![out],
        json!({ "folds": cv.folds.len(), "epochs": tc.epochs, "mean": cv.mean }),
    ))
}

fn load_snapshot(path: &Path) -> Result<QueueSnapshot, CliError> {
    if path.exists() {
        read_json(path)
    } else {
        Ok(QueueSnapshot::default())
    }
}

fn al_select(a: AlSelectArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let state_path = require(a.state, &cfg.paths.al_state, "--state", "al_state")?;
    let queue_path = require(a.queue, &cfg.paths.queue, "--queue", "queue")?;
    let lex = load_lexicon(a.lexicon.as_deref().or(cfg.paths.lexicon.as_deref()))?;
    let snapshot = load_snapshot(&queue_path)?;
    if let Some(round) = snapshot.round {
        return Err(CliError::Domain(format!(
            "round {round} is already open in {}; finish it with al-advance",
            queue_path.display()
        )));
    }
    let initialized = !state_path.exists();
    let state = if initialized {
        let labels_path = require(a.labels, &cfg.paths.labels, "--labels", "labels")?;
        let corpus_path = require(a.corpus, &cfg.paths.corpus, "--corpus", "corpus")?;
        let labeled: Vec<(Review, LabelSet)> =
            load_labeled(&labels_path)?.into_iter().map(LabeledReview::into_pair).collect();
        let corpus = load_corpus(&corpus_path)?;
        let keys: HashSet<_> = labeled.iter().map(|(r, _)| r.key()).collect();
        let unlabeled: Vec<Review> = corpus.eligible(&cfg.corpus).filter(|r| !keys.contains(&r.key())).cloned().collect();
        let al_cfg = ALConfig {
            rounds_total: a.rounds.unwrap_or(cfg.active_learning.rounds_total),
            batch_size: a.batch_size.unwrap_or(cfg.active_learning.batch_size),
            dual_annotation: cfg.active_learning.dual_annotation && !a.single_annotator,
        };
        ALState::new(labeled, unlabeled, al_cfg, cfg.train_config(), cfg.targets)?
    } else {
        ALState::load(&state_path)?
    };
    let queue = AnnotationQueue::from_snapshot(snapshot, AuditLog::in_memory())?;
    let k = a.batch_size.unwrap_or(state.config.batch_size);
    let selection = select_batch(&state, k, &lex)?;
    if let Some(w) = &selection.warning {
        tracing::warn!("{w}");
    }
    queue.open_round(selection.clone())?;
    let mut artifacts = Vec::new();
    if initialized {
        ensure_parent(&state_path)?;
        state.save(&state_path)?;
        artifacts.push(state_path);
    }
    write_json(&queue_path, &queue.snapshot())?;
    artifacts.push(queue_path);
    if let Some(out) = a.out.or_else(|| cfg.paths.batch.clone()) {
        write_json(&out, &selection)?;
        artifacts.push(out);
    }
    Ok(Outcome::new(
        artifacts,
        json!({
            "initialized": initialized,
            "round": selection.round,
            "rounds_total": state.config.rounds_total,
            "tasks": selection.tasks.len(),
            "labeled_pool": state.labeled_pool.len(),
            "unlabeled_pool": state.unlabeled_pool.len(),
            "warning": selection.warning,
        }),
    ))
}

fn al_advance(a: AlAdvanceArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let state_path = require(a.state, &cfg.paths.al_state, "--state", "al_state")?;
    let queue_path = require(a.queue, &cfg.paths.queue, "--queue", "queue")?;
    let lex = load_lexicon(a.lexicon.as_deref().or(cfg.paths.lexicon.as_deref()))?;
    ensure_file(&state_path)?;
    ensure_file(&queue_path)?;
    let state = ALState::load(&state_path)?;
    let snapshot: QueueSnapshot = read_json(&queue_path)?;
    let Some(open) = snapshot.round else {
        return Err(CliError::Domain(format!("no open round in {}; run al-select first", queue_path.display())));
    };
    if open != state.round_index {
        return Err(CliError::Domain(format!(
            "{} has round {open} open but the model state is at round {}",
            queue_path.display(),
            state.round_index
        )));
    }
    let queue = AnnotationQueue::from_snapshot(snapshot, AuditLog::in_memory())?;
    let mut outcome = None;
    let next_round = queue.advance(|complete| -> Result<_, CliError> {
        let mut next = state.clone();
        let summary = next.run_round(&complete)?;
        let selection = if next.rounds_remaining() > 0 {
            Some(select_batch(&next, next.config.batch_size, &lex)?)
        } else {
            None
        };
        outcome = Some((next, summary, selection.clone()));
        Ok(selection)
    })?;
    let (next, summary, selection) = outcome.expect("set when advance succeeds");
    next.save(&state_path)?;
    write_json(&queue_path, &queue.snapshot())?;
    let mut artifacts = vec![state_path, queue_path];
    if let Some(model_path) = a.model.or_else(|| cfg.paths.model.clone()) {
        let mut json = next.model.to_json()?;
        json.push('\n');
        write_bytes(&model_path, json.as_bytes())?;
        artifacts.push(model_path);
    }
    if let (Some(out), Some(sel)) = (a.out.or_else(|| cfg.paths.batch.clone()), &selection) {
        write_json(&out, sel)?;
        artifacts.push(out);
    }
    Ok(Outcome::new(
        artifacts,
        json!({
            "completed": summary,
            "next_round": next_round,
            "rounds_remaining": next.rounds_remaining(),
            "next_tasks": selection.as_ref().map(|s| s.tasks.len()),
        }),
    ))
}

fn load_model(path: &Path) -> Result<LinearModel, CliError> {
    Ok(LinearModel::from_json(&read_string(path)?)?)
}

fn decision_counts(decisions: &[Decision]) -> Value {
    let flagged = decisions.iter().filter(|d| d.menacing || d.profiling).count();
    let mut v = label_counts(decisions.iter().map(Decision::labels));
    v["flagged"] = json!(flagged);
    v
}

fn classify(a: ClassifyArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let corpus_path = require(a.input, &cfg.paths.corpus, "--in", "corpus")?;
    let model_path = require(a.model, &cfg.paths.model, "--model", "model")?;
    let out = require(a.out, &cfg.paths.decisions, "--out", "decisions")?;
    let corpus = load_corpus(&corpus_path)?;
    let model = load_model(&model_path)?;
    let external = a.endpoint.as_deref().map(ExternalScorer::new);
    let scorer: &dyn Scorer = match &external {
        Some(s) => s,
        None => &model,
    };
    let decisions = classify_corpus(&corpus, &cfg.corpus, scorer, &model.thresholds)?;
    write_jsonl(&out, &decisions)?;
    Ok(Outcome::new(
        vec![out],
        json!({
            "corpus_size": corpus.len(),
            "decisions": decision_counts(&decisions),
            "scorer": if external.is_some() { "external" } else { "linear" },
            "thresholds": model.thresholds,
        }),
    ))
}

/// Corpus reviews paired with their decisions, flagged ones only.
fn flagged_reviews(corpus: Option<PathBuf>, decisions: Option<PathBuf>, cfg: &PipelineConfig) -> Result<Vec<(Review, LabelSet)>, CliError> {
    let joined = joined_reviews(corpus, decisions, cfg)?;
    Ok(joined.into_iter().filter(|(_, l)| l.any()).collect())
}

fn joined_reviews(corpus: Option<PathBuf>, decisions: Option<PathBuf>, cfg: &PipelineConfig) -> Result<Vec<(Review, LabelSet)>, CliError> {
    let corpus_path = require(corpus, &cfg.paths.corpus, "--corpus", "corpus")?;
    let decisions_path = require(decisions, &cfg.paths.decisions, "--decisions", "decisions")?;
    let corpus = load_corpus(&corpus_path)?;
    let decisions = load_decisions(&decisions_path)?;
    Ok(join_decisions(&corpus, &decisions)?)
}

fn emotion_backend(endpoint: Option<&str>, lexicon: Option<&Path>) -> Result<Box<dyn EmotionBackend>, CliError> {
    Ok(match (endpoint, lexicon) {
        (Some(url), _) => Box::new(ExternalEmotionBackend::new(InferenceClient::new(url))),
        (None, Some(path)) => Box::new(LexiconEmotionBackend::parse(&read_string(path)?)?),
        (None, None) => Box::new(LexiconEmotionBackend::default_lexicon()),
    })
}

fn gender_terms(path: Option<&Path>) -> Result<GenderTerms, CliError> {
    match path {
        Some(p) => Ok(GenderTerms::parse(&read_string(p)?)?),
        None => Ok(GenderTerms::default_terms()),
    }
}

fn subtype_lexicons(path: Option<&Path>) -> Result<SubtypeLexicons, CliError> {
    match path {
        Some(p) => Ok(SubtypeLexicons::parse(&read_string(p)?)?),
        None => Ok(SubtypeLexicons::default_lexicons()),
    }
}

#[derive(Serialize)]
struct ReviewRecord<'a, T: Serialize> {
    review_id: &'a str,
    app_id: &'a str,
    store: Store,
    menacing: bool,
    profiling: bool,
    #[serde(flatten)]
    value: T,
}

fn record<'a, T: Serialize>(r: &'a Review, l: &LabelSet, value: T) -> ReviewRecord<'a, T> {
    ReviewRecord {
        review_id: &r.review_id,
        app_id: &r.app_id,
        store: r.store,
        menacing: l.menacing,
        profiling: l.profiling,
        value,
    }
}

fn emotions(a: EmotionsArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let out = require(a.out, &cfg.paths.emotions, "--out", "emotions")?;
    let backend = emotion_backend(
        a.endpoint.as_deref(),
        a.emotion_lexicon.as_deref().or(cfg.paths.emotion_lexicon.as_deref()),
    )?;
    let flagged = flagged_reviews(a.corpus, a.decisions, cfg)?;
    let texts: Vec<&str> = flagged.iter().map(|(r, _)| r.text.as_str()).collect();
    let scores = if texts.is_empty() { Vec::new() } else { backend.classify_batch(&texts)? };
    if scores.len() != flagged.len() {
        return Err(CliError::Domain(format!("{} emotion scores for {} reviews", scores.len(), flagged.len())));
    }
    let by_head = emotions_by_head(scores.iter().zip(flagged.iter().map(|(_, l)| l)));
    let reviews: Vec<_> = flagged.iter().zip(&scores).map(|((r, l), s)| record(r, l, s)).collect();
    write_json(&out, &json!({ "by_head": by_head, "reviews": reviews }))?;
    Ok(Outcome::new(
        vec![out],
        json!({ "flagged": flagged.len(), "by_head": by_head }),
    ))
}

fn gender(a: GenderArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let out = require(a.out, &cfg.paths.gender, "--out", "gender")?;
    let terms = gender_terms(a.gender_terms.as_deref().or(cfg.paths.gender_terms.as_deref()))?;
    let flagged = flagged_reviews(a.corpus, a.decisions, cfg)?;
    let tags: Vec<GenderTag> = flagged.iter().map(|(r, _)| extract_abuser_gender(&r.text, &terms)).collect();
    let distribution = gender_distribution(tags.iter().zip(flagged.iter().map(|(_, l)| l)));
    let reviews: Vec<_> = flagged.iter().zip(&tags).map(|((r, l), t)| record(r, l, t)).collect();
    write_json(&out, &json!({ "distribution": distribution, "reviews": reviews }))?;
    Ok(Outcome::new(
        vec![out],
        json!({ "flagged": flagged.len(), "distribution": distribution }),
    ))
}

fn load_apps(path: Option<&Path>) -> Result<Vec<AppRecord>, CliError> {
    match path {
        Some(p) => read_json(p),
        None => Ok(Vec::new()),
    }
}

fn report(a: ReportArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let out = require(a.out, &cfg.paths.table, "--out", "table")?;
    let threshold = a.threshold.unwrap_or(cfg.thresholds.table);
    let mut artifacts = Vec::new();
    let (source, reports) = if a.table_fixture {
        ("table_fixture", app_table_fixture())
    } else {
        let joined = joined_reviews(a.corpus, a.decisions, cfg)?;
        let apps = load_apps(a.apps.as_deref().or(cfg.paths.apps.as_deref()))?;
        let subs = subtype_lexicons(cfg.paths.subtypes.as_deref())?;
        let backend = emotion_backend(a.endpoint.as_deref(), cfg.paths.emotion_lexicon.as_deref())?;
        let terms = gender_terms(cfg.paths.gender_terms.as_deref())?;
        let summary = summarize(&joined, &apps, &subs, backend.as_ref(), &terms)?;
        if let Some(path) = a.summary.or_else(|| cfg.paths.summary.clone()) {
            write_json(&path, &summary)?;
            artifacts.push(path);
        }
        ("decisions", summary.apps)
    };
    let store = a.store.map(Store::from);
    let candidates: Vec<_> = reports.into_iter().filter(|r| store.is_none_or(|s| r.app.store == s)).collect();
    let listed = flag_apps(&candidates, threshold);
    let format = match a.format {
        TableFormatArg::Markdown => TableFormat::Markdown,
        TableFormatArg::Csv => TableFormat::Csv,
    };
    write_bytes(&out, render_table(&listed, format)?.as_bytes())?;
    artifacts.push(out);
    Ok(Outcome::new(
        artifacts,
        json!({
            "source": source,
            "threshold": threshold,
            "store": store,
            "apps": candidates.len(),
            "listed": listed.iter().map(|r| &r.app.name).collect::<Vec<_>>(),
        }),
    ))
}

fn bundle(a: BundleArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let store = Store::from(a.store);
    let joined: Vec<(Review, LabelSet)> = joined_reviews(a.corpus, a.decisions, cfg)?
        .into_iter()
        .filter(|(r, _)| r.store == store && r.app_id == a.app)
        .collect();
    if joined.is_empty() {
        return Err(CliError::Domain(format!("no decisions for app {} ({store})", a.app)));
    }
    let apps = load_apps(a.apps.as_deref().or(cfg.paths.apps.as_deref()))?;
    let subs = subtype_lexicons(cfg.paths.subtypes.as_deref())?;
    let mut report = app_reports(&joined, &apps, &subs)?.remove(0);
    let threshold = cfg.thresholds.flag;
    if report.total < threshold {
        return Err(CliError::Domain(format!(
            "{} has {} harassment reviews, below the flag threshold {threshold}",
            report.app.name, report.total
        )));
    }
    report.flagged_50 = true;
    let examples: Vec<Review> = joined.into_iter().filter(|(_, l)| l.any()).map(|(r, _)| r).collect();
    let doc = notification_bundle(&report, &examples, a.k)?;
    write_bytes(&a.out, doc.as_bytes())?;
    Ok(Outcome::new(
        vec![a.out],
        json!({
            "app": report.app,
            "total": report.total,
            "threshold": threshold,
            "examples": examples.len().min(a.k),
        }),
    ))
}

fn serve(a: ServeArgs, cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let service = ServiceConfig {
        bind: a.bind.unwrap_or(cfg.service.bind),
        state: require(a.state, &cfg.paths.al_state, "--state", "al_state")?,
        queue: require(a.queue, &cfg.paths.queue, "--queue", "queue")?,
        audit: require(a.audit, &cfg.paths.audit, "--audit", "audit")?,
        lexicon: a.lexicon.or_else(|| cfg.paths.lexicon.clone()),
        summary: a.summary.or_else(|| cfg.paths.summary.clone().filter(|p| p.exists())),
        annotators: cfg.service.annotators.clone(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Io(format!("runtime: {e}")))?;
    let addr = runtime.block_on(async {
        let handle = harassment_service::serve(&service).await?;
        let addr = handle.local_addr();
        let mut stdout = std::io::stdout().lock();
        let _ = writeln!(stdout, "{}", json!({ "event": "listening", "addr": addr.to_string() }));
        let _ = stdout.flush();
        drop(stdout);
        harassment_service::shutdown_signal().await;
        tracing::info!("shutting down");
        handle.shutdown().await?;
        Ok::<_, CliError>(addr)
    })?;
    Ok(Outcome::new(
        vec![service.queue, service.audit],
        json!({ "addr": addr.to_string() }),
    ))
}

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use harassment_core::active_learning::{
    select_batch, ALState, ActiveLearningError, AnnotationQueue, AuditLog, QueueSnapshot, RoundSummary,
};
use harassment_core::lexicon::KeywordLexicon;
use harassment_core::report::{app_table_fixture, AppHarassmentReport};
use harassment_core::summary::CorpusSummary;

use crate::{ServiceConfig, ServiceError};

/// Shared by all request handlers.
#[derive(Debug)]
pub struct AppState {
    tokens: HashMap<String, String>,
    pub queue: AnnotationQueue,
    al: Mutex<ALState>,
    pub lexicon: KeywordLexicon,
    pub summary: Option<CorpusSummary>,
    pub table: Vec<AppHarassmentReport>,
    state_path: PathBuf,
    queue_path: PathBuf,
    persist: Mutex<()>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ServiceError + '_ {
    move |e| ServiceError::Io(path.display().to_string(), e)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), ServiceError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Outcome of `POST /rounds/advance`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AdvanceOutcome {
    pub completed: RoundSummary,
    /// The round now open, if any remain.
    pub round: Option<usize>,
    pub rounds_remaining: usize,
}

impl AppState {
    pub fn load(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        if cfg.annotators.is_empty() {
            return Err(ServiceError::NoTokens);
        }
        let mut tokens = HashMap::new();
        for a in &cfg.annotators {
            if a.token.trim().is_empty() || a.id.trim().is_empty() {
                return Err(ServiceError::Config(format!("annotator {:?} has an empty id or token", a.id)));
            }
            if tokens.insert(a.token.clone(), a.id.clone()).is_some() {
                return Err(ServiceError::Config(format!("token of annotator {:?} is not unique", a.id)));
            }
        }
        let corrupt = |p: &Path, m: String| ServiceError::CorruptState(p.display().to_string(), m);
        let al = ALState::load(&cfg.state).map_err(|e| match e {
            ActiveLearningError::Audit(io) => ServiceError::Io(cfg.state.display().to_string(), io),
            other => corrupt(&cfg.state, other.to_string()),
        })?;
        let lexicon = match &cfg.lexicon {
            Some(p) => {
                let source = fs::read_to_string(p).map_err(io_err(p))?;
                KeywordLexicon::parse("harassment", &source).map_err(|e| ServiceError::Config(e.to_string()))?
            }
            None => KeywordLexicon::default_harassment(),
        };
        let summary = match &cfg.summary {
            Some(p) => {
                let source = fs::read_to_string(p).map_err(io_err(p))?;
                Some(serde_json::from_str(&source).map_err(|e| corrupt(p, e.to_string()))?)
            }
            None => None,
        };
        let audit = AuditLog::open(&cfg.audit).map_err(io_err(&cfg.audit))?;
        let fresh = !cfg.queue.exists();
        let queue = if fresh {
            AnnotationQueue::new(audit)
        } else {
            let source = fs::read_to_string(&cfg.queue).map_err(io_err(&cfg.queue))?;
            let snapshot: QueueSnapshot =
                serde_json::from_str(&source).map_err(|e| corrupt(&cfg.queue, e.to_string()))?;
            if let Some(round) = snapshot.round {
                if round != al.round_index {
                    return Err(corrupt(
                        &cfg.queue,
                        format!("open round {round} but the model state is at round {}", al.round_index),
                    ));
                }
            }
            AnnotationQueue::from_snapshot(snapshot, audit).map_err(|e| corrupt(&cfg.queue, e.to_string()))?
        };
        let state = Self {
            tokens,
            queue,
            al: Mutex::new(al),
            lexicon,
            summary,
            table: app_table_fixture(),
            state_path: cfg.state.clone(),
            queue_path: cfg.queue.clone(),
            persist: Mutex::new(()),
        };
        if fresh {
            let al = lock(&state.al);
            if al.rounds_remaining() > 0 {
                state.queue.open_round(select_batch(&al, al.config.batch_size, &state.lexicon)?)?;
            }
            drop(al);
            state.persist_queue()?;
        }
        Ok(state)
    }

    /// Annotator id for a bearer token.
    pub fn annotator(&self, token: &str) -> Option<&str> {
        self.tokens.get(token).map(String::as_str)
    }

    pub fn rounds(&self) -> (usize, usize) {
        let al = lock(&self.al);
        (al.round_index, al.config.rounds_total)
    }

    pub fn persist_queue(&self) -> Result<(), ServiceError> {
        let _guard = lock(&self.persist);
        let json = serde_json::to_string(&self.queue.snapshot()).map_err(|e| ServiceError::Config(e.to_string()))?;
        write_atomic(&self.queue_path, &json)
    }

    /// Retrains on the open round's complete tasks and opens the next round.
    /// Runs with the queue locked; label submissions wait, then see
    /// "round closed".
    pub fn advance(&self) -> Result<AdvanceOutcome, ServiceError> {
        if self.queue.current_round().is_none() {
            let (_, total) = self.rounds();
            return Err(ActiveLearningError::RoundsExhausted(total).into());
        }
        let mut completed = None;
        let round = self.queue.advance(|complete| -> Result<_, ServiceError> {
            let mut al = lock(&self.al);
            let mut next = al.clone();
            let summary = next.run_round(&complete)?;
            let selection = if next.rounds_remaining() > 0 {
                Some(select_batch(&next, next.config.batch_size, &self.lexicon)?)
            } else {
                None
            };
            next.save(&self.state_path)?;
            *al = next;
            completed = Some(summary);
            Ok(selection)
        })?;
        self.persist_queue()?;
        let (done, total) = self.rounds();
        Ok(AdvanceOutcome {
            completed: completed.expect("set when advance succeeds"),
            round,
            rounds_remaining: total - done,
        })
    }

    /// Flushes the audit log and writes the queue snapshot.
    pub fn shutdown(&self) -> Result<(), ServiceError> {
        self.queue.flush_audit().map_err(io_err(Path::new("audit log")))?;
        self.persist_queue()
    }
}

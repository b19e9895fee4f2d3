//! Concurrent annotation queue with an append-only audit log.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::classifier::LabelSet;

use super::agreement::{agreement_report, AgreementReport};
use super::state::BatchSelection;
use super::task::{resolve_conflict, submit_label, AnnotationTask, TaskStatus};
use super::ActiveLearningError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub task_id: String,
    pub annotator: String,
    /// `label` or `resolve`.
    pub action: String,
    pub label: LabelSet,
    pub timestamp: DateTime<Utc>,
}

/// JSON-lines audit trail. Every accepted submission is written and flushed
/// before the submission takes effect.
#[derive(Debug)]
pub struct AuditLog {
    path: Option<PathBuf>,
    writer: Option<BufWriter<File>>,
    entries: usize,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            writer: None,
            entries: 0,
        }
    }

    /// Opens `path` for appending; existing entries are counted.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let entries = if path.exists() { Self::read(&path)?.len() } else { 0 };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path: Some(path),
            writer: Some(BufWriter::new(file)),
            entries,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> io::Result<Vec<AuditEntry>> {
        let reader = BufReader::new(File::open(path)?);
        let mut out = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(&line).map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("audit line {}: {e}", i + 1))
            })?;
            out.push(entry);
        }
        Ok(out)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    pub fn append(&mut self, entry: &AuditEntry) -> io::Result<()> {
        if let Some(w) = &mut self.writer {
            let line = serde_json::to_string(entry).map_err(io::Error::other)?;
            writeln!(w, "{line}")?;
            w.flush()?;
        }
        self.entries += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        match &mut self.writer {
            Some(w) => w.flush(),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueueSnapshot {
    pub round: Option<usize>,
    pub tasks: Vec<AnnotationTask>,
    /// Tasks of finished rounds.
    pub history: Vec<AnnotationTask>,
}

#[derive(Debug, Default)]
struct Batch {
    round: Option<usize>,
    order: Vec<String>,
    tasks: HashMap<String, Mutex<AnnotationTask>>,
    history: Vec<AnnotationTask>,
    closed: HashSet<String>,
}

impl Batch {
    fn current(&self) -> Vec<AnnotationTask> {
        self.order.iter().map(|id| lock(&self.tasks[id]).clone()).collect()
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Holds the open round's tasks. Submissions take a shared lock on the batch
/// and an exclusive lock on one task; round advancement takes the batch
/// exclusively.
#[derive(Debug)]
pub struct AnnotationQueue {
    batch: RwLock<Batch>,
    audit: Mutex<AuditLog>,
}

impl AnnotationQueue {
    pub fn new(audit: AuditLog) -> Self {
        Self {
            batch: RwLock::new(Batch::default()),
            audit: Mutex::new(audit),
        }
    }

    pub fn from_snapshot(snapshot: QueueSnapshot, audit: AuditLog) -> Result<Self, ActiveLearningError> {
        let queue = Self::new(audit);
        {
            let mut b = queue.batch.write().unwrap_or_else(|e| e.into_inner());
            for t in snapshot.history.iter().chain(&snapshot.tasks) {
                t.validate()?;
            }
            b.closed = snapshot.history.iter().map(|t| t.task_id.clone()).collect();
            b.history = snapshot.history;
            b.round = snapshot.round;
            for t in snapshot.tasks {
                if b.tasks.contains_key(&t.task_id) || b.closed.contains(&t.task_id) {
                    return Err(ActiveLearningError::CorruptState(format!("duplicate task {}", t.task_id)));
                }
                b.order.push(t.task_id.clone());
                b.tasks.insert(t.task_id.clone(), Mutex::new(t));
            }
        }
        Ok(queue)
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Batch> {
        self.batch.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn snapshot(&self) -> QueueSnapshot {
        let b = self.read();
        QueueSnapshot {
            round: b.round,
            tasks: b.current(),
            history: b.history.clone(),
        }
    }

    /// Installs a freshly selected batch when no round is open.
    pub fn open_round(&self, selection: BatchSelection) -> Result<(), ActiveLearningError> {
        let mut b = self.batch.write().unwrap_or_else(|e| e.into_inner());
        if b.round.is_some() {
            return Err(ActiveLearningError::CorruptState("a round is already open".into()));
        }
        install(&mut b, selection)
    }

    pub fn current_round(&self) -> Option<usize> {
        self.read().round
    }

    pub fn tasks(&self) -> Vec<AnnotationTask> {
        self.read().current()
    }

    pub fn task(&self, task_id: &str) -> Option<AnnotationTask> {
        self.read().tasks.get(task_id).map(|t| lock(t).clone())
    }

    /// Up to `n` open tasks this annotator has not labeled, in selection
    /// (uncertainty) order. Calling again without submitting returns the
    /// same tasks.
    pub fn next_tasks(&self, annotator: &str, n: usize) -> Vec<AnnotationTask> {
        let b = self.read();
        b.order
            .iter()
            .map(|id| lock(&b.tasks[id]))
            .filter(|t| matches!(t.status, TaskStatus::Pending | TaskStatus::LabeledOnce) && !t.labeled_by(annotator))
            .take(n)
            .map(|t| t.clone())
            .collect()
    }

    pub fn conflicts(&self) -> Vec<AnnotationTask> {
        self.tasks().into_iter().filter(|t| t.status == TaskStatus::Conflict).collect()
    }

    fn apply(
        &self,
        task_id: &str,
        annotator: &str,
        label: LabelSet,
        action: &'static str,
    ) -> Result<AnnotationTask, ActiveLearningError> {
        let b = self.read();
        let Some(cell) = b.tasks.get(task_id) else {
            return Err(if b.closed.contains(task_id) {
                ActiveLearningError::RoundClosed(task_id.to_string())
            } else {
                ActiveLearningError::TaskNotFound(task_id.to_string())
            });
        };
        let mut task = lock(cell);
        let mut next = task.clone();
        match action {
            "label" => {
                submit_label(&mut next, annotator, label)?;
            }
            _ => resolve_conflict(&mut next, label)?,
        }
        lock(&self.audit).append(&AuditEntry {
            task_id: task_id.to_string(),
            annotator: annotator.to_string(),
            action: action.to_string(),
            label,
            timestamp: Utc::now(),
        })?;
        *task = next;
        Ok(task.clone())
    }

    pub fn submit(&self, task_id: &str, annotator: &str, label: LabelSet) -> Result<AnnotationTask, ActiveLearningError> {
        self.apply(task_id, annotator, label, "label")
    }

    pub fn resolve(&self, task_id: &str, annotator: &str, label: LabelSet) -> Result<AnnotationTask, ActiveLearningError> {
        self.apply(task_id, annotator, label, "resolve")
    }

    /// Agreement over every doubly-labeled task, finished rounds included.
    pub fn agreement(&self) -> AgreementReport {
        let b = self.read();
        let current = b.current();
        agreement_report(b.history.iter().chain(&current))
    }

    /// Closes the open round exclusively. `f` receives the round's Complete
    /// tasks and returns the next batch (or `None` when no round follows).
    /// If `f` fails the open round is left untouched.
    pub fn advance<F, E>(&self, f: F) -> Result<Option<usize>, E>
    where
        F: FnOnce(Vec<AnnotationTask>) -> Result<Option<BatchSelection>, E>,
        E: From<ActiveLearningError>,
    {
        let mut b = self.batch.write().unwrap_or_else(|e| e.into_inner());
        let current = b.current();
        let complete = current.iter().filter(|t| t.is_complete()).cloned().collect();
        let next = f(complete)?;
        let ids = std::mem::take(&mut b.order);
        b.closed.extend(ids);
        b.tasks.clear();
        b.history.extend(current);
        b.round = None;
        match next {
            Some(selection) => {
                install(&mut b, selection)?;
                Ok(b.round)
            }
            None => Ok(None),
        }
    }

    pub fn audit_len(&self) -> usize {
        lock(&self.audit).len()
    }

    pub fn flush_audit(&self) -> io::Result<()> {
        lock(&self.audit).flush()
    }
}

fn install(b: &mut Batch, selection: BatchSelection) -> Result<(), ActiveLearningError> {
    for t in &selection.tasks {
        if b.closed.contains(&t.task_id) || b.tasks.contains_key(&t.task_id) {
            return Err(ActiveLearningError::CorruptState(format!("task id {} reused", t.task_id)));
        }
    }
    b.round = Some(selection.round);
    for t in selection.tasks {
        b.order.push(t.task_id.clone());
        b.tasks.insert(t.task_id.clone(), Mutex::new(t));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Prediction;
    use crate::corpus::{ReviewKey, Store};
    use std::sync::Arc;

    fn selection(round: usize, n: usize) -> BatchSelection {
        let tasks = (0..n)
            .map(|i| {
                let key = ReviewKey { store: Store::Apple, app_id: "a".into(), review_id: format!("{round}-{i}") };
                let p = Prediction::new(0.5 + i as f64 / (4.0 * n as f64), 0.5).unwrap();
                AnnotationTask::new(format!("r{round}-{i:05}"), key, "t", p, round, true)
            })
            .collect();
        BatchSelection { round, tasks, warning: None }
    }

    const M: LabelSet = LabelSet::new(true, false);

    #[test]
    fn lease_is_idempotent_and_per_annotator() {
        let q = AnnotationQueue::new(AuditLog::in_memory());
        q.open_round(selection(0, 5)).unwrap();
        let a1 = q.next_tasks("alice", 3);
        assert_eq!(a1, q.next_tasks("alice", 3));
        assert_eq!(q.next_tasks("bob", 5).len(), 5);
        q.submit(&a1[0].task_id, "alice", M).unwrap();
        assert_eq!(q.next_tasks("alice", 10).len(), 4);
        assert_eq!(q.next_tasks("bob", 10).len(), 5);
    }

    #[test]
    fn annotator_who_labeled_everything_gets_nothing() {
        let q = AnnotationQueue::new(AuditLog::in_memory());
        q.open_round(selection(0, 3)).unwrap();
        for t in q.next_tasks("a", 10) {
            q.submit(&t.task_id, "a", M).unwrap();
        }
        assert!(q.next_tasks("a", 10).is_empty());
        assert_eq!(q.audit_len(), 3);
    }

    #[test]
    fn closed_round_rejects_labels() {
        let q = AnnotationQueue::new(AuditLog::in_memory());
        q.open_round(selection(0, 2)).unwrap();
        q.submit("r0-00000", "a", M).unwrap();
        q.submit("r0-00000", "b", M).unwrap();
        let got = q
            .advance(|complete| {
                assert_eq!(complete.len(), 1);
                Ok::<_, ActiveLearningError>(Some(selection(1, 2)))
            })
            .unwrap();
        assert_eq!(got, Some(1));
        assert!(matches!(q.submit("r0-00001", "a", M), Err(ActiveLearningError::RoundClosed(_))));
        assert!(matches!(q.submit("nope", "a", M), Err(ActiveLearningError::TaskNotFound(_))));
        assert_eq!(q.audit_len(), 2);
    }

    #[test]
    fn failed_advance_keeps_round() {
        let q = AnnotationQueue::new(AuditLog::in_memory());
        q.open_round(selection(0, 2)).unwrap();
        let r: Result<_, ActiveLearningError> = q.advance(|_| Err(ActiveLearningError::ZeroBatch));
        assert!(r.is_err());
        assert_eq!(q.current_round(), Some(0));
        q.submit("r0-00000", "a", M).unwrap();
    }

    #[test]
    fn concurrent_dual_submissions_lose_nothing() {
        let q = Arc::new(AnnotationQueue::new(AuditLog::in_memory()));
        q.open_round(selection(0, 50)).unwrap();
        let handles: Vec<_> = ["a", "b"]
            .into_iter()
            .map(|who| {
                let q = Arc::clone(&q);
                std::thread::spawn(move || {
                    for t in q.next_tasks(who, 100) {
                        let l = if who == "a" || t.task_id.ends_with('0') { M } else { LabelSet::NEITHER };
                        q.submit(&t.task_id, who, l).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let tasks = q.tasks();
        assert!(tasks.iter().all(|t| t.labels.len() == 2));
        assert!(tasks.iter().all(|t| matches!(t.status, TaskStatus::Complete | TaskStatus::Conflict)));
        assert_eq!(q.audit_len(), 100);
    }

    #[test]
    fn audit_file_and_snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.jsonl");
        let q = AnnotationQueue::new(AuditLog::open(&path).unwrap());
        q.open_round(selection(0, 2)).unwrap();
        q.submit("r0-00000", "a", M).unwrap();
        q.submit("r0-00000", "b", LabelSet::NEITHER).unwrap();
        q.resolve("r0-00000", "a", M).unwrap();
        q.flush_audit().unwrap();
        let entries = AuditLog::read(&path).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[2].action, "resolve");
        let snap = q.snapshot();
        let reopened = AnnotationQueue::from_snapshot(snap.clone(), AuditLog::open(&path).unwrap()).unwrap();
        assert_eq!(reopened.snapshot(), snap);
        assert_eq!(reopened.audit_len(), 3);
    }
}

//! Generation jobs: their wire form and the in-memory registry that
//! publishes every state change to subscribers.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use hypocanvas_core::canvas::{EdgeKind, NodeId};
use hypocanvas_core::generation::{GenerationRequest, GenerationResult, Stage};
use hypocanvas_core::DocumentId;
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Semaphore};
use uuid::Uuid;

use crate::error::ErrorBody;

/// Code carried by jobs that were in flight when the server stopped.
pub const RESTART_CODE: &str = "ServerRestarted";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Prompting,
    AwaitingModel,
    Validating,
    Repairing,
    Compiling,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JobState::Queued => "queued",
            JobState::Prompting => "prompting",
            JobState::AwaitingModel => "awaiting_model",
            JobState::Validating => "validating",
            JobState::Repairing => "repairing",
            JobState::Compiling => "compiling",
            JobState::Done => "done",
            JobState::Failed => "failed",
        }
    }

    fn rank(self) -> u8 {
        self as u8
    }

    /// Whether `next` may follow `self`: forward in the listed order,
    /// `repairing` again after `repairing`, and `failed` from anywhere
    /// non-terminal.
    pub fn may_advance_to(self, next: JobState) -> bool {
        if self.is_terminal() {
            return false;
        }
        next == JobState::Failed
            || next.rank() > self.rank()
            || (self == JobState::Repairing && next == JobState::Repairing)
    }
}

impl From<Stage> for JobState {
    fn from(s: Stage) -> Self {
        match s {
            Stage::Prompting => JobState::Prompting,
            Stage::AwaitingModel => JobState::AwaitingModel,
            Stage::Validating => JobState::Validating,
            Stage::Repairing => JobState::Repairing,
            Stage::Compiling => JobState::Compiling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: JobState,
    pub at: DateTime<Utc>,
}

/// Where the finished chart goes: a new node in `document_id` linked from
/// `source_node` by an edge of `edge_kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub document_id: DocumentId,
    pub source_node: NodeId,
    pub edge_kind: EdgeKind,
}

/// One generation job. `result` and `node_id` are present exactly when
/// `state` is done; `error` exactly when it is failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationJob {
    pub job_id: Uuid,
    pub request: GenerationRequest,
    pub placement: Placement,
    pub state: JobState,
    pub transitions: Vec<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<GenerationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl GenerationJob {
    pub fn queued(request: GenerationRequest, placement: Placement) -> Self {
        Self {
            job_id: Uuid::now_v7(),
            request,
            placement,
            state: JobState::Queued,
            transitions: vec![Transition { state: JobState::Queued, at: Utc::now() }],
            result: None,
            node_id: None,
            error: None,
        }
    }

    /// Applies a transition; refused (returning false) when it would break
    /// the state order.
    pub fn advance(&mut self, state: JobState) -> bool {
        if !self.state.may_advance_to(state) {
            return false;
        }
        self.state = state;
        self.transitions.push(Transition { state, at: Utc::now() });
        true
    }

    pub fn finish(&mut self, result: GenerationResult, node: NodeId) -> bool {
        if !self.advance(JobState::Done) {
            return false;
        }
        self.result = Some(result);
        self.node_id = Some(node);
        true
    }

    pub fn fail(&mut self, error: ErrorBody) -> bool {
        if !self.advance(JobState::Failed) {
            return false;
        }
        self.error = Some(error);
        true
    }
}

/// Running and finished jobs. Each job's latest snapshot lives in a watch
/// channel so event streams see every change after they subscribe.
pub struct JobRegistry {
    jobs: Mutex<HashMap<Uuid, watch::Sender<GenerationJob>>>,
    workers: Arc<Semaphore>,
    unfinished: AtomicUsize,
    max_queued: usize,
}

#[derive(Debug, PartialEq, Eq)]
pub struct QueueFull;

impl JobRegistry {
    pub fn new(max_jobs: usize, max_queued: usize) -> Self {
        Self {
            jobs: Mutex::new(HashMap::new()),
            workers: Arc::new(Semaphore::new(max_jobs)),
            unfinished: AtomicUsize::new(0),
            max_queued,
        }
    }

    pub fn workers(&self) -> Arc<Semaphore> {
        Arc::clone(&self.workers)
    }

    /// Loads a job from storage without counting it against the queue.
    pub fn restore(&self, job: GenerationJob) {
        self.jobs.lock().unwrap().insert(job.job_id, watch::Sender::new(job));
    }

    /// Registers a new queued job, or refuses when the queue is full.
    pub fn admit(&self, job: GenerationJob) -> Result<(), QueueFull> {
        let mut cur = self.unfinished.load(Ordering::SeqCst);
        loop {
            if cur >= self.max_queued {
                return Err(QueueFull);
            }
            match self.unfinished.compare_exchange(cur, cur + 1, Ordering::SeqCst, Ordering::SeqCst) {
                Ok(_) => break,
                Err(actual) => cur = actual,
            }
        }
        self.jobs.lock().unwrap().insert(job.job_id, watch::Sender::new(job));
        Ok(())
    }

    pub fn get(&self, id: Uuid) -> Option<GenerationJob> {
        self.jobs.lock().unwrap().get(&id).map(|tx| tx.borrow().clone())
    }

    pub fn subscribe(&self, id: Uuid) -> Option<watch::Receiver<GenerationJob>> {
        self.jobs.lock().unwrap().get(&id).map(|tx| tx.subscribe())
    }

    /// Runs `f` on the job; when it reports a change, `persist` sees the
    /// new snapshot before subscribers do. Returns the new snapshot.
    pub fn update(
        &self,
        id: Uuid,
        f: impl FnOnce(&mut GenerationJob) -> bool,
        persist: impl FnOnce(&GenerationJob),
    ) -> Option<GenerationJob> {
        let tx = self.jobs.lock().unwrap().get(&id)?.clone();
        let mut next = tx.borrow().clone();
        let was_terminal = next.state.is_terminal();
        if !f(&mut next) {
            return None;
        }
        persist(&next);
        if !was_terminal && next.state.is_terminal() {
            self.unfinished.fetch_sub(1, Ordering::SeqCst);
        }
        tx.send_replace(next.clone());
        Some(next)
    }

    pub fn unfinished(&self) -> usize {
        self.unfinished.load(Ordering::SeqCst)
    }
}

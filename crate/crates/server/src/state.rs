use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::http::StatusCode;
use hypocanvas_core::canvas::{CanvasDocument, Source};
use hypocanvas_core::data::Dataset;
use hypocanvas_core::generation::{GenerationRequest, Generator};
use hypocanvas_core::{DatasetId, DocumentId};
use uuid::Uuid;

use crate::config::{ConfigError, ServerConfig};
use crate::error::{ApiError, ErrorBody};
use crate::jobs::{GenerationJob, JobRegistry, JobState, Placement, QueueFull, RESTART_CODE};
use crate::store::Store;

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("data directory: {0}")]
    Storage(#[from] std::io::Error),
}

type SharedDocument = Arc<tokio::sync::RwLock<CanvasDocument>>;

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

#[doc(hidden)]
pub struct Inner {
    pub(crate) config: ServerConfig,
    pub(crate) store: Store,
    pub(crate) generator: Generator,
    pub(crate) default_provider: String,
    pub(crate) jobs: JobRegistry,
    datasets: RwLock<HashMap<DatasetId, Arc<Dataset>>>,
    documents: RwLock<HashMap<DocumentId, SharedDocument>>,
}

impl std::ops::Deref for AppState {
    type Target = Inner;

    fn deref(&self) -> &Inner {
        &self.0
    }
}

impl AppState {
    /// Loads the data directory. Jobs that were not finished when the
    /// previous process stopped are marked failed with [`RESTART_CODE`].
    pub fn open(config: ServerConfig) -> Result<Self, StartError> {
        config.validate()?;
        let (registry, default_provider) = config.registry()?;
        let (store, loaded) = Store::open(&config.data_dir)?;
        for s in &loaded.skipped {
            tracing::warn!("skipped unreadable record: {s}");
        }
        let jobs = JobRegistry::new(config.max_jobs, config.max_queued);
        for mut job in loaded.jobs {
            if !job.state.is_terminal() {
                let was = job.state;
                job.fail(
                    ErrorBody::new(RESTART_CODE, "the server restarted while this job was in flight")
                        .with_detail(serde_json::json!({ "state": was.as_str() })),
                );
                store.append_job(&job)?;
            }
            jobs.restore(job);
        }
        let datasets = loaded.datasets.into_iter().map(|d| (d.id(), Arc::new(d))).collect();
        let documents = loaded
            .documents
            .into_iter()
            .map(|d| (d.id(), Arc::new(tokio::sync::RwLock::new(d))))
            .collect();
        Ok(Self(Arc::new(Inner {
            config,
            store,
            generator: Generator::new(registry),
            default_provider,
            jobs,
            datasets: RwLock::new(datasets),
            documents: RwLock::new(documents),
        })))
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub(crate) fn dataset(&self, id: DatasetId) -> Result<Arc<Dataset>, ApiError> {
        self.datasets.read().unwrap().get(&id).cloned().ok_or_else(|| ApiError::not_found("UnknownDataset", format!("dataset {id}")))
    }

    pub(crate) fn add_dataset(&self, ds: Dataset) -> Result<Arc<Dataset>, ApiError> {
        self.store.save_dataset(&ds)?;
        let ds = Arc::new(ds);
        self.datasets.write().unwrap().insert(ds.id(), Arc::clone(&ds));
        Ok(ds)
    }

    pub(crate) fn document(&self, id: DocumentId) -> Result<SharedDocument, ApiError> {
        self.documents
            .read()
            .unwrap()
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UnknownDocument", format!("document {id}")))
    }

    pub(crate) fn add_document(&self, doc: CanvasDocument) -> Result<(), ApiError> {
        self.store.save_document(&doc)?;
        self.documents.write().unwrap().insert(doc.id(), Arc::new(tokio::sync::RwLock::new(doc)));
        Ok(())
    }

    /// Applies `f` to a draft of the document when `expected` is the current
    /// version, persists the draft, then publishes it. Any error leaves the
    /// document untouched.
    pub(crate) async fn mutate<T>(
        &self,
        id: DocumentId,
        expected: u64,
        f: impl FnOnce(&mut CanvasDocument) -> Result<T, ApiError>,
    ) -> Result<(T, CanvasDocument), ApiError> {
        let shared = self.document(id)?;
        let mut doc = shared.write().await;
        if doc.doc_version() != expected {
            return Err(ApiError::stale(doc.doc_version(), expected));
        }
        let mut draft = doc.clone();
        let out = f(&mut draft)?;
        self.store.save_document(&draft)?;
        *doc = draft.clone();
        Ok((out, draft))
    }

    /// Admits a job and starts it in the background.
    pub(crate) fn enqueue(&self, request: GenerationRequest, placement: Placement) -> Result<GenerationJob, ApiError> {
        let job = GenerationJob::queued(request, placement);
        self.jobs.admit(job.clone()).map_err(|QueueFull| {
            ApiError::new(StatusCode::TOO_MANY_REQUESTS, "QueueFull", "too many generation jobs are queued")
                .with_detail(serde_json::json!({ "max_queued": self.config.max_queued }))
        })?;
        if let Err(e) = self.store.append_job(&job) {
            self.record(job.job_id, |j| j.fail(ErrorBody::new("StorageError", e.to_string())));
            return Err(e.into());
        }
        let state = self.clone();
        let id = job.job_id;
        tokio::spawn(async move { state.run(id).await });
        Ok(job)
    }

    /// Applies a job update and appends it to the log before publishing.
    fn record(&self, id: Uuid, f: impl FnOnce(&mut GenerationJob) -> bool) -> Option<GenerationJob> {
        self.jobs.update(id, f, |snapshot| {
            if let Err(e) = self.store.append_job(snapshot) {
                tracing::error!("job {id}: could not append to the job log: {e}");
            }
        })
    }

    async fn run(self, id: Uuid) {
        let Ok(_permit) = self.jobs.workers().acquire_owned().await else {
            return;
        };
        let Some(job) = self.jobs.get(id) else { return };
        let dataset = match self.dataset(job.request.dataset_id) {
            Ok(d) => d,
            Err(e) => {
                self.record(id, |j| j.fail(e.body));
                return;
            }
        };

        let worker = self.clone();
        let catalog = Arc::clone(&dataset);
        let request = job.request.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            worker.generator.generate(&request, &catalog, &mut |stage| {
                worker.record(id, |j| j.advance(JobState::from(stage)));
            })
        })
        .await;

        let result = match outcome {
            Ok(Ok(result)) => result,
            Ok(Err(e)) => {
                self.record(id, |j| j.fail(ErrorBody::from(&e)));
                return;
            }
            Err(e) => {
                self.record(id, |j| j.fail(ErrorBody::new("Internal", format!("generation task failed: {e}"))));
                return;
            }
        };

        let placement = job.placement;
        let shared = match self.document(placement.document_id) {
            Ok(d) => d,
            Err(e) => {
                self.record(id, |j| j.fail(e.body));
                return;
            }
        };
        // node, edge and done are committed under one document lock
        let mut doc = shared.write().await;
        let mut draft = doc.clone();
        let source = Source { node: placement.source_node, kind: placement.edge_kind };
        let node = match draft.create_visualization(None, result.spec.clone(), Some(source), &dataset) {
            Ok(n) => n,
            Err(e) => {
                self.record(id, |j| j.fail(ApiError::from(e).body));
                return;
            }
        };
        if let Err(e) = self.store.save_document(&draft) {
            self.record(id, |j| j.fail(ErrorBody::new("StorageError", e.to_string())));
            return;
        }
        *doc = draft;
        self.record(id, |j| j.finish(result, node));
    }
}

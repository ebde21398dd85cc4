use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::parse::parse_model_output;
use super::prompt::assemble_prompt;
use super::provider::{complete_with_timeout, CompletionRequest, ProviderError, ProviderRegistry, RULES_PROVIDER};
use super::rules::rule_based_generate;
use crate::chart::{compile_spec, repair_spec, validate_spec, ChartSpec, RenderPayload, RepairError, MAX_REPAIR_PASSES};
use crate::data::{summarize_dataset, Dataset};
use crate::DatasetId;

/// Source of datasets for the pipeline.
pub trait DatasetCatalog {
    fn dataset(&self, id: DatasetId) -> Option<Arc<Dataset>>;
}

impl DatasetCatalog for Arc<Dataset> {
    fn dataset(&self, id: DatasetId) -> Option<Arc<Dataset>> {
        (self.id() == id).then(|| Arc::clone(self))
    }
}

impl DatasetCatalog for HashMap<DatasetId, Arc<Dataset>> {
    fn dataset(&self, id: DatasetId) -> Option<Arc<Dataset>> {
        self.get(&id).cloned()
    }
}

/// Pipeline progress, reported in non-decreasing order. `Repairing` may be
/// reported once per repair pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Prompting,
    AwaitingModel,
    Validating,
    Repairing,
    Compiling,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Prompting => "prompting",
            Stage::AwaitingModel => "awaiting_model",
            Stage::Validating => "validating",
            Stage::Repairing => "repairing",
            Stage::Compiling => "compiling",
        }
    }
}

fn default_max_repairs() -> usize {
    MAX_REPAIR_PASSES
}

fn default_true() -> bool {
    true
}

fn default_provider() -> String {
    RULES_PROVIDER.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub dataset_id: DatasetId,
    pub goal_text: String,
    /// Present exactly for revisions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_spec: Option<ChartSpec>,
    #[serde(default = "default_provider")]
    pub provider: String,
    #[serde(default = "default_max_repairs")]
    pub max_repair_attempts: usize,
    /// Fall back to the rules generator when the provider fails.
    #[serde(default = "default_true")]
    pub allow_fallback: bool,
}

impl GenerationRequest {
    pub fn fresh(dataset_id: DatasetId, goal: impl Into<String>) -> Self {
        Self {
            dataset_id,
            goal_text: goal.into(),
            parent_spec: None,
            provider: default_provider(),
            max_repair_attempts: MAX_REPAIR_PASSES,
            allow_fallback: true,
        }
    }

    pub fn revision(dataset_id: DatasetId, instruction: impl Into<String>, parent: ChartSpec) -> Self {
        Self { parent_spec: Some(parent), ..Self::fresh(dataset_id, instruction) }
    }

    pub fn with_provider(mut self, provider: impl Into<String>) -> Self {
        self.provider = provider.into();
        self
    }

    pub fn with_max_repair_attempts(mut self, n: usize) -> Self {
        self.max_repair_attempts = n;
        self
    }

    pub fn without_fallback(mut self) -> Self {
        self.allow_fallback = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProvenanceNote {
    Fresh,
    RevisedFromParent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub spec: ChartSpec,
    pub payload: RenderPayload,
    pub provenance_note: ProvenanceNote,
    /// One for the provider call plus one per repair pass.
    pub attempts: usize,
    pub provider_used: String,
    /// Why the requested provider's output was abandoned, when the rules
    /// generator stood in for it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown dataset {0}")]
    UnknownDataset(DatasetId),
    #[error("unknown provider {0:?}")]
    UnknownProvider(String),
    #[error("provider {provider:?} timed out after {after:?}")]
    ProviderTimeout { provider: String, after: Duration },
    #[error("generation failed: {0}")]
    GenerationFailed(String),
}

impl GenerationError {
    pub fn code(&self) -> &'static str {
        match self {
            GenerationError::InvalidRequest(_) => "InvalidRequest",
            GenerationError::UnknownDataset(_) => "UnknownDataset",
            GenerationError::UnknownProvider(_) => "UnknownProvider",
            GenerationError::ProviderTimeout { .. } => "ProviderTimeout",
            GenerationError::GenerationFailed(_) => "GenerationFailed",
        }
    }
}

enum Failure {
    Timeout(Duration),
    Other(String),
}

impl Failure {
    fn describe(&self, provider: &str) -> String {
        match self {
            Failure::Timeout(d) => format!("provider {provider:?} timed out after {d:?}"),
            Failure::Other(s) => s.clone(),
        }
    }
}

struct Progress<'a> {
    last: Option<Stage>,
    sink: &'a mut dyn FnMut(Stage),
}

impl Progress<'_> {
    fn report(&mut self, stage: Stage) {
        let advance = match self.last {
            None => true,
            Some(last) => stage > last || (stage == Stage::Repairing && last == Stage::Repairing),
        };
        if advance {
            self.last = Some(stage);
            (self.sink)(stage);
        }
    }
}

/// Runs generation requests against a provider registry. Cheap to clone and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct Generator {
    registry: Arc<ProviderRegistry>,
}

impl Default for Generator {
    fn default() -> Self {
        Self::new(ProviderRegistry::new())
    }
}

impl Generator {
    pub fn new(registry: ProviderRegistry) -> Self {
        Self { registry: Arc::new(registry) }
    }

    pub fn registry(&self) -> &ProviderRegistry {
        &self.registry
    }

    /// summarize, prompt, call the provider, parse, validate, repair up to
    /// `max_repair_attempts` times, compile. When the provider's output
    /// cannot be turned into a valid chart and fallback is allowed, the
    /// rules generator answers instead.
    pub fn generate(
        &self,
        request: &GenerationRequest,
        catalog: &dyn DatasetCatalog,
        progress: &mut dyn FnMut(Stage),
    ) -> Result<GenerationResult, GenerationError> {
        let goal = request.goal_text.trim();
        if goal.is_empty() {
            return Err(GenerationError::InvalidRequest("goal_text is empty".into()));
        }
        let dataset = catalog
            .dataset(request.dataset_id)
            .ok_or(GenerationError::UnknownDataset(request.dataset_id))?;
        if let Some(parent) = &request.parent_spec {
            let report = validate_spec(parent, &dataset);
            if !report.valid {
                return Err(GenerationError::InvalidRequest(format!("parent spec is invalid: {report}")));
            }
        }
        let provider = self
            .registry
            .get(&request.provider)
            .ok_or_else(|| GenerationError::UnknownProvider(request.provider.clone()))?;
        let provenance_note =
            if request.parent_spec.is_some() { ProvenanceNote::RevisedFromParent } else { ProvenanceNote::Fresh };
        let mut progress = Progress { last: None, sink: progress };

        progress.report(Stage::Prompting);
        let prompt = assemble_prompt(&summarize_dataset(&dataset), goal, request.parent_spec.as_ref());
        let call = CompletionRequest {
            prompt,
            dataset: Arc::clone(&dataset),
            goal: goal.to_string(),
            parent: request.parent_spec.clone(),
        };

        progress.report(Stage::AwaitingModel);
        let failure = match complete_with_timeout(provider, call) {
            Err(ProviderError::Timeout(d)) => Failure::Timeout(d),
            Err(e) => Failure::Other(format!("provider {:?} failed: {e}", request.provider)),
            Ok(text) => match self.finish(&text, &dataset, request.max_repair_attempts, &mut progress) {
                Ok((spec, payload, repairs)) => {
                    return Ok(GenerationResult {
                        spec,
                        payload,
                        provenance_note,
                        attempts: 1 + repairs,
                        provider_used: request.provider.clone(),
                        fallback_reason: None,
                    })
                }
                Err(reason) => Failure::Other(reason),
            },
        };

        if !request.allow_fallback || request.provider == RULES_PROVIDER {
            return Err(match failure {
                Failure::Timeout(after) => GenerationError::ProviderTimeout { provider: request.provider.clone(), after },
                Failure::Other(reason) => GenerationError::GenerationFailed(reason),
            });
        }

        let reason = failure.describe(&request.provider);
        let spec = rule_based_generate(goal, &dataset, request.parent_spec.as_ref())
            .map_err(|e| GenerationError::GenerationFailed(format!("{reason}; rules fallback: {e}")))?;
        let report = validate_spec(&spec, &dataset);
        if !report.valid {
            return Err(GenerationError::GenerationFailed(format!("{reason}; rules fallback produced {report}")));
        }
        progress.report(Stage::Compiling);
        let payload = compile_spec(&spec, &dataset)
            .map_err(|e| GenerationError::GenerationFailed(format!("{reason}; rules fallback: {e}")))?;
        Ok(GenerationResult {
            spec,
            payload,
            provenance_note,
            attempts: 1,
            provider_used: RULES_PROVIDER.into(),
            fallback_reason: Some(reason),
        })
    }

    /// [`generate`](Self::generate) with `parent` as the spec to modify.
    /// `parent` is only read.
    pub fn revise(
        &self,
        parent: &ChartSpec,
        instruction: &str,
        request: &GenerationRequest,
        catalog: &dyn DatasetCatalog,
        progress: &mut dyn FnMut(Stage),
    ) -> Result<GenerationResult, GenerationError> {
        let request = GenerationRequest {
            goal_text: instruction.to_string(),
            parent_spec: Some(parent.clone()),
            ..request.clone()
        };
        self.generate(&request, catalog, progress)
    }

    fn finish(
        &self,
        text: &str,
        dataset: &Dataset,
        max_repairs: usize,
        progress: &mut Progress<'_>,
    ) -> Result<(ChartSpec, RenderPayload, usize), String> {
        progress.report(Stage::Validating);
        let mut spec = parse_model_output(text).map_err(|e| format!("{}: {e}", e.code()))?;
        let mut repairs = 0;
        loop {
            let report = validate_spec(&spec, dataset);
            if report.valid {
                break;
            }
            if repairs == max_repairs {
                return Err(format!("spec still invalid after {repairs} repairs: {report}"));
            }
            progress.report(Stage::Repairing);
            repairs += 1;
            spec = repair_spec(&spec, &report, dataset).map_err(|RepairError::Unrepairable(r)| format!("Unrepairable: {r}"))?;
        }
        progress.report(Stage::Compiling);
        let payload = compile_spec(&spec, dataset).map_err(|e| e.to_string())?;
        Ok((spec, payload, repairs))
    }
}

//! Natural-language goals to validated chart specs: prompt assembly, model
//! providers, tolerant parsing, the rule-based generator and the
//! generate/repair/fallback pipeline.

mod parse;
mod pipeline;
mod prompt;
mod provider;
mod rules;
mod suggest;

pub use parse::{parse_model_output, ParseError};
pub use pipeline::{
    DatasetCatalog, GenerationError, GenerationRequest, GenerationResult, Generator, ProvenanceNote, Stage,
};
pub use prompt::{assemble_prompt, schema_description, PromptBundle};
pub use provider::{
    complete_with_timeout, CompletionRequest, HttpConfig, HttpProvider, ModelProvider, ProviderError,
    ProviderRegistry, RulesProvider, ScriptFixture, ScriptedProvider, DEFAULT_TIMEOUT, RULES_PROVIDER,
};
pub use rules::{match_columns, rule_based_generate, ColumnMatch, RulesError};
pub use suggest::suggest_prompts;

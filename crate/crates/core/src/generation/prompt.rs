use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chart::ChartSpec;
use crate::data::DatasetSummary;

const TEMPLATE: &str = include_str!("prompt_template.txt");

/// Text sent to a model provider.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
}

impl PromptBundle {
    /// SHA-256 over `system`, a NUL byte and `user`, hex encoded. Keys
    /// scripted provider fixtures.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.system.as_bytes());
        h.update([0u8]);
        h.update(self.user.as_bytes());
        hex::encode(h.finalize())
    }
}

fn section(name: &str) -> &'static str {
    let marker = format!("[{name}]\n");
    let start = TEMPLATE.find(&marker).unwrap_or_else(|| panic!("template lacks [{name}]")) + marker.len();
    let rest = &TEMPLATE[start..];
    let end = rest.find("\n[").map_or(rest.len(), |i| i + 1);
    &rest[..end]
}

/// The chart spec schema description embedded in every system prompt.
pub fn schema_description() -> &'static str {
    section("schema").trim_end()
}

/// Builds the prompt for a fresh goal, or for a revision when `parent` is
/// set. Pure: equal inputs give byte-equal bundles.
pub fn assemble_prompt(summary: &DatasetSummary, goal: &str, parent: Option<&ChartSpec>) -> PromptBundle {
    let system = section("system").replace("{{schema}}", schema_description());
    let summary_text = summary.render_text();
    let user = match parent {
        None => section("user").replace("{{summary}}", &summary_text),
        Some(spec) => section("revision")
            .replace("{{summary}}", &summary_text)
            .replace("{{parent}}", &spec.to_json_pretty()),
    };
    // goal goes last so its text is never scanned for placeholders
    let user = user.replace("{{goal}}", goal.trim());
    PromptBundle { system, user }
}

//! A scripted provider that answers with a typo, a slow provider that
//! times out, and the rules fallback standing in for it.

use std::time::Duration;

use hypocanvas_core::generation::{GenerationRequest, Generator, ProviderRegistry, ScriptedProvider};
use hypocanvas_core::sample;

fn main() {
    let ds = std::sync::Arc::new(sample::countries());
    let registry = ProviderRegistry::new()
        .with(ScriptedProvider::new("typo").with_default(
            r#"{"mark": "scatter", "encodings": {"x": {"column": "GDP per capta"}, "y": {"column": "Birth Rate"}}}"#,
        ))
        .with(ScriptedProvider::new("slow").with_default("{}").with_delay(Duration::from_millis(300)).with_timeout(Duration::from_millis(50)));
    let generator = Generator::new(registry);

    for (provider, fallback) in [("typo", true), ("slow", true), ("slow", false)] {
        let mut request = GenerationRequest::fresh(ds.id(), sample::ANALYSIS_QUESTION).with_provider(provider);
        request.allow_fallback = fallback;
        let mut stages = Vec::new();
        let outcome = generator.generate(&request, &ds, &mut |s| stages.push(s.as_str()));
        println!("{provider} (fallback {fallback}): stages {stages:?}");
        match outcome {
            Ok(r) => println!(
                "  {} via {} after {} attempt(s){}",
                r.spec.to_json(),
                r.provider_used,
                r.attempts,
                r.fallback_reason.map(|why| format!(", because {why}")).unwrap_or_default()
            ),
            Err(e) => println!("  failed: {e}"),
        }
    }
}

//! Suggested questions, a fresh chart from a question and two revisions,
//! all through the deterministic rules provider.

use hypocanvas_core::generation::{suggest_prompts, GenerationRequest, Generator};
use hypocanvas_core::sample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = std::sync::Arc::new(sample::countries());
    let generator = Generator::default();

    println!("suggested questions:");
    for q in suggest_prompts(&ds, 5) {
        println!("  - {q}");
    }

    let fresh = generator.generate(&GenerationRequest::fresh(ds.id(), sample::ANALYSIS_QUESTION), &ds, &mut |_| {})?;
    println!("\n{}\n-> {}", sample::ANALYSIS_QUESTION, fresh.spec.to_json());

    let mut parent = fresh.spec;
    for instruction in ["flip it", "label the top and bottom 10%"] {
        let revised = generator.generate(&GenerationRequest::revision(ds.id(), instruction, parent.clone()), &ds, &mut |_| {})?;
        println!("\n{instruction}\n-> {}", revised.spec.to_json());
        parent = revised.spec;
    }
    Ok(())
}

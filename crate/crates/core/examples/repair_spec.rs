//! Parse a faulty model reply, list what is wrong with it and repair it.

use hypocanvas_core::chart::{validate_and_repair, validate_spec, MAX_REPAIR_PASSES};
use hypocanvas_core::generation::parse_model_output;
use hypocanvas_core::sample;

const REPLY: &str = r#"Sure! Here is the chart you asked for:
```json
{"spec_version": 1, "mark": "bar",
 "encodings": {"x": {"column": "contry"}, "y": {"column": "Birth rate"}}}
```"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = sample::countries();
    let spec = parse_model_output(REPLY)?;

    for issue in validate_spec(&spec, &ds).issues {
        println!("{:?} at {}: {} (fix: {:?})", issue.code, issue.path, issue.message, issue.suggested_fix);
    }

    let (fixed, passes) = validate_and_repair(&spec, &ds, MAX_REPAIR_PASSES)?;
    println!("\nrepaired in {passes} pass(es):\n{}", fixed.to_json_pretty());
    Ok(())
}

//! Build a chart spec by hand, validate it and compile it to a Vega-Lite
//! document with inline data.

use hypocanvas_core::chart::{compile_spec, validate_spec, Channel, ChartSpec, Encoding, Scale, Transform};
use hypocanvas_core::sample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = sample::countries();
    let spec = ChartSpec::scatter("GDP per capita", "Birth Rate")
        .with(Channel::Color, Encoding::new("Country"))
        .with_title("Birth rate against GDP per capita")
        .with_transform(Transform::TopkLabel { p: 0.1, channel: None });
    let mut spec = spec;
    if let Some(x) = spec.encodings.get_mut(&Channel::X) {
        x.scale = Some(Scale::Log);
    }

    let report = validate_spec(&spec, &ds);
    println!("valid: {}", report.valid);

    let payload = compile_spec(&spec, &ds)?;
    println!("{} rows, {} labeled", payload.data.len(), payload.labeled_row_count());
    println!("spec hash: {}", spec.content_hash());
    let grammar: serde_json::Value = serde_json::from_str(&payload.grammar_json)?;
    println!("{}", serde_json::to_string_pretty(&grammar)?);
    Ok(())
}

//! A note, a chart generated from it, a revision of the chart, lineage and
//! a serialization round trip.

use hypocanvas_core::canvas::{CanvasDocument, EdgeKind, Point, Source};
use hypocanvas_core::generation::rule_based_generate;
use hypocanvas_core::sample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = sample::countries();
    let mut doc = CanvasDocument::new(ds.id());

    let note = doc.create_note(Point::new(40.0, 40.0), sample::ANALYSIS_QUESTION)?;
    let spec = rule_based_generate(sample::ANALYSIS_QUESTION, &ds, None)?;
    let chart = doc.create_visualization(None, spec.clone(), Some(Source { node: note, kind: EdgeKind::GeneratedFromNote }), &ds)?;
    let flipped = rule_based_generate("flip it", &ds, Some(&spec))?;
    let revision = doc.create_visualization(None, flipped, Some(Source { node: chart, kind: EdgeKind::DerivedFrom }), &ds)?;
    let copy = doc.duplicate_node(revision)?;
    doc.move_node(note, Point::new(0.0, 0.0))?;

    for n in doc.live_nodes() {
        println!("{} {:?} at ({}, {}) z={}", n.id, n.kind(), n.position.x, n.position.y, n.z);
    }
    for e in doc.edges() {
        println!("{} -> {} {:?}", e.from, e.to, e.kind);
    }
    println!("lineage of {revision}: {:?}", doc.lineage(revision)?);
    println!("lineage of {copy}: {:?}", doc.lineage(copy)?);

    let json = doc.to_json_pretty();
    assert_eq!(CanvasDocument::from_json(&json)?, doc);
    println!("doc_version {}, {} bytes serialized, round trip equal", doc.doc_version(), json.len());
    Ok(())
}

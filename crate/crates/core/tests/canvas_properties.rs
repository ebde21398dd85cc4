mod support;

use std::collections::HashMap;

use hypocanvas_core::canvas::{CanvasDocument, CanvasError, EdgeKind, NodeContent, Point, Size, Source};
use hypocanvas_core::chart::ChartSpec;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use support::gen::{self, CanvasOp};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sessions_keep_the_invariants(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let ds = gen::random_numeric_dataset(&mut rng);
        let mut last_version = 0;
        let mut applied = 0u64;
        let mut broken = None;
        let doc = gen::random_canvas_session(&mut rng, &ds, 60, |doc, op| {
            applied += 1;
            let problem = check(doc, op, last_version);
            if broken.is_none() {
                broken = problem.map(|p| format!("after {op:?}: {p}"));
            }
            last_version = doc.doc_version();
        });
        prop_assert!(broken.is_none(), "{}", broken.unwrap());
        // refused operations leave the version alone
        prop_assert_eq!(doc.doc_version(), applied);

        let back = CanvasDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_json(), doc.to_json());
    }
}

fn check(doc: &CanvasDocument, op: &CanvasOp, before: u64) -> Option<String> {
    if doc.doc_version() != before + 1 {
        return Some(format!("version {} after {before}", doc.doc_version()));
    }
    if let Err(e) = doc.check_invariants() {
        return Some(e);
    }
    let mut lineage_parents = HashMap::new();
    for e in doc.edges() {
        // edges always point from an older node to a newer one, so no cycles
        if e.from >= e.to {
            return Some(format!("edge {} -> {} runs backwards", e.from, e.to));
        }
        if e.kind.is_lineage() && lineage_parents.insert(e.to, e.from).is_some() {
            return Some(format!("node {} has two lineage parents", e.to));
        }
    }
    if let CanvasOp::Move(id) = op {
        let top = doc.live_nodes().last().map(|n| n.id);
        if top != Some(*id) {
            return Some(format!("moved node {id} is not on top"));
        }
    }
    None
}

fn two_column_doc() -> (hypocanvas_core::data::Dataset, CanvasDocument) {
    let ds = hypocanvas_core::data::ingest_csv("a,b\n1,2\n3,5\n4,4\n".as_bytes(), "ab").unwrap();
    let doc = CanvasDocument::new(ds.id());
    (ds, doc)
}

#[test]
fn duplicates_are_independent() {
    let (ds, mut doc) = two_column_doc();
    let v = doc.create_visualization(Some(Point::new(10.0, 10.0)), ChartSpec::scatter("a", "b"), None, &ds).unwrap();
    let original = doc.node(v).unwrap().clone();
    let copy = doc.duplicate_node(v).unwrap();

    let c = doc.node(copy).unwrap();
    assert_eq!(c.content, original.content);
    assert_eq!(c.position, Point::new(34.0, 34.0));
    assert!(c.z > original.z);

    doc.move_node(copy, Point::new(-300.0, 5.0)).unwrap();
    doc.resize_node(copy, Size::new(10.0, 10.0)).unwrap();
    doc.delete_node(copy).unwrap();
    assert_eq!(doc.node(v).unwrap(), &original);
    assert_eq!(doc.lineage(copy).unwrap(), vec![v]);
    let edge = doc.edges_of(copy).next().unwrap();
    assert_eq!((edge.from, edge.to, edge.kind), (v, copy, EdgeKind::DuplicatedFrom));
}

#[test]
fn refused_operations_change_nothing() {
    let (ds, mut doc) = two_column_doc();
    let note = doc.create_note(Point::new(0.0, 0.0), "why is b high?").unwrap();
    let v = doc
        .create_visualization(None, ChartSpec::scatter("a", "b"), Some(Source { node: note, kind: EdgeKind::GeneratedFromNote }), &ds)
        .unwrap();
    assert_eq!(doc.node(v).unwrap().position, Point::new(0.0, 96.0));
    let snapshot = doc.to_json();

    let bad = [
        doc.clone().move_node(v, Point::new(f64::NAN, 0.0)).unwrap_err(),
        doc.clone().resize_node(v, Size::new(0.0, 3.0)).unwrap_err(),
        doc.clone().duplicate_node(note).unwrap_err(),
        doc.clone().edit_note(v, "x").unwrap_err(),
        doc.clone().create_note(Point::default(), "  ").unwrap_err(),
        doc.clone()
            .create_visualization(None, ChartSpec::scatter("a", "nope"), None, &ds)
            .unwrap_err(),
        doc.clone()
            .create_visualization(None, ChartSpec::scatter("a", "b"), Some(Source { node: note, kind: EdgeKind::DerivedFrom }), &ds)
            .unwrap_err(),
    ];
    let codes: Vec<&str> = bad.iter().map(CanvasError::code).collect();
    assert_eq!(
        codes,
        ["NonFinitePosition", "NonPositiveSize", "NotAVisualization", "NotANote", "InvalidText", "InvalidSpec", "InvalidEdgeKind"]
    );

    for e in [
        doc.move_node(v, Point::new(f64::NAN, 0.0)).unwrap_err(),
        doc.resize_node(v, Size::new(-1.0, 3.0)).unwrap_err(),
    ] {
        assert!(matches!(e, CanvasError::NonFinitePosition | CanvasError::NonPositiveSize));
    }
    assert_eq!(doc.to_json(), snapshot);

    doc.delete_node(v).unwrap();
    assert_eq!(doc.move_node(v, Point::default()).unwrap_err().code(), "UnknownNode");
    assert!(doc.node(v).unwrap().tombstone);
}

#[test]
fn visualizations_reference_their_spec_hash() {
    let (ds, mut doc) = two_column_doc();
    let spec = ChartSpec::scatter("a", "b");
    let v = doc.create_visualization(None, spec.clone(), None, &ds).unwrap();
    match &doc.node(v).unwrap().content {
        NodeContent::Visualization { spec: s, payload_ref } => {
            assert_eq!(s, &spec);
            assert_eq!(payload_ref, &spec.content_hash());
        }
        other => panic!("{other:?}"),
    }
}

//! Seeded generators for random tables, queries, canvas sessions and
//! adversarial model output.

use std::num::NonZeroUsize;

use chrono::NaiveDate;
use hypocanvas_core::canvas::{CanvasDocument, EdgeKind, NodeId, NodeKind, Point, Size, Source};
use hypocanvas_core::chart::{Channel, ChartSpec, Encoding};
use hypocanvas_core::data::{
    Aggregate, BinSpec, ChartQuery, Column, ColumnType, Dataset, Filter, Predicate, Projection, SortDirection,
    SortSpec, Value,
};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

const WORDS: &[&str] = &["north", "south", "east", "west", "core"];

fn number(rng: &mut StdRng) -> f64 {
    // integers and halves keep sums exact
    f64::from(rng.random_range(-40..=40)) / 2.0
}

fn cell(rng: &mut StdRng, ctype: ColumnType, null_rate: f64) -> Value {
    if rng.random_bool(null_rate) {
        return Value::Null;
    }
    match ctype {
        ColumnType::Quantitative => Value::Number(number(rng)),
        ColumnType::Categorical => Value::Text(WORDS[..rng.random_range(1..=WORDS.len())].choose(rng).unwrap().to_string()),
        ColumnType::Temporal => Value::Date(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(rng.random_range(0..6))),
    }
}

/// Up to 50 rows over 1-2 categorical, 2-3 quantitative and 0-1 temporal
/// columns, with nulls.
pub fn random_dataset(rng: &mut StdRng) -> Dataset {
    let rows = rng.random_range(0..=50);
    let mut types = vec![ColumnType::Categorical; rng.random_range(1..=2)];
    types.extend(vec![ColumnType::Quantitative; rng.random_range(2..=3)]);
    if rng.random_bool(0.5) {
        types.push(ColumnType::Temporal);
    }
    let null_rate = [0.0, 0.1, 0.3].choose(rng).copied().unwrap();
    let columns = types
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let prefix = match t {
                ColumnType::Quantitative => "q",
                ColumnType::Categorical => "c",
                ColumnType::Temporal => "t",
            };
            Column::new(format!("{prefix}{i}"), t, (0..rows).map(|_| cell(rng, t, null_rate)).collect())
        })
        .collect();
    Dataset::from_columns("random", columns).unwrap()
}

fn pick_literal(rng: &mut StdRng, col: &Column) -> Value {
    let present: Vec<&Value> = col.cells.iter().filter(|v| !v.is_null()).collect();
    if !present.is_empty() && rng.random_bool(0.7) {
        return (*present.choose(rng).unwrap()).clone();
    }
    loop {
        let v = cell(rng, col.ctype, 0.0);
        if !v.is_null() {
            return v;
        }
    }
}

fn random_filter(rng: &mut StdRng, ds: &Dataset) -> Filter {
    let col = ds.columns().choose(rng).unwrap();
    let a = pick_literal(rng, col);
    let predicate = if col.ctype == ColumnType::Categorical {
        if rng.random_bool(0.5) { Predicate::Eq(a) } else { Predicate::Ne(a) }
    } else {
        match rng.random_range(0..7) {
            0 => Predicate::Eq(a),
            1 => Predicate::Ne(a),
            2 => Predicate::Lt(a),
            3 => Predicate::Le(a),
            4 => Predicate::Gt(a),
            5 => Predicate::Ge(a),
            _ => {
                let b = pick_literal(rng, col);
                if a <= b { Predicate::InRange(a, b) } else { Predicate::InRange(b, a) }
            }
        }
    };
    Filter { column: col.name.clone(), predicate }
}

/// A well-formed random query over `ds`.
pub fn random_query(rng: &mut StdRng, ds: &Dataset) -> ChartQuery {
    let cols = ds.columns();
    let quant: Vec<&Column> = ds.columns_of_type(ColumnType::Quantitative).collect();
    let mut projections = Vec::new();
    let grouped = rng.random_bool(0.5);
    if grouped {
        for _ in 0..rng.random_range(0..=2) {
            let p = Projection::plain(cols.choose(rng).unwrap().name.clone());
            if !projections.contains(&p) {
                projections.push(p);
            }
        }
        for _ in 0..rng.random_range(1..=2) {
            let agg = *[Aggregate::Sum, Aggregate::Mean, Aggregate::Count, Aggregate::Min, Aggregate::Max]
                .choose(rng)
                .unwrap();
            let col = if agg == Aggregate::Count { cols.choose(rng).unwrap() } else { quant.choose(rng).unwrap() };
            let p = Projection::aggregated(col.name.clone(), agg);
            if !projections.contains(&p) {
                projections.push(p);
            }
        }
    } else {
        for _ in 0..rng.random_range(1..=4) {
            projections.push(Projection::plain(cols.choose(rng).unwrap().name.clone()));
        }
    }

    let filters = (0..rng.random_range(0..=2)).map(|_| random_filter(rng, ds)).collect();
    let bins = rng.random_bool(0.3).then(|| {
        // prefer a projected quantitative column so the bins are visible
        let projected: Vec<&Projection> = projections
            .iter()
            .filter(|p| p.aggregate.is_none() && quant.iter().any(|q| q.name == p.column))
            .collect();
        let column = match projected.choose(rng) {
            Some(p) if rng.random_bool(0.8) => p.column.clone(),
            _ => quant.choose(rng).unwrap().name.clone(),
        };
        BinSpec { column, bin_count: rng.random_range(1..=6) }
    });
    let sort = rng.random_bool(0.5).then(|| {
        let p = projections.choose(rng).unwrap();
        SortSpec {
            column: p.column.clone(),
            aggregate: p.aggregate,
            direction: if rng.random_bool(0.5) { SortDirection::Asc } else { SortDirection::Desc },
        }
    });
    let limit = rng.random_bool(0.3).then(|| NonZeroUsize::new(rng.random_range(1..=10)).unwrap());
    ChartQuery { source: ds.id(), projections, filters, bins, sort, limit }
}

/// 2-5 quantitative columns over up to 20 rows, for correlation checks.
pub fn random_numeric_dataset(rng: &mut StdRng) -> Dataset {
    let rows = rng.random_range(0..=20);
    let k = rng.random_range(2..=5);
    let null_rate = [0.0, 0.15].choose(rng).copied().unwrap();
    let columns = (0..k)
        .map(|i| {
            let constant = rng.random_bool(0.1);
            let c = number(rng);
            let cells = (0..rows)
                .map(|_| if constant { Value::Number(c) } else { cell(rng, ColumnType::Quantitative, null_rate) })
                .collect();
            Column::new(format!("x{i}"), ColumnType::Quantitative, cells)
        })
        .collect();
    Dataset::from_columns("numeric", columns).unwrap()
}

/// One canvas mutation, for reporting.
#[derive(Debug, Clone)]
pub enum CanvasOp {
    Note,
    Chart,
    ChartFromNote(NodeId),
    Revise(NodeId),
    Duplicate(NodeId),
    Move(NodeId),
    Resize(NodeId),
    Delete(NodeId),
    Stale(NodeId),
}

fn random_spec(rng: &mut StdRng, ds: &Dataset) -> ChartSpec {
    let quant: Vec<&Column> = ds.columns_of_type(ColumnType::Quantitative).collect();
    let x = quant.choose(rng).unwrap().name.clone();
    let y = quant.choose(rng).unwrap().name.clone();
    let mut spec = ChartSpec::scatter(x, y);
    if rng.random_bool(0.3) {
        let c = ds.columns().choose(rng).unwrap().name.clone();
        spec = spec.with(Channel::Color, Encoding::new(c));
    }
    spec
}

/// Applies `ops` random operations to a fresh document, calling `after`
/// with the document after each successful operation. Errors from
/// operations on tombstoned or unsuitable nodes are expected and skipped.
pub fn random_canvas_session(
    rng: &mut StdRng,
    ds: &Dataset,
    ops: usize,
    mut after: impl FnMut(&CanvasDocument, &CanvasOp),
) -> CanvasDocument {
    let mut doc = CanvasDocument::new(ds.id());
    let mut ids: Vec<NodeId> = Vec::new();
    for _ in 0..ops {
        let target = ids.choose(rng).copied();
        let pos = Point::new(f64::from(rng.random_range(-500..500)), f64::from(rng.random_range(-500..500)));
        let op = match (rng.random_range(0..9), target) {
            (0, _) | (_, None) => CanvasOp::Note,
            (1, _) => CanvasOp::Chart,
            (2, Some(t)) => CanvasOp::ChartFromNote(t),
            (3, Some(t)) => CanvasOp::Revise(t),
            (4, Some(t)) => CanvasOp::Duplicate(t),
            (5, Some(t)) => CanvasOp::Move(t),
            (6, Some(t)) => CanvasOp::Resize(t),
            (7, Some(t)) => CanvasOp::Delete(t),
            (_, Some(t)) => CanvasOp::Stale(t),
        };
        let result: Result<Option<NodeId>, _> = match &op {
            CanvasOp::Note => doc.create_note(pos, "note").map(Some),
            CanvasOp::Chart => doc.create_visualization(Some(pos), random_spec(rng, ds), None, ds).map(Some),
            CanvasOp::ChartFromNote(t) | CanvasOp::Revise(t) => {
                let kind = match doc.node(*t).map(|n| n.kind()) {
                    Some(NodeKind::Note) => EdgeKind::GeneratedFromNote,
                    _ => EdgeKind::DerivedFrom,
                };
                let position = rng.random_bool(0.5).then_some(pos);
                doc.create_visualization(position, random_spec(rng, ds), Some(Source { node: *t, kind }), ds).map(Some)
            }
            CanvasOp::Duplicate(t) => doc.duplicate_node(*t).map(Some),
            CanvasOp::Move(t) => doc.move_node(*t, pos).map(|_| None),
            CanvasOp::Resize(t) => doc
                .resize_node(*t, Size::new(f64::from(rng.random_range(1..600)), f64::from(rng.random_range(1..600))))
                .map(|_| None),
            CanvasOp::Delete(t) => doc.delete_node(*t).map(|_| None),
            // a move to a non-finite spot must be refused without effect
            CanvasOp::Stale(t) => doc.move_node(*t, Point::new(f64::INFINITY, 0.0)).map(|_| None),
        };
        if let Ok(new) = result {
            if let Some(id) = new {
                ids.push(id);
            }
            after(&doc, &op);
        }
    }
    doc
}

/// Adversarial provider outputs over a dataset with columns `x_name` and
/// `y_name`; case `i` cycles through the fault families.
pub fn adversarial_output(rng: &mut StdRng, i: usize, x_name: &str, y_name: &str) -> String {
    let typo = |rng: &mut StdRng, s: &str| -> String {
        let mut chars: Vec<char> = s.chars().collect();
        for _ in 0..rng.random_range(1..=2) {
            let at = rng.random_range(0..chars.len());
            match rng.random_range(0..3) {
                0 if chars.len() > 3 => {
                    chars.remove(at);
                }
                1 => chars.insert(at, 'q'),
                _ => chars[at] = 'z',
            }
        }
        chars.into_iter().collect()
    };
    let good = ChartSpec::scatter(x_name, y_name).to_json();
    match i % 10 {
        0 => ChartSpec::scatter(typo(rng, x_name), y_name).to_json(),
        1 => ChartSpec::scatter(x_name, typo(rng, y_name)).to_json(),
        2 => ChartSpec::new(hypocanvas_core::chart::Mark::Scatter).with(Channel::X, Encoding::new(x_name)).to_json(),
        3 => format!("```json\n{good}\n```"),
        4 => format!("Sure! Here is the chart you asked for: {good} Let me know if you need more."),
        5 => "I am not able to produce a chart for that request.".to_string(),
        6 => format!("{{\"mark\": \"scatter\", \"encodings\": {{\"x\": {{\"column\": \"{x_name}\"}}"),
        7 => ChartSpec::scatter(x_name, y_name)
            .with(Channel::Color, Encoding::new("definitely not a column"))
            .with_transform(hypocanvas_core::chart::Transform::TopkLabel { p: 0.9, channel: None })
            .to_json(),
        8 => format!("```\n{}\n```", ChartSpec::scatter(typo(rng, x_name), typo(rng, y_name)).to_json()),
        _ => {
            let bytes: Vec<u8> = (0..rng.random_range(0..64)).map(|_| rng.random_range(32..127)).collect();
            String::from_utf8(bytes).unwrap()
        }
    }
}

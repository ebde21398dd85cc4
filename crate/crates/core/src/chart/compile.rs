use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};

use super::lower::{label_pass, spec_to_query};
use super::spec::{Channel, ChartSpec, Encoding, Mark, Scale};
use super::validate::{validate_spec, ValidationReport};
use crate::data::{
    correlation_matrix, execute_query, output_name, quantile_labels, Column, ColumnType, CorrelationMatrix,
    DataTable, Dataset, QuantileLabels, QueryError, StatsError, Value,
};

pub const VEGA_LITE_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

/// Field added to labeled rows of the inline data: `"top"`, `"bottom"` or
/// `"both"`.
pub const LABEL_FIELD: &str = "_label";

/// A compiled chart: the spec, its computed data and a renderer-ready
/// grammar document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderPayload {
    pub spec: ChartSpec,
    pub data: DataTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<QuantileLabels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationMatrix>,
    pub grammar_json: String,
}

impl RenderPayload {
    /// Rows carrying a quantile label annotation.
    pub fn labeled_row_count(&self) -> usize {
        self.labels.as_ref().map_or(0, |l| {
            let mut rows: Vec<usize> = l.top.iter().chain(&l.bottom).copied().collect();
            rows.sort_unstable();
            rows.dedup();
            rows.len()
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("invalid spec: {0}")]
    InvalidSpec(ValidationReport),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Executes a valid spec against `dataset` and renders a Vega-Lite document.
/// Output is a pure function of its inputs.
pub fn compile_spec(spec: &ChartSpec, dataset: &Dataset) -> Result<RenderPayload, CompileError> {
    let report = validate_spec(spec, dataset);
    if !report.valid {
        return Err(CompileError::InvalidSpec(report));
    }
    let query = spec_to_query(spec, dataset.id());
    let data = execute_query(dataset, &query)?;

    let labels = match label_pass(spec) {
        None => None,
        Some(pass) => match quantile_labels(&data, &pass.field, pass.p) {
            Ok(l) => Some(l),
            Err(StatsError::EmptyTable) => Some(QuantileLabels { top: vec![], bottom: vec![] }),
            Err(e) => return Err(e.into()),
        },
    };

    let correlation = if spec.is_matrix() { Some(table_correlation(&data)?) } else { None };

    let grammar = match &correlation {
        Some(m) => matrix_grammar(spec, m),
        None => chart_grammar(spec, dataset, &data, labels.as_ref()),
    };
    let grammar_json = serde_json::to_string(&grammar).expect("grammar serializes");
    Ok(RenderPayload { spec: spec.clone(), data, labels, correlation, grammar_json })
}

fn table_correlation(data: &DataTable) -> Result<CorrelationMatrix, StatsError> {
    let columns = data
        .column_names
        .iter()
        .enumerate()
        .map(|(i, name)| Column::new(name.clone(), ColumnType::Quantitative, data.rows.iter().map(|r| r[i].clone()).collect()))
        .collect();
    let table = Dataset::from_columns("correlation", columns).expect("projected columns form a table");
    let names: Vec<&str> = data.column_names.iter().map(String::as_str).collect();
    correlation_matrix(&table, &names)
}

/// Escapes characters Vega-Lite reads as nested field access.
pub fn escape_field(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if matches!(c, '.' | '[' | ']' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn cell_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Number(n) => json!(n),
        Value::Date(d) => Json::String(d.format("%Y-%m-%d").to_string()),
        Value::Text(s) => Json::String(s.clone()),
    }
}

fn vl_type(ctype: ColumnType) -> &'static str {
    match ctype {
        ColumnType::Quantitative => "quantitative",
        ColumnType::Temporal => "temporal",
        ColumnType::Categorical => "nominal",
    }
}

fn channel_def(spec: &ChartSpec, dataset: &Dataset, enc: &Encoding) -> Map<String, Json> {
    let ctype = dataset.column(&enc.column).map_or(ColumnType::Categorical, |c| c.ctype);
    let field = output_name(&enc.column, enc.aggregate);
    let ty = if spec.mark == Mark::Histogram {
        "ordinal"
    } else if enc.aggregate.is_some() {
        "quantitative"
    } else {
        vl_type(ctype)
    };
    let mut def = Map::new();
    def.insert("field".into(), json!(escape_field(&field)));
    def.insert("type".into(), json!(ty));
    def.insert("title".into(), json!(field));
    if enc.scale == Some(Scale::Log) {
        def.insert("scale".into(), json!({"type": "log"}));
    }
    def
}

fn chart_grammar(spec: &ChartSpec, dataset: &Dataset, data: &DataTable, labels: Option<&QuantileLabels>) -> Json {
    let mut values: Vec<Json> = data
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Json> =
                data.column_names.iter().cloned().zip(row.iter().map(cell_json)).collect();
            Json::Object(obj)
        })
        .collect();
    if let Some(l) = labels {
        for (rows, tag) in [(&l.top, "top"), (&l.bottom, "bottom")] {
            for &r in rows {
                let obj = values[r].as_object_mut().expect("rows are objects");
                let next = match obj.get(LABEL_FIELD) {
                    Some(_) => "both",
                    None => tag,
                };
                obj.insert(LABEL_FIELD.into(), json!(next));
            }
        }
    }

    let mut encoding = Map::new();
    for (&channel, enc) in &spec.encodings {
        let def = channel_def(spec, dataset, enc);
        match channel {
            Channel::Label => {
                encoding.insert("tooltip".into(), Json::Object(def));
            }
            _ => {
                encoding.insert(channel.as_str().into(), Json::Object(def));
            }
        }
    }
    let count_field = |x: &Encoding| escape_field(&output_name(&x.column, Some(crate::data::Aggregate::Count)));
    match spec.mark {
        Mark::Histogram => {
            if let Some(x) = spec.encoding(Channel::X) {
                encoding.insert("y".into(), json!({"field": count_field(x), "type": "quantitative", "title": "count"}));
            }
        }
        Mark::Heatmap if spec.encoding(Channel::Color).is_none() => {
            if let Some(x) = spec.encoding(Channel::X) {
                encoding.insert("color".into(), json!({"field": count_field(x), "type": "quantitative", "title": "count"}));
            }
        }
        _ => {}
    }

    let mark = match spec.mark {
        Mark::Scatter => json!({"type": "point", "filled": true}),
        Mark::Bar | Mark::Histogram => json!({"type": "bar"}),
        Mark::Line => json!({"type": "line", "point": true}),
        Mark::Heatmap => json!({"type": "rect"}),
    };

    let mut doc = Map::new();
    doc.insert("$schema".into(), json!(VEGA_LITE_SCHEMA));
    if !spec.title.is_empty() {
        doc.insert("title".into(), json!(spec.title));
    }
    doc.insert("data".into(), json!({ "values": values }));

    match (labels, label_pass(spec)) {
        (Some(_), Some(pass)) => {
            let text_field = spec
                .encoding(Channel::Label)
                .map_or_else(|| pass.field.clone(), |e| output_name(&e.column, e.aggregate));
            let mut text_enc = Map::new();
            for ch in ["x", "y"] {
                if let Some(def) = encoding.get(ch) {
                    text_enc.insert(ch.into(), def.clone());
                }
            }
            text_enc.insert("text".into(), json!({"field": escape_field(&text_field)}));
            doc.insert(
                "layer".into(),
                json!([
                    {"mark": mark, "encoding": encoding},
                    {
                        "mark": {"type": "text", "dy": -8},
                        "transform": [{"filter": format!("isValid(datum.{LABEL_FIELD})")}],
                        "encoding": text_enc,
                    }
                ]),
            );
        }
        _ => {
            doc.insert("mark".into(), mark);
            doc.insert("encoding".into(), Json::Object(encoding));
        }
    }
    Json::Object(doc)
}

fn matrix_grammar(spec: &ChartSpec, m: &CorrelationMatrix) -> Json {
    let mut values = Vec::with_capacity(m.columns.len() * m.columns.len());
    for (i, row) in m.columns.iter().enumerate() {
        for (j, column) in m.columns.iter().enumerate() {
            values.push(json!({"row": row, "column": column, "correlation": m.get(i, j)}));
        }
    }
    let order = &m.columns;
    let mut doc = Map::new();
    doc.insert("$schema".into(), json!(VEGA_LITE_SCHEMA));
    if !spec.title.is_empty() {
        doc.insert("title".into(), json!(spec.title));
    }
    doc.insert("data".into(), json!({ "values": values }));
    doc.insert(
        "encoding".into(),
        json!({
            "x": {"field": "column", "type": "nominal", "sort": order, "title": null},
            "y": {"field": "row", "type": "nominal", "sort": order, "title": null},
        }),
    );
    doc.insert(
        "layer".into(),
        json!([
            {
                "mark": {"type": "rect"},
                "encoding": {"color": {
                    "field": "correlation", "type": "quantitative",
                    "scale": {"domain": [-1, 1], "scheme": "redblue"}
                }}
            },
            {
                "mark": {"type": "text"},
                "encoding": {"text": {"field": "correlation", "type": "quantitative", "format": ".2f"}}
            }
        ]),
    );
    Json::Object(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::spec::Transform;
    use crate::data::ingest_csv;

    fn grammar(p: &RenderPayload) -> Json {
        serde_json::from_str(&p.grammar_json).unwrap()
    }

    fn ten_rows() -> Dataset {
        let mut csv = String::from("name,gdp,birth\n");
        for (i, b) in [3.0, 9.0, 1.0, 4.0, 5.0, 6.0, 7.0, 8.0, 2.0, 0.5].iter().enumerate() {
            csv.push_str(&format!("c{i},{},{b}\n", i * 10));
        }
        ingest_csv(csv.as_bytes(), "ten").unwrap()
    }

    #[test]
    fn scatter_keeps_every_row() {
        let ds = ingest_csv("gdp,birth\n1,2\n3,4\n5,6\n".as_bytes(), "three").unwrap();
        let p = compile_spec(&ChartSpec::scatter("gdp", "birth"), &ds).unwrap();
        assert_eq!(p.data.len(), 3);
        let g = grammar(&p);
        assert_eq!(g["$schema"], VEGA_LITE_SCHEMA);
        assert_eq!(g["data"]["values"].as_array().unwrap().len(), 3);
        assert_eq!(g["encoding"]["x"]["field"], "gdp");
    }

    #[test]
    fn empty_histogram_is_still_a_document() {
        let ds = Dataset::from_columns("e", vec![Column::new("gdp", ColumnType::Quantitative, vec![])]).unwrap();
        let spec = ChartSpec::new(Mark::Histogram).with(Channel::X, Encoding::new("gdp"));
        let p = compile_spec(&spec, &ds).unwrap();
        assert!(p.data.is_empty());
        assert_eq!(grammar(&p)["mark"]["type"], "bar");
    }

    #[test]
    fn topk_adds_two_annotations_on_ten_rows() {
        let spec = ChartSpec::scatter("gdp", "birth").with_transform(Transform::TopkLabel { p: 0.1, channel: None });
        let p = compile_spec(&spec, &ten_rows()).unwrap();
        let g = grammar(&p);
        let labeled: Vec<&Json> = g["data"]["values"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|v| v.get(LABEL_FIELD).is_some())
            .collect();
        assert_eq!(labeled.len(), 2);
        assert_eq!(p.labeled_row_count(), 2);
        assert_eq!(labeled[0]["birth"], 9.0);
        assert_eq!(labeled[0][LABEL_FIELD], "top");
        assert_eq!(labeled[1][LABEL_FIELD], "bottom");
        assert_eq!(g["layer"][1]["mark"]["type"], "text");
    }

    #[test]
    fn compile_is_byte_deterministic() {
        let spec = ChartSpec::scatter("gdp", "birth").with_transform(Transform::TopkLabel { p: 0.2, channel: None });
        let ds = ten_rows();
        assert_eq!(compile_spec(&spec, &ds).unwrap().grammar_json, compile_spec(&spec, &ds).unwrap().grammar_json);
    }

    #[test]
    fn matrix_payload_is_long_form() {
        let spec = ChartSpec::correlation_heatmap(vec!["gdp".into(), "birth".into()]);
        let p = compile_spec(&spec, &ten_rows()).unwrap();
        let m = p.correlation.as_ref().unwrap();
        assert_eq!(m.get(0, 0), Some(1.0));
        let g = grammar(&p);
        assert_eq!(g["data"]["values"].as_array().unwrap().len(), 4);
        assert_eq!(p.data.len(), 10);
    }

    #[test]
    fn invalid_specs_are_refused() {
        let err = compile_spec(&ChartSpec::scatter("gdp", "nope"), &ten_rows()).unwrap_err();
        assert!(matches!(err, CompileError::InvalidSpec(_)));
    }

    #[test]
    fn field_escaping() {
        assert_eq!(escape_field("a.b[0]"), r"a\.b\[0\]");
        assert_eq!(escape_field("mean(GDP)"), "mean(GDP)");
    }
}

use std::cmp::Ordering;
use std::collections::HashMap;
use std::num::NonZeroUsize;

use serde::{Deserialize, Serialize};

use super::value::parse_date;
use super::{ColumnType, Dataset, Value};
use crate::DatasetId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Sum,
    Mean,
    Count,
    Min,
    Max,
}

impl Aggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::Sum => "sum",
            Aggregate::Mean => "mean",
            Aggregate::Count => "count",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
        }
    }

    /// Everything except `count` needs numeric input.
    pub fn needs_numbers(self) -> bool {
        self != Aggregate::Count
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Projection {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
}

impl Projection {
    pub fn plain(column: impl Into<String>) -> Self {
        Self { column: column.into(), aggregate: None }
    }

    pub fn aggregated(column: impl Into<String>, aggregate: Aggregate) -> Self {
        Self { column: column.into(), aggregate: Some(aggregate) }
    }
}

/// Result column name of a projection: `col` or `agg(col)`.
pub fn output_name(column: &str, aggregate: Option<Aggregate>) -> String {
    match aggregate {
        Some(a) => format!("{}({column})", a.as_str()),
        None => column.to_string(),
    }
}

/// Comparison applied to one column. `in_range` is inclusive on both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "value")]
pub enum Predicate {
    #[serde(rename = "=")]
    Eq(Value),
    #[serde(rename = "!=")]
    Ne(Value),
    #[serde(rename = "<")]
    Lt(Value),
    #[serde(rename = "<=")]
    Le(Value),
    #[serde(rename = ">")]
    Gt(Value),
    #[serde(rename = ">=")]
    Ge(Value),
    #[serde(rename = "in_range")]
    InRange(Value, Value),
}

impl Predicate {
    fn is_ordering(&self) -> bool {
        !matches!(self, Predicate::Eq(_) | Predicate::Ne(_))
    }

    fn literals(&self) -> Vec<&Value> {
        match self {
            Predicate::Eq(v)
            | Predicate::Ne(v)
            | Predicate::Lt(v)
            | Predicate::Le(v)
            | Predicate::Gt(v)
            | Predicate::Ge(v) => vec![v],
            Predicate::InRange(lo, hi) => vec![lo, hi],
        }
    }

    fn map_literals(&self, f: impl Fn(&Value) -> Value) -> Predicate {
        match self {
            Predicate::Eq(v) => Predicate::Eq(f(v)),
            Predicate::Ne(v) => Predicate::Ne(f(v)),
            Predicate::Lt(v) => Predicate::Lt(f(v)),
            Predicate::Le(v) => Predicate::Le(f(v)),
            Predicate::Gt(v) => Predicate::Gt(f(v)),
            Predicate::Ge(v) => Predicate::Ge(f(v)),
            Predicate::InRange(lo, hi) => Predicate::InRange(f(lo), f(hi)),
        }
    }

    /// Null cells never match.
    pub fn matches(&self, cell: &Value) -> bool {
        if cell.is_null() {
            return false;
        }
        match self {
            Predicate::Eq(v) => cell == v,
            Predicate::Ne(v) => cell != v,
            Predicate::Lt(v) => cell < v,
            Predicate::Le(v) => cell <= v,
            Predicate::Gt(v) => cell > v,
            Predicate::Ge(v) => cell >= v,
            Predicate::InRange(lo, hi) => lo <= cell && cell <= hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub column: String,
    #[serde(flatten)]
    pub predicate: Predicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSpec {
    pub column: String,
    pub bin_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortDirection {
    #[default]
    Asc,
    Desc,
}

/// Sorts on a projected result column, identified by its source column and
/// aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortSpec {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    #[serde(default)]
    pub direction: SortDirection,
}

/// Executable data-shaping plan. Stages run in the order
/// filter, bin, group/aggregate, sort, limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartQuery {
    pub source: DatasetId,
    pub projections: Vec<Projection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<Filter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<BinSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sort: Option<SortSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<NonZeroUsize>,
}

impl ChartQuery {
    pub fn new(source: DatasetId, projections: Vec<Projection>) -> Self {
        Self { source, projections, filters: Vec::new(), bins: None, sort: None, limit: None }
    }

    pub fn has_aggregate(&self) -> bool {
        self.projections.iter().any(|p| p.aggregate.is_some())
    }
}

/// Computed rows. Every row has exactly one entry per column name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DataTable {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl DataTable {
    pub fn new(column_names: Vec<String>, rows: Vec<Vec<Value>>) -> Self {
        assert!(
            rows.iter().all(|r| r.len() == column_names.len()),
            "every row must have one entry per column"
        );
        Self { column_names, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("type mismatch on column {column:?}: {detail}")]
    TypeMismatch { column: String, detail: String },
    #[error("bin count must be at least 1, got {0}")]
    InvalidBinCount(usize),
    #[error("sort key {0:?} is not one of the projections")]
    SortKeyNotProjected(String),
}

impl QueryError {
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::UnknownColumn(_) => "UnknownColumn",
            QueryError::TypeMismatch { .. } => "TypeMismatch",
            QueryError::InvalidBinCount(_) => "InvalidBinCount",
            QueryError::SortKeyNotProjected(_) => "SortKeyNotProjected",
        }
    }
}

/// Checks that a predicate's operator and literals fit a column type.
pub(crate) fn check_predicate(ctype: ColumnType, predicate: &Predicate) -> Result<(), String> {
    if ctype == ColumnType::Categorical && predicate.is_ordering() {
        return Err("ordering comparison on a categorical column".into());
    }
    for lit in predicate.literals() {
        let ok = match (ctype, lit) {
            (ColumnType::Quantitative, Value::Number(_)) => true,
            (ColumnType::Temporal, Value::Text(s)) => parse_date(s).is_some(),
            (ColumnType::Temporal, Value::Date(_)) => true,
            (ColumnType::Categorical, Value::Text(_)) => true,
            _ => false,
        };
        if !ok {
            return Err(format!("literal {lit} does not fit a {ctype} column"));
        }
    }
    Ok(())
}

struct Plan {
    projection_columns: Vec<usize>,
    filters: Vec<(usize, Predicate)>,
    bins: Option<(usize, usize)>,
    sort: Option<(usize, SortDirection)>,
}

fn plan(dataset: &Dataset, query: &ChartQuery) -> Result<Plan, QueryError> {
    let lookup = |name: &str| {
        dataset
            .column_index(name)
            .ok_or_else(|| QueryError::UnknownColumn(name.to_string()))
    };
    let mismatch = |column: &str, detail: String| QueryError::TypeMismatch {
        column: column.to_string(),
        detail,
    };

    let mut projection_columns = Vec::with_capacity(query.projections.len());
    for p in &query.projections {
        let idx = lookup(&p.column)?;
        let ctype = dataset.columns()[idx].ctype;
        if let Some(agg) = p.aggregate {
            if agg.needs_numbers() && ctype != ColumnType::Quantitative {
                return Err(mismatch(&p.column, format!("{} needs a quantitative column, got {ctype}", agg.as_str())));
            }
        }
        projection_columns.push(idx);
    }

    let mut filters = Vec::with_capacity(query.filters.len());
    for f in &query.filters {
        let idx = lookup(&f.column)?;
        let ctype = dataset.columns()[idx].ctype;
        check_predicate(ctype, &f.predicate).map_err(|detail| mismatch(&f.column, detail))?;
        let predicate = if ctype == ColumnType::Temporal {
            f.predicate.map_literals(|v| match v {
                Value::Text(s) => parse_date(s).map_or(Value::Null, Value::Date),
                other => other.clone(),
            })
        } else {
            f.predicate.clone()
        };
        filters.push((idx, predicate));
    }

    let bins = match &query.bins {
        None => None,
        Some(b) => {
            let idx = lookup(&b.column)?;
            if dataset.columns()[idx].ctype != ColumnType::Quantitative {
                return Err(mismatch(&b.column, "binning needs a quantitative column".into()));
            }
            if b.bin_count < 1 {
                return Err(QueryError::InvalidBinCount(b.bin_count));
            }
            Some((idx, b.bin_count))
        }
    };

    let sort = match &query.sort {
        None => None,
        Some(s) => {
            lookup(&s.column)?;
            let pos = query
                .projections
                .iter()
                .position(|p| p.column == s.column && p.aggregate == s.aggregate)
                .ok_or_else(|| QueryError::SortKeyNotProjected(output_name(&s.column, s.aggregate)))?;
            Some((pos, s.direction))
        }
    };

    Ok(Plan { projection_columns, filters, bins, sort })
}

/// Runs `query` against `dataset`.
///
/// Binning replaces the bin column's cells with the lower edge of their
/// equal-width bin over the filtered range and drops rows whose bin cell is
/// null. When any projection is aggregated the remaining projections are
/// group keys; groups appear in first-seen order. Aggregates skip null cells
/// and `count` reports the number of non-null cells in its column.
pub fn execute_query(dataset: &Dataset, query: &ChartQuery) -> Result<DataTable, QueryError> {
    let plan = plan(dataset, query)?;
    let columns = dataset.columns();

    let mut rows: Vec<usize> = (0..dataset.row_count())
        .filter(|&r| plan.filters.iter().all(|(c, p)| p.matches(&columns[*c].cells[r])))
        .collect();

    let binner = plan.bins.map(|(col, count)| {
        let cells = &columns[col].cells;
        rows.retain(|&r| !cells[r].is_null());
        let values = rows.iter().filter_map(|&r| cells[r].as_number());
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        (col, EqualWidthBins::new(lo, hi, count))
    });

    let projected: Vec<Vec<Value>> = rows
        .iter()
        .map(|&r| {
            plan.projection_columns
                .iter()
                .map(|&c| match &binner {
                    Some((bc, bins)) if *bc == c => bins.lower_edge(&columns[c].cells[r]),
                    _ => columns[c].cells[r].clone(),
                })
                .collect()
        })
        .collect();

    let mut out = if query.has_aggregate() {
        aggregate_rows(&query.projections, projected)
    } else {
        projected
    };

    if let Some((pos, direction)) = plan.sort {
        out.sort_by(|a, b| {
            let ord = a[pos].cmp(&b[pos]);
            match direction {
                SortDirection::Asc => ord,
                SortDirection::Desc => ord.reverse(),
            }
        });
    }
    if let Some(limit) = query.limit {
        out.truncate(limit.get());
    }

    let names = query.projections.iter().map(|p| output_name(&p.column, p.aggregate)).collect();
    Ok(DataTable::new(names, out))
}

/// `count` bins of equal width starting at `lo`. A value belongs to the
/// last bin whose lower edge it reaches; `hi` falls in the last bin.
pub(crate) struct EqualWidthBins {
    lo: f64,
    width: f64,
    count: usize,
}

impl EqualWidthBins {
    pub(crate) fn new(lo: f64, hi: f64, count: usize) -> Self {
        let width = if lo.is_finite() && hi > lo { (hi - lo) / count as f64 } else { 0.0 };
        Self { lo, width, count }
    }

    pub(crate) fn lower_edge(&self, cell: &Value) -> Value {
        match cell.as_number() {
            None => Value::Null,
            Some(_) if self.width == 0.0 => Value::Number(self.lo),
            Some(v) => {
                let mut idx = (((v - self.lo) / self.width).floor().max(0.0) as usize).min(self.count - 1);
                // settle rounding so that edge(idx) <= v < edge(idx + 1)
                while idx + 1 < self.count && v >= self.edge(idx + 1) {
                    idx += 1;
                }
                while idx > 0 && v < self.edge(idx) {
                    idx -= 1;
                }
                Value::Number(self.edge(idx))
            }
        }
    }

    fn edge(&self, idx: usize) -> f64 {
        self.lo + idx as f64 * self.width
    }
}

fn aggregate_rows(projections: &[Projection], rows: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    let keys: Vec<usize> = (0..projections.len()).filter(|&i| projections[i].aggregate.is_none()).collect();

    let mut order: Vec<Vec<Value>> = Vec::new();
    let mut groups: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
    for (i, row) in rows.iter().enumerate() {
        let key: Vec<Value> = keys.iter().map(|&k| row[k].clone()).collect();
        groups
            .entry(key)
            .or_insert_with_key(|k| {
                order.push(k.clone());
                Vec::new()
            })
            .push(i);
    }
    if keys.is_empty() && order.is_empty() {
        order.push(Vec::new());
        groups.insert(Vec::new(), Vec::new());
    }

    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let mut key_values = key.into_iter();
            projections
                .iter()
                .enumerate()
                .map(|(i, p)| match p.aggregate {
                    None => key_values.next().expect("one key value per key projection"),
                    Some(agg) => apply_aggregate(agg, members.iter().map(|&m| &rows[m][i])),
                })
                .collect()
        })
        .collect()
}

fn apply_aggregate<'a>(agg: Aggregate, cells: impl Iterator<Item = &'a Value>) -> Value {
    let present: Vec<&Value> = cells.filter(|v| !v.is_null()).collect();
    if agg == Aggregate::Count {
        return Value::Number(present.len() as f64);
    }
    let nums: Vec<f64> = present.iter().filter_map(|v| v.as_number()).collect();
    if nums.is_empty() {
        return Value::Null;
    }
    let result = match agg {
        Aggregate::Sum => nums.iter().sum(),
        Aggregate::Mean => nums.iter().sum::<f64>() / nums.len() as f64,
        Aggregate::Min => nums.iter().copied().min_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal)).unwrap(),
        Aggregate::Max => nums.iter().copied().max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal)).unwrap(),
        Aggregate::Count => unreachable!(),
    };
    Value::Number(result)
}

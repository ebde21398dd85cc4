//! Tabular datasets: ingestion, profiling, summaries and chart data queries.

mod ingest;
mod profile;
mod query;
mod stats;
mod value;

use std::collections::HashSet;

use serde::{Deserialize, Deserializer, Serialize};

use crate::DatasetId;

pub use ingest::{infer_column_type, ingest_csv, IngestError};
pub use profile::{profile_column, summarize_dataset, ColumnProfile, ColumnSummary, DatasetSummary};
pub use query::{
    execute_query, output_name, Aggregate, BinSpec, ChartQuery, DataTable, Filter, Predicate,
    Projection, QueryError, SortDirection, SortSpec,
};
pub(crate) use query::check_predicate;
pub use stats::{correlation_matrix, quantile_labels, CorrelationMatrix, QuantileLabels, StatsError};
pub use value::{parse_date, parse_number, ColumnType, Value};

/// One named, typed column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub ctype: ColumnType,
    pub cells: Vec<Value>,
}

impl Column {
    pub fn new(name: impl Into<String>, ctype: ColumnType, cells: Vec<Value>) -> Self {
        Self { name: name.into(), ctype, cells }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("column {column:?} has {found} cells, expected {expected}")]
    RowCountMismatch { column: String, expected: usize, found: usize },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("column {column:?} row {row}: {detail}")]
    BadCell { column: String, row: usize, detail: String },
}

/// An immutable ingested table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    id: DatasetId,
    name: String,
    row_count: usize,
    columns: Vec<Column>,
}

impl Dataset {
    /// Builds a dataset from typed columns, checking the table invariants.
    pub fn from_columns(name: impl Into<String>, columns: Vec<Column>) -> Result<Self, DatasetError> {
        Self::with_id(DatasetId::new(), name, columns)
    }

    pub(crate) fn with_id(
        id: DatasetId,
        name: impl Into<String>,
        columns: Vec<Column>,
    ) -> Result<Self, DatasetError> {
        let row_count = columns.first().map_or(0, |c| c.cells.len());
        let mut seen = HashSet::new();
        for column in &columns {
            if !seen.insert(column.name.trim().to_string()) {
                return Err(DatasetError::DuplicateColumn(column.name.clone()));
            }
            if column.cells.len() != row_count {
                return Err(DatasetError::RowCountMismatch {
                    column: column.name.clone(),
                    expected: row_count,
                    found: column.cells.len(),
                });
            }
            for (row, cell) in column.cells.iter().enumerate() {
                let ok = match (column.ctype, cell) {
                    (_, Value::Null) => true,
                    (ColumnType::Quantitative, Value::Number(n)) => n.is_finite(),
                    (ColumnType::Temporal, Value::Date(_)) => true,
                    (ColumnType::Categorical, Value::Text(_)) => true,
                    _ => false,
                };
                if !ok {
                    return Err(DatasetError::BadCell {
                        column: column.name.clone(),
                        row,
                        detail: format!("{cell:?} is not a {} cell", column.ctype),
                    });
                }
            }
        }
        Ok(Self { id, name: name.into(), row_count, columns })
    }

    pub fn id(&self) -> DatasetId {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    /// Exact-name lookup.
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn columns_of_type(&self, ctype: ColumnType) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(move |c| c.ctype == ctype)
    }

    /// The whole table as a [`DataTable`] in row order.
    pub fn to_table(&self) -> DataTable {
        let rows = (0..self.row_count)
            .map(|r| self.columns.iter().map(|c| c.cells[r].clone()).collect())
            .collect();
        DataTable::new(self.columns.iter().map(|c| c.name.clone()).collect(), rows)
    }
}

#[derive(Deserialize)]
struct RawColumn {
    name: String,
    ctype: ColumnType,
    cells: Vec<Value>,
}

#[derive(Deserialize)]
struct RawDataset {
    id: DatasetId,
    name: String,
    row_count: usize,
    columns: Vec<RawColumn>,
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;

        let raw = RawDataset::deserialize(deserializer)?;
        let columns = raw
            .columns
            .into_iter()
            .map(|c| {
                let cells = if c.ctype == ColumnType::Temporal {
                    c.cells
                        .into_iter()
                        .map(|v| match v {
                            Value::Text(s) => parse_date(&s)
                                .map(Value::Date)
                                .ok_or_else(|| D::Error::custom(format!("bad date {s:?}"))),
                            other => Ok(other),
                        })
                        .collect::<Result<Vec<_>, _>>()?
                } else {
                    c.cells
                };
                Ok(Column::new(c.name, c.ctype, cells))
            })
            .collect::<Result<Vec<_>, D::Error>>()?;
        let dataset = Dataset::with_id(raw.id, raw.name, columns).map_err(D::Error::custom)?;
        if dataset.row_count != raw.row_count {
            return Err(D::Error::custom("row_count does not match column length"));
        }
        Ok(dataset)
    }
}

use std::collections::HashSet;
use std::io::Read;

use super::value::{parse_date, parse_number};
use super::{Column, ColumnType, Dataset, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("input has no header row")]
    EmptyInput,
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("duplicate header {0:?}")]
    DuplicateHeader(String),
    #[error("row {row} is not valid UTF-8")]
    InvalidUtf8 { row: usize },
    #[error("malformed CSV: {0}")]
    Malformed(String),
}

impl IngestError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::EmptyInput => "EmptyInput",
            IngestError::RaggedRows { .. } => "RaggedRows",
            IngestError::DuplicateHeader(_) => "DuplicateHeader",
            IngestError::InvalidUtf8 { .. } => "InvalidUtf8",
            IngestError::Malformed(_) => "MalformedCsv",
        }
    }
}

/// Reads a comma-delimited, RFC-4180 quoted CSV whose first record is the
/// header and infers a type per column.
///
/// Row numbers in errors count data rows from 1 (the header is row 0).
pub fn ingest_csv<R: Read>(raw: R, name: &str) -> Result<Dataset, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(raw);

    let mut records = reader.byte_records();
    let header = match records.next() {
        None => return Err(IngestError::EmptyInput),
        Some(rec) => rec.map_err(|e| IngestError::Malformed(e.to_string()))?,
    };
    let header = decode_record(&header, 0)?;
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(IngestError::DuplicateHeader(n.clone()));
        }
    }

    let mut raw_columns: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::Malformed(e.to_string()))?;
        let fields = decode_record(&rec, row)?;
        if fields.len() != names.len() {
            return Err(IngestError::RaggedRows { row, expected: names.len(), found: fields.len() });
        }
        for (col, field) in raw_columns.iter_mut().zip(fields) {
            col.push(field);
        }
    }

    let columns = names
        .into_iter()
        .zip(raw_columns)
        .map(|(name, cells)| {
            let ctype = infer_column_type(&cells);
            let values = cells.iter().map(|c| convert_cell(c, ctype)).collect();
            Column::new(name, ctype, values)
        })
        .collect();

    Ok(Dataset::from_columns(name, columns).expect("ingested columns satisfy dataset invariants"))
}

fn decode_record(rec: &csv::ByteRecord, row: usize) -> Result<Vec<String>, IngestError> {
    rec.iter()
        .map(|f| {
            std::str::from_utf8(f)
                .map(str::to_string)
                .map_err(|_| IngestError::InvalidUtf8 { row })
        })
        .collect()
}

fn is_null_cell(cell: &str) -> bool {
    cell.trim().is_empty()
}

/// Quantitative when at least 90% of non-null cells parse as numbers,
/// temporal when at least 90% parse as ISO-8601 dates, else categorical.
/// Columns without any non-null cell are categorical.
pub fn infer_column_type<S: AsRef<str>>(cells: &[S]) -> ColumnType {
    let present: Vec<&str> = cells.iter().map(AsRef::as_ref).filter(|c| !is_null_cell(c)).collect();
    if present.is_empty() {
        return ColumnType::Categorical;
    }
    let meets = |hits: usize| hits * 10 >= present.len() * 9;
    let numeric = present.iter().filter(|c| parse_number(c).is_some()).count();
    if meets(numeric) {
        return ColumnType::Quantitative;
    }
    let dates = present.iter().filter(|c| parse_date(c).is_some()).count();
    if meets(dates) {
        return ColumnType::Temporal;
    }
    ColumnType::Categorical
}

// Cells that do not fit a quantitative or temporal column become null.
fn convert_cell(cell: &str, ctype: ColumnType) -> Value {
    if is_null_cell(cell) {
        return Value::Null;
    }
    match ctype {
        ColumnType::Quantitative => parse_number(cell).map_or(Value::Null, Value::Number),
        ColumnType::Temporal => parse_date(cell).map_or(Value::Null, Value::Date),
        ColumnType::Categorical => Value::Text(cell.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_country_fixture_columns() {
        let csv = "Country,Birth Rate,GDP per capita\nA,10.5,\"$1,000\"\nB,20,\"$2,000\"\nC,,\"$3,500\"\n";
        let ds = ingest_csv(csv.as_bytes(), "countries").unwrap();
        assert_eq!(ds.columns().len(), 3);
        assert_eq!(ds.row_count(), 3);
        assert_eq!(ds.column("Country").unwrap().ctype, ColumnType::Categorical);
        assert_eq!(ds.column("Birth Rate").unwrap().ctype, ColumnType::Quantitative);
        assert_eq!(ds.column("Birth Rate").unwrap().cells[2], Value::Null);
        assert_eq!(ds.column("GDP per capita").unwrap().cells[2], Value::Number(3500.0));
    }

    #[test]
    fn header_only_is_empty_and_categorical() {
        let ds = ingest_csv("a,b\n".as_bytes(), "h").unwrap();
        assert_eq!(ds.row_count(), 0);
        assert!(ds.columns().iter().all(|c| c.ctype == ColumnType::Categorical));
    }

    #[test]
    fn percent_cell_in_numeric_column() {
        let mut csv = String::from("p\n");
        for i in 0..9 {
            csv.push_str(&format!("{i}\n"));
        }
        csv.push_str("58.00%\n");
        let ds = ingest_csv(csv.as_bytes(), "p").unwrap();
        let col = ds.column("p").unwrap();
        assert_eq!(col.ctype, ColumnType::Quantitative);
        assert_eq!(col.cells[9], Value::Number(58.0));
    }

    #[test]
    fn inference_threshold_examples() {
        assert_eq!(infer_column_type(&["1", "2", "x"]), ColumnType::Categorical);
        assert_eq!(infer_column_type(&["1.5", "", "2"]), ColumnType::Quantitative);
        assert_eq!(infer_column_type::<&str>(&[]), ColumnType::Categorical);
        assert_eq!(infer_column_type(&["2023-01-01", "2023-02-01"]), ColumnType::Temporal);
        // 9 of 10 numeric sits exactly on the threshold
        let mut cells = vec!["1"; 9];
        cells.push("x");
        assert_eq!(infer_column_type(&cells), ColumnType::Quantitative);
        let mut cells = vec!["1"; 8];
        cells.extend(["x", "y"]);
        assert_eq!(infer_column_type(&cells), ColumnType::Categorical);
    }

    #[test]
    fn dirty_numeric_cells_become_null() {
        let mut csv = String::from("v\n");
        for i in 0..19 {
            csv.push_str(&format!("{i}\n"));
        }
        csv.push_str("n/a\n");
        let ds = ingest_csv(csv.as_bytes(), "v").unwrap();
        assert_eq!(ds.column("v").unwrap().cells[19], Value::Null);
    }

    #[test]
    fn errors() {
        assert_eq!(ingest_csv("".as_bytes(), "e").unwrap_err(), IngestError::EmptyInput);
        assert_eq!(
            ingest_csv("a,b\n1,2\n3\n".as_bytes(), "r").unwrap_err(),
            IngestError::RaggedRows { row: 2, expected: 2, found: 1 }
        );
        assert_eq!(
            ingest_csv("a, a\n".as_bytes(), "d").unwrap_err(),
            IngestError::DuplicateHeader("a".into())
        );
        assert_eq!(
            ingest_csv(&b"a\n\xff\n"[..], "u").unwrap_err(),
            IngestError::InvalidUtf8 { row: 1 }
        );
    }

    #[test]
    fn quoted_fields_follow_rfc4180() {
        let ds = ingest_csv("name,n\n\"Smith, J\",1\n\"say \"\"hi\"\"\",2\n".as_bytes(), "q").unwrap();
        let col = ds.column("name").unwrap();
        assert_eq!(col.cells[0], Value::from("Smith, J"));
        assert_eq!(col.cells[1], Value::from("say \"hi\""));
    }
}

use serde::{Deserialize, Serialize};

use super::{ColumnType, DataTable, Dataset};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("column {0:?} is not quantitative")]
    NonQuantitativeColumn(String),
    #[error("a correlation matrix needs at least two columns")]
    TooFewColumns,
    #[error("field {0:?} is not numeric")]
    FieldNotNumeric(String),
    #[error("table has no numeric values to label")]
    EmptyTable,
    #[error("fraction {0} is outside (0, 0.5)")]
    InvalidFraction(f64),
}

/// Square matrix of pairwise-complete Pearson coefficients. `None` marks
/// pairs with fewer than two complete rows or zero variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }
}

pub fn correlation_matrix(dataset: &Dataset, columns: &[&str]) -> Result<CorrelationMatrix, StatsError> {
    if columns.len() < 2 {
        return Err(StatsError::TooFewColumns);
    }
    let cols = columns
        .iter()
        .map(|name| {
            let col = dataset.column(name).ok_or_else(|| StatsError::UnknownColumn(name.to_string()))?;
            if col.ctype != ColumnType::Quantitative {
                return Err(StatsError::NonQuantitativeColumn(name.to_string()));
            }
            Ok(col.cells.iter().map(|v| v.as_number()).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, _>>()?;

    let k = cols.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        values[i][i] = pearson(&cols[i], &cols[i]).map(|_| 1.0);
        for j in (i + 1)..k {
            let r = pearson(&cols[i], &cols[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { columns: columns.iter().map(|s| s.to_string()).collect(), values })
}

// Two-pass centered formula over rows where both cells are present.
fn pearson(xs: &[Option<f64>], ys: &[Option<f64>]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Row indices (into the table) of the labeled extremes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantileLabels {
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
}

/// Nearest-rank labeling: `ceil(n * p)` rows with the largest values are
/// `top`, as many with the smallest are `bottom`. `n` counts rows with a
/// numeric value; null rows are never labeled. Ties go to the earlier row.
pub fn quantile_labels(table: &DataTable, field: &str, p: f64) -> Result<QuantileLabels, StatsError> {
    if !(p > 0.0 && p < 0.5) {
        return Err(StatsError::InvalidFraction(p));
    }
    let idx = table
        .column_index(field)
        .ok_or_else(|| StatsError::FieldNotNumeric(field.to_string()))?;
    let mut ranked = Vec::with_capacity(table.len());
    for (row, cells) in table.rows.iter().enumerate() {
        match &cells[idx] {
            v if v.is_null() => {}
            v => match v.as_number() {
                Some(n) => ranked.push((n, row)),
                None => return Err(StatsError::FieldNotNumeric(field.to_string())),
            },
        }
    }
    if ranked.is_empty() {
        return Err(StatsError::EmptyTable);
    }
    let k = label_count(ranked.len(), p);

    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut bottom: Vec<usize> = ranked.iter().take(k).map(|r| r.1).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut top: Vec<usize> = ranked.iter().take(k).map(|r| r.1).collect();
    top.sort_unstable();
    bottom.sort_unstable();
    Ok(QuantileLabels { top, bottom })
}

// ceil(n * p), tolerant of binary representation error in p (0.1 * 30 is
// 3.0000000000000004 in f64).
fn label_count(n: usize, p: f64) -> usize {
    let k = ((n as f64) * p - 1e-9).ceil().max(1.0) as usize;
    k.min(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, Value};

    fn dataset(cols: &[(&str, &[f64])]) -> Dataset {
        Dataset::from_columns(
            "d",
            cols.iter()
                .map(|(n, v)| Column::new(*n, ColumnType::Quantitative, v.iter().map(|x| Value::Number(*x)).collect()))
                .collect(),
        )
        .unwrap()
    }

    fn table(vals: &[f64]) -> DataTable {
        DataTable::new(vec!["v".into()], vals.iter().map(|v| vec![Value::Number(*v)]).collect())
    }

    #[test]
    fn perfect_correlations() {
        let ds = dataset(&[("x", &[1.0, 2.0, 3.0]), ("y", &[2.0, 4.0, 6.0]), ("z", &[3.0, 2.0, 1.0])]);
        let m = correlation_matrix(&ds, &["x", "y", "z"]).unwrap();
        assert_eq!(m.get(0, 1), Some(1.0));
        assert_eq!(m.get(0, 2), Some(-1.0));
        assert_eq!(m.get(2, 2), Some(1.0));
    }

    #[test]
    fn zero_variance_and_sparse_pairs_are_null() {
        let ds = Dataset::from_columns(
            "d",
            vec![
                Column::new("c", ColumnType::Quantitative, vec![1.0.into(), 1.0.into(), 1.0.into()]),
                Column::new("x", ColumnType::Quantitative, vec![1.0.into(), 2.0.into(), 3.0.into()]),
                Column::new("s", ColumnType::Quantitative, vec![Value::Null, Value::Null, 3.0.into()]),
            ],
        )
        .unwrap();
        let m = correlation_matrix(&ds, &["c", "x", "s"]).unwrap();
        assert_eq!(m.get(0, 0), None);
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.get(1, 2), None);
        assert_eq!(m.get(1, 1), Some(1.0));
    }

    #[test]
    fn correlation_errors() {
        let ds = crate::data::ingest_csv("a,b\nx,1\ny,2\n".as_bytes(), "e").unwrap();
        assert_eq!(correlation_matrix(&ds, &["b"]), Err(StatsError::TooFewColumns));
        assert_eq!(correlation_matrix(&ds, &["b", "q"]), Err(StatsError::UnknownColumn("q".into())));
        assert_eq!(correlation_matrix(&ds, &["b", "a"]), Err(StatsError::NonQuantitativeColumn("a".into())));
    }

    #[test]
    fn ten_rows_one_each() {
        let t = table(&[3.0, 9.0, 1.0, 4.0, 5.0, 6.0, 7.0, 8.0, 2.0, 0.5]);
        let l = quantile_labels(&t, "v", 0.1).unwrap();
        assert_eq!(l.top, vec![1]);
        assert_eq!(l.bottom, vec![9]);
    }

    #[test]
    fn five_rows_twenty_percent() {
        let l = quantile_labels(&table(&[1.0, 2.0, 3.0, 4.0, 5.0]), "v", 0.2).unwrap();
        assert_eq!((l.top, l.bottom), (vec![4], vec![0]));
    }

    #[test]
    fn ties_go_to_earlier_rows() {
        let t = table(&[7.0, 7.0, 7.0]);
        let l = quantile_labels(&t, "v", 0.33).unwrap();
        assert_eq!((l.top, l.bottom), (vec![0], vec![0]));
        // ceil(3 * 0.34) = 2 per side
        let l = quantile_labels(&t, "v", 0.34).unwrap();
        assert_eq!((l.top, l.bottom), (vec![0, 1], vec![0, 1]));
    }

    #[test]
    fn representation_error_does_not_inflate_count() {
        let vals: Vec<f64> = (0..30).map(f64::from).collect();
        let l = quantile_labels(&table(&vals), "v", 0.1).unwrap();
        assert_eq!(l.top.len(), 3);
    }

    #[test]
    fn label_errors() {
        let empty = DataTable::new(vec!["v".into()], vec![]);
        assert_eq!(quantile_labels(&empty, "v", 0.1), Err(StatsError::EmptyTable));
        let text = DataTable::new(vec!["v".into()], vec![vec!["a".into()]]);
        assert_eq!(quantile_labels(&text, "v", 0.1), Err(StatsError::FieldNotNumeric("v".into())));
        assert_eq!(quantile_labels(&table(&[1.0]), "v", 0.5), Err(StatsError::InvalidFraction(0.5)));
    }
}

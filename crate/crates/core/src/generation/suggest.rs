use std::collections::HashSet;

use crate::data::{ColumnType, Dataset};

/// Quantitative columns with at least one value, by population variance
/// descending; ties keep column order.
fn ranked_quantitative(dataset: &Dataset) -> Vec<&str> {
    let mut scored: Vec<(f64, usize, &str)> = dataset
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.ctype == ColumnType::Quantitative)
        .filter_map(|(i, c)| {
            let xs: Vec<f64> = c.cells.iter().filter_map(|v| v.as_number()).collect();
            if xs.is_empty() {
                return None;
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            Some((var, i, c.name.as_str()))
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|s| s.2).collect()
}

/// Categorical columns with at least one value, by distinct count
/// descending; ties keep column order.
fn ranked_categorical(dataset: &Dataset) -> Vec<&str> {
    let mut scored: Vec<(usize, usize, &str)> = dataset
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.ctype == ColumnType::Categorical)
        .map(|(i, c)| {
            let distinct: HashSet<_> = c.cells.iter().filter(|v| !v.is_null()).collect();
            (distinct.len(), i, c.name.as_str())
        })
        .filter(|s| s.0 > 0)
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|s| s.2).collect()
}

/// Starter goals for an unfamiliar dataset, built from its highest-variance
/// quantitative columns and highest-cardinality categorical column. Returns
/// `min(k, available)` goals; each one is answerable by the rules
/// generator.
pub fn suggest_prompts(dataset: &Dataset, k: usize) -> Vec<String> {
    let q = ranked_quantitative(dataset);
    let c = ranked_categorical(dataset);
    let mut out = Vec::new();
    if q.is_empty() {
        out.extend(c.iter().map(|c| format!("How many rows are there for each {c}?")));
    } else {
        if q.len() >= 2 {
            out.push(format!("How does {} relate to {}?", q[0], q[1]));
            out.push("Show an overview with correlation matrix".to_string());
        }
        out.push(format!("Show the distribution of {}", q[0]));
        if let Some(c) = c.first() {
            out.push(format!("Compare the average {} across {}", q[0], c));
        }
        if q.len() >= 3 {
            out.push(format!("How does {} relate to {}?", q[0], q[2]));
        }
        if q.len() >= 2 {
            out.push(format!("Show the distribution of {}", q[1]));
        }
    }
    out.truncate(k);
    out
}

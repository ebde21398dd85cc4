use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Column, ColumnType, Dataset, Value};

const MAX_SAMPLES: usize = 5;
const SIGNIFICANT_DIGITS: usize = 4;

/// Per-column statistics. Numeric statistics are present only for
/// quantitative columns with at least one non-null cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    pub ctype: ColumnType,
    pub non_null_count: usize,
    pub null_count: usize,
    pub distinct_count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub stddev: Option<f64>,
    pub sample_values: Vec<Value>,
}

pub fn profile_column(column: &Column, row_count: usize) -> ColumnProfile {
    let present: Vec<&Value> = column.cells.iter().filter(|v| !v.is_null()).collect();
    let non_null_count = present.len();

    let mut seen = HashSet::new();
    let mut sample_values = Vec::new();
    for v in &present {
        if seen.insert(*v) && sample_values.len() < MAX_SAMPLES {
            sample_values.push((*v).clone());
        }
    }
    let distinct_count = seen.len();

    let (mut min, mut max, mut mean, mut stddev) = (None, None, None, None);
    if column.ctype == ColumnType::Quantitative && non_null_count > 0 {
        let nums: Vec<f64> = present.iter().filter_map(|v| v.as_number()).collect();
        let n = nums.len() as f64;
        let lo = nums.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = nums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // rounding can push the mean of identical values just outside [lo, hi]
        let m = (nums.iter().sum::<f64>() / n).clamp(lo, hi);
        let var = nums.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        min = Some(lo);
        max = Some(hi);
        mean = Some(m);
        stddev = Some(var.sqrt());
    }

    ColumnProfile {
        name: column.name.clone(),
        ctype: column.ctype,
        non_null_count,
        null_count: row_count.saturating_sub(non_null_count),
        distinct_count,
        min,
        max,
        mean,
        stddev,
        sample_values,
    }
}

/// Prompt-ready description of one column. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    #[serde(rename = "type")]
    pub ctype: ColumnType,
    pub non_null_count: usize,
    pub null_ratio: f64,
    pub distinct_count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub samples: Vec<String>,
}

/// Deterministic dataset description used to ground generation prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub row_count: usize,
    pub column_count: usize,
    pub columns: Vec<ColumnSummary>,
}

pub fn summarize_dataset(dataset: &Dataset) -> DatasetSummary {
    let columns = dataset
        .columns()
        .iter()
        .map(|c| {
            let p = profile_column(c, dataset.row_count());
            let null_ratio = if dataset.row_count() == 0 {
                0.0
            } else {
                round_significant(p.null_count as f64 / dataset.row_count() as f64)
            };
            let samples = if p.ctype == ColumnType::Quantitative {
                Vec::new()
            } else {
                p.sample_values.iter().map(ToString::to_string).collect()
            };
            ColumnSummary {
                name: p.name,
                ctype: p.ctype,
                non_null_count: p.non_null_count,
                null_ratio,
                distinct_count: p.distinct_count,
                min: p.min.map(round_significant),
                max: p.max.map(round_significant),
                mean: p.mean.map(round_significant),
                stddev: p.stddev.map(round_significant),
                samples,
            }
        })
        .collect::<Vec<_>>();
    DatasetSummary {
        name: dataset.name().to_string(),
        row_count: dataset.row_count(),
        column_count: columns.len(),
        columns,
    }
}

impl DatasetSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }

    /// Line-oriented rendering embedded in prompts.
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "dataset {:?}: {} rows, {} columns\n",
            self.name, self.row_count, self.column_count
        );
        for c in &self.columns {
            let _ = write!(
                out,
                "- {:?} ({}): {} non-null, null ratio {}, {} distinct",
                c.name, c.ctype, c.non_null_count, c.null_ratio, c.distinct_count
            );
            if let (Some(lo), Some(hi), Some(mean), Some(sd)) = (c.min, c.max, c.mean, c.stddev) {
                let _ = write!(out, ", range [{lo}, {hi}], mean {mean}, stddev {sd}");
            }
            if !c.samples.is_empty() {
                let quoted: Vec<String> = c.samples.iter().map(|s| format!("{s:?}")).collect();
                let _ = write!(out, ", samples [{}]", quoted.join(", "));
            }
            out.push('\n');
        }
        out
    }
}

/// Rounds to four significant digits.
pub(crate) fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

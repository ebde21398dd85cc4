use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use super::spec::{Channel, ChartSpec, Mark, Scale, Transform};
use crate::data::{check_predicate, Aggregate, ColumnType, Dataset, Predicate};

/// Largest edit distance accepted for a column suggestion.
pub const MAX_SUGGESTION_DISTANCE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    UnknownColumn,
    MissingChannel,
    TypeMismatch,
    BadTransform,
}

/// Location of an issue inside a spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssuePath {
    Mark,
    Encoding(Channel),
    EncodingAggregate(Channel),
    EncodingScale(Channel),
    Matrix,
    MatrixEntry(usize),
    Transform(usize),
    TransformColumn(usize),
}

impl fmt::Display for IssuePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IssuePath::Mark => f.write_str("mark"),
            IssuePath::Encoding(c) => write!(f, "encodings.{c}"),
            IssuePath::EncodingAggregate(c) => write!(f, "encodings.{c}.aggregate"),
            IssuePath::EncodingScale(c) => write!(f, "encodings.{c}.scale"),
            IssuePath::Matrix => f.write_str("matrix"),
            IssuePath::MatrixEntry(i) => write!(f, "matrix[{i}]"),
            IssuePath::Transform(i) => write!(f, "transforms[{i}]"),
            IssuePath::TransformColumn(i) => write!(f, "transforms[{i}].column"),
        }
    }
}

impl Serialize for IssuePath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub code: IssueCode,
    pub path: IssuePath,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggested_fix: Option<String>,
}

/// Outcome of [`validate_spec`]. `valid` is true exactly when `issues` is
/// empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn from_issues(issues: Vec<Issue>) -> Self {
        Self { valid: issues.is_empty(), issues }
    }

    pub fn issues_at(&self, path: IssuePath) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(move |i| i.path == path)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return f.write_str("valid");
        }
        let parts: Vec<String> = self
            .issues
            .iter()
            .map(|i| format!("{:?} at {}: {}", i.code, i.path, i.message))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

struct Checker<'a> {
    dataset: &'a Dataset,
    issues: Vec<Issue>,
}

impl Checker<'_> {
    fn push(&mut self, code: IssueCode, path: IssuePath, message: String, suggested_fix: Option<String>) {
        self.issues.push(Issue { code, path, message, suggested_fix });
    }

    /// Exact lookup, otherwise an UnknownColumn issue with a suggestion.
    fn resolve(&mut self, name: &str, path: IssuePath) -> Option<ColumnType> {
        if let Some(col) = self.dataset.column(name) {
            return Some(col.ctype);
        }
        let suggestion = suggest_column(name, self.dataset);
        self.push(IssueCode::UnknownColumn, path, format!("no column named {name:?}"), suggestion);
        None
    }
}

/// Checks a spec against a dataset schema. Never fails; every problem is
/// reported as an [`Issue`].
pub fn validate_spec(spec: &ChartSpec, dataset: &Dataset) -> ValidationReport {
    let mut ck = Checker { dataset, issues: Vec::new() };

    if spec.matrix.is_some() && spec.mark != Mark::Heatmap {
        ck.push(
            IssueCode::TypeMismatch,
            IssuePath::Matrix,
            format!("a column matrix only applies to heatmaps, not {}", spec.mark),
            None,
        );
    }

    for &channel in spec.required_channels() {
        if !spec.encodings.contains_key(&channel) {
            ck.push(
                IssueCode::MissingChannel,
                IssuePath::Encoding(channel),
                format!("{} charts need a {channel} encoding", spec.mark),
                None,
            );
        }
    }

    for (&channel, enc) in &spec.encodings {
        if !spec.supported_channels().contains(&channel) {
            ck.push(
                IssueCode::TypeMismatch,
                IssuePath::Encoding(channel),
                format!("{} charts do not use a {channel} encoding", spec.mark),
                None,
            );
            continue;
        }
        let Some(ctype) = ck.resolve(&enc.column, IssuePath::Encoding(channel)) else {
            continue;
        };
        check_encoding(&mut ck, spec, channel, &enc.column, enc.aggregate, enc.scale, ctype);
    }

    if let Some(matrix) = spec.matrix.as_ref().filter(|_| spec.mark == Mark::Heatmap) {
        let distinct = matrix.iter().enumerate().filter(|(i, n)| !matrix[..*i].contains(n)).count();
        if distinct < 2 {
            ck.push(
                IssueCode::MissingChannel,
                IssuePath::Matrix,
                "a correlation matrix needs at least two columns".into(),
                None,
            );
        }
        for (i, name) in matrix.iter().enumerate() {
            // a repeated entry adds nothing and would shrink the matrix below two
            if matrix[..i].contains(name) {
                ck.push(
                    IssueCode::TypeMismatch,
                    IssuePath::MatrixEntry(i),
                    format!("{name:?} is listed twice in the matrix"),
                    None,
                );
                continue;
            }
            if let Some(ctype) = ck.resolve(name, IssuePath::MatrixEntry(i)) {
                if ctype != ColumnType::Quantitative {
                    ck.push(
                        IssueCode::TypeMismatch,
                        IssuePath::MatrixEntry(i),
                        format!("{name:?} is {ctype}; correlation needs quantitative columns"),
                        None,
                    );
                }
            }
        }
    }

    check_transforms(&mut ck, spec);
    ValidationReport::from_issues(ck.issues)
}

fn check_encoding(
    ck: &mut Checker<'_>,
    spec: &ChartSpec,
    channel: Channel,
    column: &str,
    aggregate: Option<Aggregate>,
    scale: Option<Scale>,
    ctype: ColumnType,
) {
    let quantitative = ctype == ColumnType::Quantitative;
    let mut aggregate_ok = true;
    if let Some(agg) = aggregate {
        if agg.needs_numbers() && !quantitative {
            aggregate_ok = false;
            ck.push(
                IssueCode::TypeMismatch,
                IssuePath::EncodingAggregate(channel),
                format!("{} of {ctype} column {column:?}", agg.as_str()),
                Some(Aggregate::Count.as_str().into()),
            );
        } else if spec.mark == Mark::Histogram {
            aggregate_ok = false;
            ck.push(
                IssueCode::TypeMismatch,
                IssuePath::EncodingAggregate(channel),
                "histogram x is binned, not aggregated".into(),
                None,
            );
        }
    }
    if scale == Some(Scale::Log) && !quantitative && aggregate.is_none() {
        ck.push(
            IssueCode::TypeMismatch,
            IssuePath::EncodingScale(channel),
            format!("log scale on {ctype} column {column:?}"),
            None,
        );
    }

    // Channels that are summarized per group must carry an aggregate.
    let needs_aggregate = matches!(
        (spec.mark, channel),
        (Mark::Bar, Channel::Y) | (Mark::Heatmap, Channel::Color)
    );
    if needs_aggregate && aggregate.is_none() {
        let fix = if quantitative { Aggregate::Mean } else { Aggregate::Count };
        ck.push(
            IssueCode::TypeMismatch,
            IssuePath::EncodingAggregate(channel),
            format!("{channel} of a {} chart needs an aggregate", spec.mark),
            Some(fix.as_str().into()),
        );
        return;
    }

    let numeric = (aggregate.is_some() && aggregate_ok) || quantitative;
    let fits = match (spec.mark, channel) {
        (Mark::Scatter, Channel::X) => numeric || ctype == ColumnType::Temporal,
        (Mark::Scatter | Mark::Line, Channel::Y) => numeric,
        (Mark::Histogram, Channel::X) => quantitative,
        (_, Channel::Size) => numeric,
        _ => true,
    };
    if !fits {
        ck.push(
            IssueCode::TypeMismatch,
            IssuePath::Encoding(channel),
            format!("{ctype} column {column:?} cannot drive {channel} of a {} chart", spec.mark),
            None,
        );
    }
}

fn check_transforms(ck: &mut Checker<'_>, spec: &ChartSpec) {
    let mut seen_bin = false;
    let mut seen_label = false;
    for (i, t) in spec.transforms.iter().enumerate() {
        let bad = |msg: String| (IssueCode::BadTransform, IssuePath::Transform(i), msg);
        let problem = match t {
            Transform::Filter(f) => match ck.resolve(&f.column, IssuePath::TransformColumn(i)) {
                None => None,
                Some(ctype) => match check_predicate(ctype, &f.predicate) {
                    Err(detail) => Some(bad(detail)),
                    Ok(()) => match &f.predicate {
                        Predicate::InRange(lo, hi) if lo > hi => Some(bad("range bounds are reversed".into())),
                        _ => None,
                    },
                },
            },
            Transform::Bin { column, bin_count } => {
                let first = !seen_bin;
                seen_bin = true;
                match ck.resolve(column, IssuePath::TransformColumn(i)) {
                    None => None,
                    Some(_) if !first => Some(bad("only one bin transform is allowed".into())),
                    Some(ctype) if ctype != ColumnType::Quantitative => {
                        Some(bad(format!("cannot bin {ctype} column {column:?}")))
                    }
                    Some(_) if *bin_count < 1 => Some(bad("bin_count must be at least 1".into())),
                    Some(_) if spec.mark == Mark::Histogram
                        && spec.encoding(Channel::X).is_some_and(|x| &x.column != column) =>
                    {
                        Some(bad("a histogram can only bin its x column".into()))
                    }
                    Some(_) => None,
                }
            }
            Transform::TopkLabel { p, channel } => {
                let first = !seen_label;
                seen_label = true;
                let channel = channel.unwrap_or(Channel::Y);
                if !first {
                    Some(bad("only one topk_label transform is allowed".into()))
                } else if !(*p > 0.0 && *p < 0.5) {
                    Some(bad(format!("fraction {p} is outside (0, 0.5)")))
                } else if spec.is_matrix() || spec.mark == Mark::Histogram {
                    Some(bad(format!("{} charts cannot carry quantile labels", spec.mark)))
                } else {
                    match spec.encoding(channel) {
                        None => Some(bad(format!("no {channel} encoding to label"))),
                        Some(enc) => match ck.dataset.column(&enc.column) {
                            // the encoding itself already carries an UnknownColumn issue
                            None => None,
                            Some(col) if col.ctype != ColumnType::Quantitative && enc.aggregate.is_none() => {
                                Some(bad(format!("{channel} is not numeric")))
                            }
                            Some(_) => None,
                        },
                    }
                }
            }
        };
        if let Some((code, path, msg)) = problem {
            ck.push(code, path, msg, None);
        }
    }
}

/// Suggests a dataset column for an unresolved name: a unique
/// case-insensitive match first, otherwise the unique column within
/// [`MAX_SUGGESTION_DISTANCE`] edits. Ties yield no suggestion.
pub fn suggest_column(name: &str, dataset: &Dataset) -> Option<String> {
    let needle = name.trim().to_lowercase();
    let folded: Vec<(String, &str)> = dataset
        .columns()
        .iter()
        .map(|c| (c.name.trim().to_lowercase(), c.name.as_str()))
        .collect();

    let exact: Vec<&str> = folded.iter().filter(|(f, _)| *f == needle).map(|(_, n)| *n).collect();
    match exact.as_slice() {
        [one] => return Some(one.to_string()),
        [] => {}
        _ => return None,
    }

    let mut best: Option<(usize, &str)> = None;
    let mut tied = false;
    for (f, n) in &folded {
        let d = edit_distance(&needle, f);
        if d > MAX_SUGGESTION_DISTANCE {
            continue;
        }
        match best {
            Some((bd, _)) if d > bd => {}
            Some((bd, _)) if d == bd => tied = true,
            _ => {
                best = Some((d, n));
                tied = false;
            }
        }
    }
    match best {
        Some((_, n)) if !tied => Some(n.to_string()),
        _ => None,
    }
}

/// Levenshtein distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

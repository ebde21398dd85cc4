use std::collections::BTreeSet;

use super::spec::{ChartSpec, Transform};
use super::validate::{validate_spec, IssueCode, IssuePath, ValidationReport};
use crate::data::{Aggregate, Dataset, Filter};

/// Default bound on repair passes before a spec is declared unrepairable.
pub const MAX_REPAIR_PASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RepairError {
    #[error("spec cannot be repaired: {0}")]
    Unrepairable(ValidationReport),
}

/// Applies one round of deterministic fixes for the issues in `report`.
///
/// Suggested column substitutions and aggregates are applied; optional
/// channels, scales, transforms and matrix entries that cannot be fixed are
/// removed. An issue on a required channel without a fix is fatal. Channels
/// without an issue are left untouched.
pub fn repair_spec(spec: &ChartSpec, report: &ValidationReport, _dataset: &Dataset) -> Result<ChartSpec, RepairError> {
    let mut out = spec.clone();
    let required = spec.required_channels();
    let fatal = || RepairError::Unrepairable(report.clone());
    let mut drop_transforms = BTreeSet::new();
    let mut drop_matrix = BTreeSet::new();

    for issue in &report.issues {
        let fix = issue.suggested_fix.as_deref();
        match issue.path {
            IssuePath::Mark => return Err(fatal()),
            IssuePath::Encoding(ch) => match (issue.code, fix) {
                (IssueCode::UnknownColumn, Some(name)) => {
                    if let Some(enc) = out.encodings.get_mut(&ch) {
                        enc.column = name.to_string();
                    }
                }
                (IssueCode::MissingChannel, _) => return Err(fatal()),
                _ if required.contains(&ch) => return Err(fatal()),
                _ => {
                    out.encodings.remove(&ch);
                }
            },
            IssuePath::EncodingAggregate(ch) => {
                if let Some(enc) = out.encodings.get_mut(&ch) {
                    enc.aggregate = fix.and_then(parse_aggregate);
                }
            }
            IssuePath::EncodingScale(ch) => {
                if let Some(enc) = out.encodings.get_mut(&ch) {
                    enc.scale = None;
                }
            }
            IssuePath::Matrix => match issue.code {
                IssueCode::TypeMismatch => out.matrix = None,
                _ => return Err(fatal()),
            },
            IssuePath::MatrixEntry(i) => match (issue.code, fix, out.matrix.as_mut()) {
                (IssueCode::UnknownColumn, Some(name), Some(m)) => m[i] = name.to_string(),
                _ => {
                    drop_matrix.insert(i);
                }
            },
            IssuePath::Transform(i) => {
                drop_transforms.insert(i);
            }
            IssuePath::TransformColumn(i) => match fix {
                Some(name) => set_transform_column(&mut out.transforms[i], name),
                None => {
                    drop_transforms.insert(i);
                }
            },
        }
    }

    for &i in drop_transforms.iter().rev() {
        out.transforms.remove(i);
    }
    if let Some(m) = out.matrix.as_mut() {
        for &i in drop_matrix.iter().rev() {
            m.remove(i);
        }
    }
    Ok(out)
}

/// Validates and repairs until the spec is valid, for at most `max_passes`
/// repair passes. Returns the valid spec and the number of passes used.
pub fn validate_and_repair(
    spec: &ChartSpec,
    dataset: &Dataset,
    max_passes: usize,
) -> Result<(ChartSpec, usize), RepairError> {
    let mut current = spec.clone();
    for pass in 0..=max_passes {
        let report = validate_spec(&current, dataset);
        if report.valid {
            return Ok((current, pass));
        }
        if pass == max_passes {
            return Err(RepairError::Unrepairable(report));
        }
        current = repair_spec(&current, &report, dataset)?;
    }
    unreachable!("loop returns on its last pass")
}

fn parse_aggregate(s: &str) -> Option<Aggregate> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
}

fn set_transform_column(t: &mut Transform, name: &str) {
    match t {
        Transform::Filter(Filter { column, .. }) | Transform::Bin { column, .. } => *column = name.to_string(),
        Transform::TopkLabel { .. } => {}
    }
}

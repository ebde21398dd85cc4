use serde::{Deserialize, Serialize};

use super::spec::{Channel, ChartSpec, Mark, Transform};
use crate::data::{output_name, Aggregate, BinSpec, ChartQuery, Projection, SortDirection, SortSpec};
use crate::DatasetId;

/// Bin count used by histograms without an explicit bin transform.
pub const DEFAULT_BIN_COUNT: usize = 10;

/// Quantile labeling applied to the query result after execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPass {
    /// Result column holding the ranked values.
    pub field: String,
    pub p: f64,
}

/// Lowers a valid spec to an executable query.
///
/// Encodings become projections in channel order, skipping repeats of the
/// same column and aggregate. Histograms bin their x column and count it;
/// heatmaps without a color channel count each cell; a correlation matrix
/// projects its raw columns. Lines and histograms sort by x ascending.
pub fn spec_to_query(spec: &ChartSpec, source: DatasetId) -> ChartQuery {
    let mut projections: Vec<Projection> = Vec::new();
    let mut push = |p: Projection| {
        if !projections.contains(&p) {
            projections.push(p);
        }
    };

    let mut bins = None;
    let mut sort = None;
    let mut filters = Vec::new();
    for t in &spec.transforms {
        match t {
            Transform::Filter(f) => filters.push(f.clone()),
            Transform::Bin { column, bin_count } => {
                bins = Some(BinSpec { column: column.clone(), bin_count: *bin_count });
            }
            Transform::TopkLabel { .. } => {}
        }
    }

    if let Some(matrix) = spec.matrix.as_ref().filter(|_| spec.mark == Mark::Heatmap) {
        for column in matrix {
            push(Projection::plain(column.clone()));
        }
    } else if spec.mark == Mark::Histogram {
        if let Some(x) = spec.encoding(Channel::X) {
            push(Projection::plain(x.column.clone()));
            push(Projection::aggregated(x.column.clone(), Aggregate::Count));
            bins.get_or_insert_with(|| BinSpec { column: x.column.clone(), bin_count: DEFAULT_BIN_COUNT });
            sort = Some(SortSpec { column: x.column.clone(), aggregate: None, direction: SortDirection::Asc });
        }
    } else {
        for enc in spec.encodings.values() {
            push(Projection { column: enc.column.clone(), aggregate: enc.aggregate });
        }
        if spec.mark == Mark::Heatmap && spec.encoding(Channel::Color).is_none() {
            if let Some(x) = spec.encoding(Channel::X) {
                push(Projection::aggregated(x.column.clone(), Aggregate::Count));
            }
        }
        if spec.mark == Mark::Line {
            if let Some(x) = spec.encoding(Channel::X) {
                sort = Some(SortSpec { column: x.column.clone(), aggregate: x.aggregate, direction: SortDirection::Asc });
            }
        }
    }

    ChartQuery { source, projections, filters, bins, sort, limit: None }
}

/// The labeling pass requested by a `topk_label` transform, if any.
pub fn label_pass(spec: &ChartSpec) -> Option<LabelPass> {
    spec.transforms.iter().find_map(|t| match t {
        Transform::TopkLabel { p, channel } => {
            let enc = spec.encoding(channel.unwrap_or(Channel::Y))?;
            Some(LabelPass { field: output_name(&enc.column, enc.aggregate), p: *p })
        }
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::spec::Encoding;

    #[test]
    fn scatter_projects_both_axes() {
        let q = spec_to_query(&ChartSpec::scatter("gdp", "birth"), DatasetId::new());
        assert_eq!(q.projections, vec![Projection::plain("gdp"), Projection::plain("birth")]);
        assert!(!q.has_aggregate());
        assert_eq!(q.bins, None);
    }

    #[test]
    fn bar_groups_by_x() {
        let spec = ChartSpec::new(Mark::Bar)
            .with(Channel::X, Encoding::new("region"))
            .with(Channel::Y, Encoding::aggregated("gdp", Aggregate::Mean));
        let q = spec_to_query(&spec, DatasetId::new());
        assert_eq!(q.projections, vec![Projection::plain("region"), Projection::aggregated("gdp", Aggregate::Mean)]);
    }

    #[test]
    fn histogram_bins_and_counts() {
        let spec = ChartSpec::new(Mark::Histogram).with(Channel::X, Encoding::new("gdp"));
        let q = spec_to_query(&spec, DatasetId::new());
        assert_eq!(q.bins, Some(BinSpec { column: "gdp".into(), bin_count: 10 }));
        assert_eq!(q.projections, vec![Projection::plain("gdp"), Projection::aggregated("gdp", Aggregate::Count)]);
        assert_eq!(q.sort.unwrap().direction, SortDirection::Asc);

        let spec = spec.with_transform(Transform::Bin { column: "gdp".into(), bin_count: 4 });
        assert_eq!(spec_to_query(&spec, DatasetId::new()).bins.unwrap().bin_count, 4);
    }

    #[test]
    fn repeated_channels_project_once() {
        let spec = ChartSpec::scatter("a", "b").with(Channel::Label, Encoding::new("a"));
        assert_eq!(spec_to_query(&spec, DatasetId::new()).projections.len(), 2);
    }

    #[test]
    fn label_pass_targets_y_by_default() {
        let spec = ChartSpec::new(Mark::Bar)
            .with(Channel::X, Encoding::new("r"))
            .with(Channel::Y, Encoding::aggregated("g", Aggregate::Sum))
            .with_transform(Transform::TopkLabel { p: 0.1, channel: None });
        assert_eq!(label_pass(&spec), Some(LabelPass { field: "sum(g)".into(), p: 0.1 }));
        assert_eq!(label_pass(&ChartSpec::scatter("a", "b")), None);
    }
}

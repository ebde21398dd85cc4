use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Aggregate, Filter};

/// Current chart grammar version. Specs carrying any other version are
/// rejected at deserialization.
pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Scatter,
    Bar,
    Line,
    Histogram,
    Heatmap,
}

impl Mark {
    pub fn as_str(self) -> &'static str {
        match self {
            Mark::Scatter => "scatter",
            Mark::Bar => "bar",
            Mark::Line => "line",
            Mark::Histogram => "histogram",
            Mark::Heatmap => "heatmap",
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    X,
    Y,
    Color,
    Size,
    Label,
}

impl Channel {
    pub const ALL: [Channel; 5] = [Channel::X, Channel::Y, Channel::Color, Channel::Size, Channel::Label];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Color => "color",
            Channel::Size => "size",
            Channel::Label => "label",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Encoding {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
}

impl Encoding {
    pub fn new(column: impl Into<String>) -> Self {
        Self { column: column.into(), aggregate: None, scale: None }
    }

    pub fn aggregated(column: impl Into<String>, aggregate: Aggregate) -> Self {
        Self { column: column.into(), aggregate: Some(aggregate), scale: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transform {
    Filter(Filter),
    Bin {
        column: String,
        bin_count: usize,
    },
    /// Labels the top and bottom `p` fraction of rows on a channel
    /// (the `y` channel when unset).
    TopkLabel {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        channel: Option<Channel>,
    },
}

/// Declarative description of one visualization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChartSpec")]
pub struct ChartSpec {
    pub spec_version: u32,
    pub mark: Mark,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub encodings: BTreeMap<Channel, Encoding>,
    /// Columns of a correlation-matrix heatmap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<Transform>,
}

#[derive(Deserialize)]
struct RawChartSpec {
    #[serde(default = "current_version")]
    spec_version: u32,
    mark: Mark,
    #[serde(default)]
    title: String,
    #[serde(default)]
    encodings: BTreeMap<Channel, Encoding>,
    #[serde(default)]
    matrix: Option<Vec<String>>,
    #[serde(default)]
    transforms: Vec<Transform>,
}

fn current_version() -> u32 {
    SPEC_VERSION
}

impl TryFrom<RawChartSpec> for ChartSpec {
    type Error = String;

    fn try_from(raw: RawChartSpec) -> Result<Self, Self::Error> {
        if raw.spec_version != SPEC_VERSION {
            return Err(format!(
                "unsupported spec_version {} (this build reads version {SPEC_VERSION})",
                raw.spec_version
            ));
        }
        Ok(ChartSpec {
            spec_version: raw.spec_version,
            mark: raw.mark,
            title: raw.title,
            encodings: raw.encodings,
            matrix: raw.matrix,
            transforms: raw.transforms,
        })
    }
}

impl ChartSpec {
    pub fn new(mark: Mark) -> Self {
        Self {
            spec_version: SPEC_VERSION,
            mark,
            title: String::new(),
            encodings: BTreeMap::new(),
            matrix: None,
            transforms: Vec::new(),
        }
    }

    pub fn scatter(x: impl Into<String>, y: impl Into<String>) -> Self {
        Self::new(Mark::Scatter).with(Channel::X, Encoding::new(x)).with(Channel::Y, Encoding::new(y))
    }

    pub fn correlation_heatmap(columns: Vec<String>) -> Self {
        Self { matrix: Some(columns), ..Self::new(Mark::Heatmap) }
    }

    pub fn with(mut self, channel: Channel, encoding: Encoding) -> Self {
        self.encodings.insert(channel, encoding);
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transforms.push(transform);
        self
    }

    pub fn encoding(&self, channel: Channel) -> Option<&Encoding> {
        self.encodings.get(&channel)
    }

    pub fn is_matrix(&self) -> bool {
        self.mark == Mark::Heatmap && self.matrix.is_some()
    }

    /// Channels that must be present for this mark.
    pub fn required_channels(&self) -> &'static [Channel] {
        match self.mark {
            Mark::Scatter | Mark::Line | Mark::Bar => &[Channel::X, Channel::Y],
            Mark::Histogram => &[Channel::X],
            Mark::Heatmap if self.matrix.is_some() => &[],
            Mark::Heatmap => &[Channel::X, Channel::Y],
        }
    }

    /// Channels this mark can render.
    pub fn supported_channels(&self) -> &'static [Channel] {
        match self.mark {
            Mark::Scatter => &Channel::ALL,
            Mark::Line | Mark::Bar => &[Channel::X, Channel::Y, Channel::Color, Channel::Label],
            Mark::Histogram => &[Channel::X],
            Mark::Heatmap if self.matrix.is_some() => &[],
            Mark::Heatmap => &[Channel::X, Channel::Y, Channel::Color],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("chart spec serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("chart spec serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Predicate;

    #[test]
    fn json_shape_is_stable() {
        let spec = ChartSpec::scatter("GDP per capita", "Birth Rate")
            .with_title("t")
            .with_transform(Transform::TopkLabel { p: 0.1, channel: None })
            .with_transform(Transform::Filter(Filter {
                column: "GDP".into(),
                predicate: Predicate::Gt(10.0.into()),
            }));
        let json = spec.to_json();
        assert_eq!(
            json,
            r#"{"spec_version":1,"mark":"scatter","title":"t","encodings":{"x":{"column":"GDP per capita"},"y":{"column":"Birth Rate"}},"transforms":[{"type":"topk_label","p":0.1},{"type":"filter","column":"GDP","op":">","value":10.0}]}"#
        );
        assert_eq!(ChartSpec::from_json(&json).unwrap(), spec);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let err = ChartSpec::from_json(r#"{"spec_version":2,"mark":"bar"}"#).unwrap_err();
        assert!(err.to_string().contains("unsupported spec_version 2"));
    }

    #[test]
    fn missing_version_defaults_to_current() {
        let spec = ChartSpec::from_json(r#"{"mark":"histogram","encodings":{"x":{"column":"a"}}}"#).unwrap();
        assert_eq!(spec.spec_version, SPEC_VERSION);
    }
}

use std::ops::Range;

use crate::chart::{Channel, ChartSpec, Encoding, Mark, Scale, Transform};
use crate::data::{parse_number, Aggregate, ColumnType, Dataset, Filter, Predicate, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RulesError {
    #[error("no column of the dataset is mentioned in the goal")]
    NoColumnsMatched,
    #[error("no known edit in revision instruction {0:?}")]
    UnrecognizedRevision(String),
}

impl RulesError {
    pub fn code(&self) -> &'static str {
        match self {
            RulesError::NoColumnsMatched => "NoColumnsMatched",
            RulesError::UnrecognizedRevision(_) => "UnrecognizedRevision",
        }
    }
}

/// A column mentioned in free text. `span` is a byte range of the text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMatch {
    pub column: String,
    pub ctype: ColumnType,
    pub span: Range<usize>,
}

/// Names a column may be written as: the full name, the name without a
/// trailing parenthetical, and the name with underscores as spaces.
fn aliases(name: &str) -> Vec<String> {
    let lower = name.trim().to_ascii_lowercase();
    let mut out = vec![lower.clone()];
    if lower.ends_with(')') {
        if let Some(open) = lower.rfind('(') {
            out.push(lower[..open].trim_end().to_string());
        }
    }
    if lower.contains('_') {
        out.push(lower.replace('_', " "));
    }
    out.retain(|a| !a.is_empty());
    out.dedup();
    out
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b >= 0x80
}

fn at_boundary(text: &[u8], span: &Range<usize>) -> bool {
    let before = span.start == 0 || !is_word_byte(text[span.start - 1]) || !is_word_byte(text[span.start]);
    let after = span.end == text.len() || !is_word_byte(text[span.end]) || !is_word_byte(text[span.end - 1]);
    before && after
}

/// Finds dataset columns mentioned in `text`, in text order.
///
/// Matching is ASCII case-insensitive on word boundaries. Longer aliases
/// claim their span first, so "GDP per capita" wins over "GDP"; claimed
/// spans never overlap and each column matches at most once.
pub fn match_columns(text: &str, dataset: &Dataset) -> Vec<ColumnMatch> {
    let hay = text.to_ascii_lowercase();
    let bytes = hay.as_bytes();
    let mut candidates: Vec<(String, usize)> = dataset
        .columns()
        .iter()
        .enumerate()
        .flat_map(|(i, c)| aliases(&c.name).into_iter().map(move |a| (a, i)))
        .collect();
    // longest alias first, then column order
    candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(&b.1)));

    let mut claimed: Vec<Range<usize>> = Vec::new();
    let mut matched: Vec<Option<Range<usize>>> = vec![None; dataset.columns().len()];
    for (alias, col) in &candidates {
        if matched[*col].is_some() {
            continue;
        }
        let mut from = 0;
        while let Some(pos) = hay[from..].find(alias.as_str()) {
            let span = from + pos..from + pos + alias.len();
            from = span.start + 1;
            while !hay.is_char_boundary(from) {
                from += 1;
            }
            if !at_boundary(bytes, &span) || claimed.iter().any(|c| c.start < span.end && span.start < c.end) {
                continue;
            }
            claimed.push(span.clone());
            matched[*col] = Some(span);
            break;
        }
    }

    let mut out: Vec<ColumnMatch> = matched
        .into_iter()
        .enumerate()
        .filter_map(|(i, span)| {
            let c = &dataset.columns()[i];
            span.map(|span| ColumnMatch { column: c.name.clone(), ctype: c.ctype, span })
        })
        .collect();
    out.sort_by_key(|m| m.span.start);
    out
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn has_word(words: &[String], options: &[&str]) -> bool {
    words.iter().any(|w| options.contains(&w.as_str()))
}

const MATRIX_WORDS: &[&str] = &["correlation", "correlations", "overview", "matrix"];
const DISTRIBUTION_WORDS: &[&str] = &["distribution", "distributions", "histogram", "histograms"];

/// Deterministic offline chart generator.
///
/// Fresh goals are mapped by the first rule that applies:
/// 1. a correlation, overview or matrix keyword with two or more
///    quantitative columns in the dataset: a correlation heatmap;
/// 2. a distribution or histogram keyword and a quantitative match: a
///    histogram of it;
/// 3. two or more quantitative matches: a scatter of the first (x) against
///    the last (y);
/// 4. a categorical and a quantitative match: a bar of the mean;
/// 5. a temporal and a quantitative match: a line;
/// 6. a quantitative match: a histogram;
/// 7. any other match: a bar counting rows per value.
///
/// With a parent spec the goal is read as a revision instruction.
pub fn rule_based_generate(goal: &str, dataset: &Dataset, parent: Option<&ChartSpec>) -> Result<ChartSpec, RulesError> {
    match parent {
        Some(p) => revise_spec(goal, dataset, p),
        None => fresh_spec(goal, dataset),
    }
}

fn fresh_spec(goal: &str, dataset: &Dataset) -> Result<ChartSpec, RulesError> {
    let title = goal.trim().to_string();
    let w = words(goal);
    let all_quant: Vec<String> = dataset.columns_of_type(ColumnType::Quantitative).map(|c| c.name.clone()).collect();
    if has_word(&w, MATRIX_WORDS) && all_quant.len() >= 2 {
        return Ok(ChartSpec::correlation_heatmap(all_quant).with_title(title));
    }

    let matches = match_columns(goal, dataset);
    let of = |t: ColumnType| matches.iter().filter(move |m| m.ctype == t).map(|m| m.column.clone());
    let quant: Vec<String> = of(ColumnType::Quantitative).collect();
    let cat = of(ColumnType::Categorical).next();
    let temporal = of(ColumnType::Temporal).next();
    let histogram = |col: &str| ChartSpec::new(Mark::Histogram).with(Channel::X, Encoding::new(col));

    let spec = if let (true, Some(q)) = (has_word(&w, DISTRIBUTION_WORDS), quant.first()) {
        histogram(q)
    } else if quant.len() >= 2 {
        ChartSpec::scatter(&quant[0], &quant[quant.len() - 1])
    } else if let (Some(c), Some(q)) = (&cat, quant.first()) {
        ChartSpec::new(Mark::Bar)
            .with(Channel::X, Encoding::new(c))
            .with(Channel::Y, Encoding::aggregated(q, Aggregate::Mean))
    } else if let (Some(t), Some(q)) = (&temporal, quant.first()) {
        ChartSpec::new(Mark::Line).with(Channel::X, Encoding::new(t)).with(Channel::Y, Encoding::new(q))
    } else if let Some(q) = quant.first() {
        histogram(q)
    } else if let Some(m) = matches.first() {
        ChartSpec::new(Mark::Bar)
            .with(Channel::X, Encoding::new(&m.column))
            .with(Channel::Y, Encoding::aggregated(&m.column, Aggregate::Count))
    } else {
        return Err(RulesError::NoColumnsMatched);
    };
    Ok(spec.with_title(title))
}

fn named_axis(w: &[String]) -> Option<Channel> {
    w.iter().find_map(|t| match t.as_str() {
        "x" | "horizontal" => Some(Channel::X),
        "y" | "vertical" => Some(Channel::Y),
        _ => None,
    })
}

fn revise_spec(instruction: &str, dataset: &Dataset, parent: &ChartSpec) -> Result<ChartSpec, RulesError> {
    let mut spec = parent.clone();
    let w = words(instruction);
    let lower = instruction.to_ascii_lowercase();
    let mut applied = false;

    if has_word(&w, &["swap", "flip", "transpose"]) {
        if let (Some(x), Some(y)) = (spec.encodings.remove(&Channel::X), spec.encodings.remove(&Channel::Y)) {
            spec.encodings.insert(Channel::X, y);
            spec.encodings.insert(Channel::Y, x);
            applied = true;
        }
    }

    for (keyword, scale) in [("log", Some(Scale::Log)), ("logarithmic", Some(Scale::Log)), ("linear", None)] {
        if has_word(&w, &[keyword]) {
            let axis = named_axis(&w).unwrap_or(Channel::Y);
            if let Some(enc) = spec.encodings.get_mut(&axis) {
                enc.scale = scale;
                applied = true;
            }
        }
    }

    for phrase in ["color by ", "colour by ", "color it by ", "colour it by "] {
        if let Some(pos) = lower.find(phrase) {
            let rest_start = pos + phrase.len();
            if let Some(m) = match_columns(&instruction[rest_start..], dataset).into_iter().next() {
                spec.encodings.insert(Channel::Color, Encoding::new(m.column));
                applied = true;
                break;
            }
        }
    }

    if let Some(p) = top_and_bottom(&lower) {
        spec.transforms.retain(|t| !matches!(t, Transform::TopkLabel { .. }));
        spec.transforms.push(Transform::TopkLabel { p, channel: None });
        applied = true;
    }

    if let Some(pos) = find_word(&lower, "filter") {
        if let Some(f) = parse_filter(&instruction[pos + "filter".len()..], dataset) {
            spec.transforms.push(Transform::Filter(f));
            applied = true;
        }
    }

    if applied {
        Ok(spec)
    } else {
        Err(RulesError::UnrecognizedRevision(instruction.trim().to_string()))
    }
}

fn find_word(hay: &str, word: &str) -> Option<usize> {
    let bytes = hay.as_bytes();
    hay.match_indices(word)
        .map(|(i, _)| i)
        .find(|&i| at_boundary(bytes, &(i..i + word.len())))
}

/// "top and bottom N" or "top and bottom N%": N percent as a fraction.
fn top_and_bottom(lower: &str) -> Option<f64> {
    let pos = lower.find("top and bottom")?;
    let rest = lower[pos + "top and bottom".len()..].trim_start();
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
    let n: f64 = digits.parse().ok()?;
    Some(n / 100.0)
}

type MakePredicate = fn(Value) -> Predicate;

const OPS: &[(&str, MakePredicate)] = &[
    (">=", Predicate::Ge),
    ("<=", Predicate::Le),
    ("!=", Predicate::Ne),
    ("==", Predicate::Eq),
    ("=", Predicate::Eq),
    (">", Predicate::Gt),
    ("<", Predicate::Lt),
    ("at least", Predicate::Ge),
    ("at most", Predicate::Le),
    ("above", Predicate::Gt),
    ("over", Predicate::Gt),
    ("greater than", Predicate::Gt),
    ("below", Predicate::Lt),
    ("under", Predicate::Lt),
    ("less than", Predicate::Lt),
    ("is not", Predicate::Ne),
    ("is", Predicate::Eq),
];

/// `<column> <op> <value>`, with the column first in `text`.
fn parse_filter(text: &str, dataset: &Dataset) -> Option<Filter> {
    let m = match_columns(text, dataset).into_iter().next()?;
    if !text[..m.span.start].trim().is_empty() && text[..m.span.start].trim() != "where" {
        return None;
    }
    let rest = text[m.span.end..].trim_start();
    let lower = rest.to_ascii_lowercase();
    let (op, make) = OPS.iter().find(|(op, _)| lower.starts_with(op))?;
    let raw = rest[op.len()..].trim().trim_matches(|c| c == '"' || c == '\'');
    if raw.is_empty() {
        return None;
    }
    let value = match m.ctype {
        ColumnType::Quantitative => Value::Number(parse_number(raw)?),
        _ => Value::Text(raw.to_string()),
    };
    Some(Filter { column: m.column, predicate: make(value) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ingest_csv;

    fn ds() -> Dataset {
        ingest_csv(
            "Country,GDP,GDP per capita,Minimum wage,Birth Rate,Urban_population,Tax revenue(%),day\n\
             A,1,2,3,4,5,6%,2020-01-01\nB,2,3,4,5,6,7%,2020-01-02\n"
                .as_bytes(),
            "d",
        )
        .unwrap()
    }

    #[test]
    fn longest_alias_wins() {
        let m = match_columns("gdp per capita and GDP", &ds());
        let names: Vec<&str> = m.iter().map(|m| m.column.as_str()).collect();
        assert_eq!(names, ["GDP per capita", "GDP"]);
    }

    #[test]
    fn aliases_and_boundaries() {
        let m = match_columns("urban population vs tax revenue; gdpx", &ds());
        let names: Vec<&str> = m.iter().map(|m| m.column.as_str()).collect();
        assert_eq!(names, ["Urban_population", "Tax revenue(%)"]);
    }

    #[test]
    fn appendix_question_gives_scatter() {
        let goal = "How social-economic factors e.g. GDP per capita, minimum wage influence the birth rate of a country?";
        let spec = rule_based_generate(goal, &ds(), None).unwrap();
        assert_eq!(spec.mark, Mark::Scatter);
        assert_eq!(spec.encoding(Channel::X).unwrap().column, "GDP per capita");
        assert_eq!(spec.encoding(Channel::Y).unwrap().column, "Birth Rate");
    }

    #[test]
    fn overview_is_matrix_of_all_quantitative() {
        let spec = rule_based_generate("show an overview with correlation matrix", &ds(), None).unwrap();
        assert!(spec.is_matrix());
        assert_eq!(spec.matrix.unwrap().len(), 6);
    }

    #[test]
    fn other_rules() {
        let d = ds();
        let g = |s: &str| rule_based_generate(s, &d, None).unwrap();
        assert_eq!(g("distribution of GDP and birth rate").mark, Mark::Histogram);
        let bar = g("average GDP by country");
        assert_eq!(bar.encoding(Channel::Y).unwrap().aggregate, Some(Aggregate::Mean));
        assert_eq!(g("GDP over day").mark, Mark::Line);
        assert_eq!(g("what about birth rate").mark, Mark::Histogram);
        assert_eq!(g("countries per country").encoding(Channel::Y).unwrap().aggregate, Some(Aggregate::Count));
        assert_eq!(rule_based_generate("nothing here", &d, None), Err(RulesError::NoColumnsMatched));
    }

    #[test]
    fn revisions() {
        let d = ds();
        let parent = ChartSpec::scatter("GDP", "Birth Rate");
        let flipped = rule_based_generate("flip it", &d, Some(&parent)).unwrap();
        assert_eq!(flipped.encoding(Channel::X).unwrap().column, "Birth Rate");

        let labeled = rule_based_generate("now give me top and bottom 10", &d, Some(&parent)).unwrap();
        assert_eq!(labeled.transforms, vec![Transform::TopkLabel { p: 0.1, channel: None }]);
        assert_eq!(labeled.encodings, parent.encodings);

        let log = rule_based_generate("use log scale on x", &d, Some(&parent)).unwrap();
        assert_eq!(log.encoding(Channel::X).unwrap().scale, Some(Scale::Log));
        assert_eq!(log.encoding(Channel::Y).unwrap().scale, None);

        let colored = rule_based_generate("color by country", &d, Some(&parent)).unwrap();
        assert_eq!(colored.encoding(Channel::Color).unwrap().column, "Country");

        let filtered = rule_based_generate("filter gdp per capita >= 2.5", &d, Some(&parent)).unwrap();
        assert_eq!(
            filtered.transforms,
            vec![Transform::Filter(Filter { column: "GDP per capita".into(), predicate: Predicate::Ge(2.5.into()) })]
        );
        let text = rule_based_generate("filter Country is A", &d, Some(&parent)).unwrap();
        assert_eq!(
            text.transforms,
            vec![Transform::Filter(Filter { column: "Country".into(), predicate: Predicate::Eq("A".into()) })]
        );

        assert!(matches!(
            rule_based_generate("make it nicer", &d, Some(&parent)),
            Err(RulesError::UnrecognizedRevision(_))
        ));
    }
}

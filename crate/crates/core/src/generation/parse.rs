use crate::chart::ChartSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("no JSON object found in model output")]
    NoJsonFound,
    #[error("malformed spec JSON at line {line}, column {column}: {message}")]
    MalformedSpecJson { line: usize, column: usize, message: String },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::NoJsonFound => "NoJsonFound",
            ParseError::MalformedSpecJson { .. } => "MalformedSpecJson",
        }
    }
}

/// Extracts the first top-level JSON object from free text, tolerating code
/// fences and surrounding prose, and deserializes it as an unvalidated spec.
/// Positions in errors refer to the original text.
pub fn parse_model_output(text: &str) -> Result<ChartSpec, ParseError> {
    let start = text.find('{').ok_or(ParseError::NoJsonFound)?;
    let end = object_end(&text[start..]).map_or(text.len(), |len| start + len);
    serde_json::from_str(&text[start..end]).map_err(|e| {
        let (line, column) = shift(text, start, e.line(), e.column());
        ParseError::MalformedSpecJson { line, column, message: e.to_string() }
    })
}

// Byte length of the balanced object starting at `s[0] == '{'`, ignoring
// braces inside strings. None when the object never closes.
fn object_end(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, b) in s.bytes().enumerate() {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

// Maps a 1-based (line, column) within the slice at `offset` back to the
// full text.
fn shift(text: &str, offset: usize, line: usize, column: usize) -> (usize, usize) {
    let before = &text[..offset];
    let base_line = before.matches('\n').count();
    if line <= 1 {
        let base_col = before.rsplit('\n').next().map_or(0, |l| l.chars().count());
        (base_line + 1, base_col + column)
    } else {
        (base_line + line, column)
    }
}

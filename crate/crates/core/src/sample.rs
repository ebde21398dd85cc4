//! A bundled 20-row country dataset for examples, tests and demos.
//!
//! The 26 column names follow the Global Country Information dataset; the
//! rows are synthetic. Cells use the source's formatting (`"$1,234"`,
//! `"58.10%"`, quoted thousands) and three cells are blank.

use crate::data::{ingest_csv, Dataset};

pub const COUNTRIES_CSV: &str = include_str!("../fixtures/countries.csv");

pub const COUNTRIES_NAME: &str = "countries";

/// The analysis question posed against the country dataset.
pub const ANALYSIS_QUESTION: &str =
    "How social-economic factors e.g. GDP per capita, minimum wage influence the birth rate of a country?";

/// Ingests [`COUNTRIES_CSV`].
pub fn countries() -> Dataset {
    ingest_csv(COUNTRIES_CSV.as_bytes(), COUNTRIES_NAME).expect("bundled sample parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnType;

    #[test]
    fn shape() {
        let ds = countries();
        assert_eq!((ds.row_count(), ds.columns().len()), (20, 26));
        assert_eq!(ds.columns_of_type(ColumnType::Categorical).count(), 1);
        assert_eq!(ds.columns_of_type(ColumnType::Quantitative).count(), 25);
    }
}

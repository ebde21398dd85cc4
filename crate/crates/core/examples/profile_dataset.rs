//! Ingest a CSV and print its dataset summary and one full column profile.
//!
//! ```text
//! cargo run -p hypocanvas-core --example profile_dataset [path.csv]
//! ```

use hypocanvas_core::data::{ingest_csv, ColumnType, profile_column, summarize_dataset};
use hypocanvas_core::sample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = match std::env::args().nth(1) {
        Some(path) => {
            let name = std::path::Path::new(&path).file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
            ingest_csv(std::fs::File::open(&path)?, &name)?
        }
        None => sample::countries(),
    };

    print!("{}", summarize_dataset(&ds).render_text());

    let column = ds.columns_of_type(ColumnType::Quantitative).next().unwrap_or(&ds.columns()[0]);
    let profile = profile_column(column, ds.row_count());
    println!("\nprofile of {:?}:\n{}", profile.name, serde_json::to_string_pretty(&profile)?);
    Ok(())
}

//! Pairwise-complete Pearson correlations and top/bottom quantile labels.

use hypocanvas_core::data::{correlation_matrix, execute_query, quantile_labels, ChartQuery, Projection};
use hypocanvas_core::sample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = sample::countries();
    let columns = ["GDP per capita", "Minimum wage", "Birth Rate", "Fertility Rate", "Life expectancy"];
    let m = correlation_matrix(&ds, &columns)?;

    print!("{:>16}", "");
    for c in &columns {
        print!("{:>16}", c);
    }
    println!();
    for (i, row) in columns.iter().enumerate() {
        print!("{row:>16}");
        for j in 0..columns.len() {
            match m.get(i, j) {
                Some(r) => print!("{r:>16.3}"),
                None => print!("{:>16}", "null"),
            }
        }
        println!();
    }

    let table = execute_query(&ds, &ChartQuery::new(ds.id(), vec![Projection::plain("Country"), Projection::plain("Birth Rate")]))?;
    let labels = quantile_labels(&table, "Birth Rate", 0.1)?;
    let country = |i: &usize| table.rows[*i][0].to_string();
    println!("\nhighest 10% birth rate: {:?}", labels.top.iter().map(country).collect::<Vec<_>>());
    println!("lowest 10% birth rate:  {:?}", labels.bottom.iter().map(country).collect::<Vec<_>>());
    Ok(())
}

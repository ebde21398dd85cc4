//! Group, aggregate, bin, filter, sort and limit over the bundled sample.

use hypocanvas_core::data::{
    execute_query, Aggregate, BinSpec, ChartQuery, DataTable, Filter, Predicate, Projection, SortDirection, SortSpec,
    Value,
};
use hypocanvas_core::sample;

fn show(title: &str, t: &DataTable) {
    println!("{title}");
    println!("  {}", t.column_names.join(" | "));
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        println!("  {}", cells.join(" | "));
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = sample::countries();

    // five highest birth rates among countries above $10,000 GDP per capita
    let mut q = ChartQuery::new(
        ds.id(),
        vec![Projection::plain("Country"), Projection::plain("Birth Rate")],
    );
    q.filters.push(Filter { column: "GDP per capita".into(), predicate: Predicate::Gt(Value::Number(10_000.0)) });
    q.sort = Some(SortSpec { column: "Birth Rate".into(), aggregate: None, direction: SortDirection::Desc });
    q.limit = std::num::NonZeroUsize::new(5);
    show("top birth rates, GDP per capita > 10000", &execute_query(&ds, &q)?);

    // mean life expectancy per GDP per capita bin
    let mut q = ChartQuery::new(
        ds.id(),
        vec![
            Projection::plain("GDP per capita"),
            Projection::aggregated("Life expectancy", Aggregate::Mean),
            Projection::aggregated("Country", Aggregate::Count),
        ],
    );
    q.bins = Some(BinSpec { column: "GDP per capita".into(), bin_count: 4 });
    show("\nlife expectancy by GDP per capita bin", &execute_query(&ds, &q)?);
    Ok(())
}

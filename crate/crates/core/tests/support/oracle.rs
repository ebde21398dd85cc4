//! Reference evaluators written from the query contract, sharing no code
//! with the engine. Slow on purpose: nested loops and linear scans.

use std::cmp::Ordering;

use hypocanvas_core::data::{
    output_name, Aggregate, ChartQuery, ColumnType, DataTable, Dataset, Predicate, SortDirection, Value,
};

fn compare(a: &Value, b: &Value) -> Ordering {
    fn rank(v: &Value) -> u8 {
        match v {
            Value::Null => 0,
            Value::Number(_) => 1,
            Value::Date(_) => 2,
            Value::Text(_) => 3,
        }
    }
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y).expect("finite numbers"),
        (Value::Date(x), Value::Date(y)) => x.cmp(y),
        (Value::Text(x), Value::Text(y)) => x.cmp(y),
        _ => rank(a).cmp(&rank(b)),
    }
}

fn same(a: &Value, b: &Value) -> bool {
    compare(a, b) == Ordering::Equal
}

fn keep(cell: &Value, p: &Predicate) -> bool {
    if matches!(cell, Value::Null) {
        return false;
    }
    match p {
        Predicate::Eq(v) => compare(cell, v) == Ordering::Equal,
        Predicate::Ne(v) => compare(cell, v) != Ordering::Equal,
        Predicate::Lt(v) => compare(cell, v) == Ordering::Less,
        Predicate::Le(v) => compare(cell, v) != Ordering::Greater,
        Predicate::Gt(v) => compare(cell, v) == Ordering::Greater,
        Predicate::Ge(v) => compare(cell, v) != Ordering::Less,
        Predicate::InRange(lo, hi) => compare(cell, lo) != Ordering::Less && compare(cell, hi) != Ordering::Greater,
    }
}

fn cell<'a>(ds: &'a Dataset, column: &str, row: usize) -> &'a Value {
    let col = ds.columns().iter().find(|c| c.name == column).expect("query columns exist");
    &col.cells[row]
}

fn aggregate(agg: Aggregate, cells: &[Value]) -> Value {
    let mut count = 0usize;
    let mut nums = Vec::new();
    for c in cells {
        match c {
            Value::Null => {}
            Value::Number(n) => {
                count += 1;
                nums.push(*n);
            }
            _ => count += 1,
        }
    }
    if agg == Aggregate::Count {
        return Value::Number(count as f64);
    }
    if nums.is_empty() {
        return Value::Null;
    }
    let mut acc = nums[0];
    for &n in &nums[1..] {
        acc = match agg {
            Aggregate::Sum | Aggregate::Mean => acc + n,
            Aggregate::Min => {
                if n < acc {
                    n
                } else {
                    acc
                }
            }
            Aggregate::Max => {
                if n > acc {
                    n
                } else {
                    acc
                }
            }
            Aggregate::Count => unreachable!(),
        };
    }
    if agg == Aggregate::Mean {
        acc /= nums.len() as f64;
    }
    Value::Number(acc)
}

/// Brute-force evaluation of `query`: filter, bin, group, sort, limit.
pub fn evaluate(ds: &Dataset, query: &ChartQuery) -> DataTable {
    let mut rows: Vec<usize> = Vec::new();
    for r in 0..ds.row_count() {
        let mut ok = true;
        for f in &query.filters {
            let literal_fix = |v: &Value| match (ds.column(&f.column).unwrap().ctype, v) {
                (ColumnType::Temporal, Value::Text(s)) => {
                    hypocanvas_core::data::parse_date(s).map_or(Value::Null, Value::Date)
                }
                _ => v.clone(),
            };
            let p = match &f.predicate {
                Predicate::Eq(v) => Predicate::Eq(literal_fix(v)),
                Predicate::Ne(v) => Predicate::Ne(literal_fix(v)),
                Predicate::Lt(v) => Predicate::Lt(literal_fix(v)),
                Predicate::Le(v) => Predicate::Le(literal_fix(v)),
                Predicate::Gt(v) => Predicate::Gt(literal_fix(v)),
                Predicate::Ge(v) => Predicate::Ge(literal_fix(v)),
                Predicate::InRange(a, b) => Predicate::InRange(literal_fix(a), literal_fix(b)),
            };
            if !keep(cell(ds, &f.column, r), &p) {
                ok = false;
            }
        }
        if ok {
            rows.push(r);
        }
    }

    // wide rows: one value per projection, bin column replaced by its edge
    let mut binned_column: Option<(String, Vec<f64>)> = None;
    if let Some(b) = &query.bins {
        rows.retain(|&r| !matches!(cell(ds, &b.column, r), Value::Null));
        let vals: Vec<f64> = rows.iter().map(|&r| cell(ds, &b.column, r).as_number().unwrap()).collect();
        if !vals.is_empty() {
            let mut lo = vals[0];
            let mut hi = vals[0];
            for &v in &vals {
                if v < lo {
                    lo = v;
                }
                if v > hi {
                    hi = v;
                }
            }
            let width = if hi > lo { (hi - lo) / b.bin_count as f64 } else { 0.0 };
            let edges: Vec<f64> = (0..b.bin_count).map(|i| lo + i as f64 * width).collect();
            binned_column = Some((b.column.clone(), edges));
        }
    }
    let bin_of = |v: &Value, edges: &[f64]| -> Value {
        let x = v.as_number().unwrap();
        let mut chosen = edges[0];
        for &e in edges {
            if x >= e {
                chosen = e;
            }
        }
        // zero width: every edge equals lo
        Value::Number(chosen)
    };

    let wide: Vec<Vec<Value>> = rows
        .iter()
        .map(|&r| {
            query
                .projections
                .iter()
                .map(|p| {
                    let v = cell(ds, &p.column, r);
                    match &binned_column {
                        Some((c, edges)) if *c == p.column => bin_of(v, edges),
                        _ => v.clone(),
                    }
                })
                .collect()
        })
        .collect();

    let any_agg = query.projections.iter().any(|p| p.aggregate.is_some());
    let mut out: Vec<Vec<Value>> = if !any_agg {
        wide
    } else {
        let key_idx: Vec<usize> = (0..query.projections.len()).filter(|&i| query.projections[i].aggregate.is_none()).collect();
        let mut groups: Vec<(Vec<Value>, Vec<usize>)> = Vec::new();
        for (i, row) in wide.iter().enumerate() {
            let key: Vec<Value> = key_idx.iter().map(|&k| row[k].clone()).collect();
            let mut found = false;
            for g in groups.iter_mut() {
                if g.0.len() == key.len() && g.0.iter().zip(&key).all(|(a, b)| same(a, b)) {
                    g.1.push(i);
                    found = true;
                    break;
                }
            }
            if !found {
                groups.push((key, vec![i]));
            }
        }
        if groups.is_empty() && key_idx.is_empty() {
            groups.push((vec![], vec![]));
        }
        groups
            .into_iter()
            .map(|(key, members)| {
                let mut k = 0;
                query
                    .projections
                    .iter()
                    .enumerate()
                    .map(|(i, p)| match p.aggregate {
                        None => {
                            k += 1;
                            key[k - 1].clone()
                        }
                        Some(a) => {
                            let cells: Vec<Value> = members.iter().map(|&m| wide[m][i].clone()).collect();
                            aggregate(a, &cells)
                        }
                    })
                    .collect()
            })
            .collect()
    };

    if let Some(s) = &query.sort {
        let pos = query
            .projections
            .iter()
            .position(|p| p.column == s.column && p.aggregate == s.aggregate)
            .expect("sort key is projected");
        // stable insertion sort
        for i in 1..out.len() {
            let mut j = i;
            while j > 0 {
                let ord = compare(&out[j - 1][pos], &out[j][pos]);
                let ord = if s.direction == SortDirection::Desc { ord.reverse() } else { ord };
                if ord == Ordering::Greater {
                    out.swap(j - 1, j);
                    j -= 1;
                } else {
                    break;
                }
            }
        }
    }
    if let Some(limit) = query.limit {
        out.truncate(limit.get());
    }
    DataTable {
        column_names: query.projections.iter().map(|p| output_name(&p.column, p.aggregate)).collect(),
        rows: out,
    }
}

/// Pearson r from raw sums over pairwise-complete rows:
/// (nΣxy − ΣxΣy) / sqrt((nΣx² − (Σx)²)(nΣy² − (Σy)²)).
pub fn pearson(xs: &[Option<f64>], ys: &[Option<f64>]) -> Option<f64> {
    let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        if let (Some(x), Some(y)) = (x, y) {
            n += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
    }
    if n < 2.0 {
        return None;
    }
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    // sums of integers and halves are exact, so zero variance is exactly zero
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

pub fn column_numbers(ds: &Dataset, name: &str) -> Vec<Option<f64>> {
    ds.column(name).unwrap().cells.iter().map(|v| v.as_number()).collect()
}

/// Rows per side expected from nearest-rank labeling, by integer
/// arithmetic on p expressed in hundredths.
pub fn expected_label_count(n: usize, p_hundredths: usize) -> usize {
    (n * p_hundredths).div_ceil(100).clamp(1, n)
}

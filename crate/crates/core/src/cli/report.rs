//! Plain-text rendering of a JSON report.

use std::fmt::Write;

use serde_json::{Map, Value};

/// One cell: scalars verbatim, witnesses by their display string, cohomology
/// by its dimension with `?` marking an unstable value.
fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Object(o) => {
            if let Some(Value::String(d)) = o.get("display") {
                d.clone()
            } else if let Some(dim) = o.get("dim") {
                let unstable = o.get("stable") == Some(&Value::Bool(false));
                format!("{}{}", dim, if unstable { "?" } else { "" })
            } else {
                v.to_string()
            }
        }
        Value::Array(items) if !items.is_empty() && items.iter().all(|i| i.get("tag").is_some() && i.get("dim").is_some()) => items
            .iter()
            .map(|i| format!("{}:{}", i["tag"], cell(i)))
            .collect::<Vec<_>>()
            .join(" "),
        Value::Array(items) if items.iter().all(|i| i.is_object() && i.get("display").is_some()) => {
            items.iter().map(cell).collect::<Vec<_>>().join(", ")
        }
        Value::Array(rows)
            if !rows.is_empty()
                && rows
                    .iter()
                    .all(|r| r.as_array().is_some_and(|r| r.iter().all(|i| i.get("display").is_some()))) =>
        {
            let inner: Vec<String> = rows.iter().map(|r| cell(r).replace(", ", " ")).collect();
            format!("[{}]", inner.join("; "))
        }
        _ => v.to_string(),
    }
}

fn table(rows: &[Value], out: &mut String, indent: &str) {
    let mut columns: Vec<String> = Vec::new();
    for r in rows {
        if let Value::Object(o) = r {
            for k in o.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    if let Some(i) = columns.iter().position(|c| c == "degree") {
        let d = columns.remove(i);
        columns.insert(0, d);
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| columns.iter().map(|c| r.get(c).map_or(String::new(), cell)).collect())
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(j, c)| body.iter().map(|r| r[j].chars().count()).chain([c.len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{indent}{}", line(columns.iter().map(String::as_str).collect()));
    for r in &body {
        let _ = writeln!(out, "{indent}{}", line(r.iter().map(String::as_str).collect()));
    }
}

fn section(obj: &Map<String, Value>, out: &mut String, indent: &str) {
    let width = obj.keys().map(String::len).max().unwrap_or(0);
    for (k, v) in obj {
        match v {
            Value::Array(rows) if !rows.is_empty() && rows.iter().all(|r| r.is_object() && r.get("display").is_none()) => {
                let _ = writeln!(out, "{indent}{k}:");
                table(rows, out, &format!("{indent}  "));
            }
            Value::Object(o) if o.get("display").is_none() && o.get("dim").is_none() => {
                let _ = writeln!(out, "{indent}{k}:");
                section(o, out, &format!("{indent}  "));
            }
            _ => {
                let _ = writeln!(out, "{indent}{k:<width$}  {}", cell(v));
            }
        }
    }
}

/// Human-readable summary of a report produced by [`super::run`].
pub fn render_table(report: &Value) -> String {
    let mut out = String::new();
    let get = |k: &str| report.get(k).map_or(String::from("-"), cell);
    let _ = writeln!(out, "command   {}", get("command"));
    if let Some(job) = report.get("job") {
        let vars = job
            .get("variables")
            .and_then(Value::as_array)
            .map(|v| v.iter().map(cell).collect::<Vec<_>>().join(", "))
            .unwrap_or_default();
        let _ = writeln!(out, "kind      {} on ({vars})", cell(&job["kind"]));
    }
    if let Some(c) = report.get("cutoffs") {
        let _ = writeln!(
            out,
            "cutoffs   P={} D={} jet_bound={}",
            c["weight"], c["poly_degree"], c["jet_bound"]
        );
    }
    let _ = writeln!(out, "status    {} (exit {})", get("status"), get("exit_code"));
    if let Some(Value::Object(err)) = report.get("error") {
        let _ = writeln!(out, "error     {}: {}", cell(&err["kind"]), cell(&err["message"]));
        if let Some(Value::Object(w)) = err.get("witness") {
            let _ = writeln!(out, "witness:");
            section(w, &mut out, "  ");
        }
    }
    match report.get("result") {
        Some(Value::Object(r)) => {
            let _ = writeln!(out, "result:");
            section(r, &mut out, "  ");
        }
        Some(v) => {
            let _ = writeln!(out, "result    {}", cell(v));
        }
        None => {}
    }
    out
}

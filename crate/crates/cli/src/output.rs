//! Report rendering. Floats are always written with 17 significant digits so
//! the text round-trips and does not depend on the shortest-repr algorithm.

use std::fmt::Write as _;

use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn number(n: &serde_json::Number) -> String {
    match (n.as_i64(), n.as_u64()) {
        (Some(i), _) if !n.is_f64() => i.to_string(),
        (_, Some(u)) if !n.is_f64() => u.to_string(),
        _ => float(n.as_f64().unwrap_or(f64::NAN)),
    }
}

pub fn to_json(v: &Value) -> String {
    let mut out = String::new();
    write_json(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_json(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            // short rows of scalars stay on one line
            if a.len() <= 4 && a.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_json(x, depth, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_json(x, depth + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(depth + 1), serde_json::to_string(k).expect("keys serialize"));
                write_json(x, depth + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

/// Every scalar leaf as a `path,value` row.
pub fn to_flat_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten(v, String::new(), &mut rows);
    let mut out = String::from("path,value\n");
    for (p, x) in rows {
        let _ = writeln!(out, "{},{}", csv_field(&p), csv_field(&x));
    }
    out
}

fn flatten(v: &Value, path: String, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(x, join(k), rows)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(x, join(&i.to_string()), rows)),
        Value::Null => rows.push((path, String::new())),
        Value::Bool(b) => rows.push((path, b.to_string())),
        Value::Number(n) => rows.push((path, number(n))),
        Value::String(s) => rows.push((path, s.clone())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Tidy x,y,series rows for plotting.
pub fn to_plotdata(points: &[(f64, f64, String)]) -> String {
    let mut out = String::from("x,y,series\n");
    for (x, y, s) in points {
        let _ = writeln!(out, "{},{},{}", float(*x), float(*y), csv_field(s));
    }
    out
}

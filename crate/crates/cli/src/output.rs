//! Record rendering: one JSON object per run, or CSV with a header row.

use std::io::Write;

use serde_json::{Map, Value};

/// Columns holding small failure probabilities, always written in scientific notation.
const SCIENTIFIC: &[&str] = &["q", "two_term_bound", "relaxed_bound"];

/// `x` with 17 significant digits, positional unless the exponent is extreme.
pub fn format_float(x: f64, scientific: bool) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let sci = format!("{x:.16e}");
    if scientific {
        return sci;
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).expect("exponent");
    if !(-7..=20).contains(&exp) {
        return sci;
    }
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn cell(key: &str, v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => u.to_string(),
            (_, Some(i), _) => i.to_string(),
            (_, _, Some(f)) => format_float(f, SCIENTIFIC.contains(&key)),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(|i| cell(key, i)).collect::<Vec<_>>().join(";"),
        Value::Object(_) => v.to_string(),
    }
}

/// Splits a record into its scalar columns and an optional embedded table.
fn split(record: &Map<String, Value>) -> (Vec<(&str, &Value)>, Option<&Vec<Value>>) {
    let mut scalars = Vec::new();
    let mut table = None;
    for (k, v) in record {
        match v {
            Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => table = Some(items),
            _ => scalars.push((k.as_str(), v)),
        }
    }
    (scalars, table)
}

pub fn write_json<W: Write>(out: &mut W, records: &[Map<String, Value>]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

/// All records must come from the same command.
pub fn write_csv<W: Write>(out: W, records: &[Map<String, Value>]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header_written = false;
    for r in records {
        let (scalars, table) = split(r);
        let rows: Vec<Vec<(&str, &Value)>> = match table {
            None => vec![scalars],
            Some(items) => items
                .iter()
                .map(|item| {
                    let mut row = scalars.clone();
                    row.extend(item.as_object().into_iter().flatten().map(|(k, v)| (k.as_str(), v)));
                    row
                })
                .collect(),
        };
        for row in rows {
            if !header_written {
                w.write_record(row.iter().map(|c| c.0))?;
                header_written = true;
            }
            w.write_record(row.iter().map(|(k, v)| cell(k, v)))?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [
            0.7852,
            1.0 / 3.0,
            5.6114e-5,
            3.3e-48,
            123456.789,
            1.0,
            0.1 + 0.2,
            -2.5e-9,
        ] {
            for sci in [false, true] {
                let s = format_float(x, sci);
                assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            }
        }
        assert_eq!(format_float(0.5, false), "0.50000000000000000");
        assert_eq!(format_float(5.6114e-5, true), "5.6113999999999998e-5");
        assert_eq!(format_float(0.0, false), "0");
        assert_eq!(format_float(f64::NEG_INFINITY, false), "");
    }
}

//! CSV rendering of numeric tables and flat JSON summaries.

use raptune_core::sim::fmt_sig;
use serde_json::{Map, Value};

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_sig(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .header
                        .iter()
                        .zip(row)
                        .map(|(k, &v)| (k.clone(), Value::from(v)))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        Value::Array(items) => {
            let cells: Vec<String> = items.iter().map(scalar).collect();
            out.push((prefix.to_string(), cells.join(";")));
        }
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => n.as_f64().map(fmt_sig).unwrap_or_else(|| n.to_string()),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One header line and one value line, with nested keys joined by dots.
pub fn flatten_csv(v: &Value) -> String {
    let mut cells = Vec::new();
    flatten("", v, &mut cells);
    let (keys, values): (Vec<String>, Vec<String>) = cells.into_iter().unzip();
    format!("{}\n{}\n", keys.join(","), values.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flat_summary() {
        let v = json!({"class": "B", "point": {"omega": 1.5, "magnitude": 0.25}, "warnings": []});
        assert_eq!(flatten_csv(&v), "class,point.omega,point.magnitude,warnings\nB,1.5,0.25,\n");
    }

    #[test]
    fn table_csv_and_json() {
        let t = Table::new(&["omega", "re"], vec![vec![1.0, 0.1234567], vec![2.0, -3.0]]);
        assert_eq!(t.to_csv(), "omega,re\n1,0.123457\n2,-3\n");
        assert_eq!(t.to_json()[1]["re"], json!(-3.0));
    }
}

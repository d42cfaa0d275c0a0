//! Number formatting and writers shared by the subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use relaygame::numeric::round_sig;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SIG_DIGITS: usize = 12;
pub const SCHEMA_VERSION: u32 = 1;

/// `x` rounded to twelve significant digits, shortest form.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{}", round_sig(x, SIG_DIGITS))
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            serde_json::Number::from_f64(round_sig(x, SIG_DIGITS)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// JSON document with `schema_version` first and every float rounded.
pub fn document(kind: &str, body: impl Serialize) -> anyhow::Result<Value> {
    let mut out = Map::new();
    out.insert("schema_version".into(), json!(SCHEMA_VERSION));
    out.insert("kind".into(), json!(kind));
    match round_value(serde_json::to_value(body)?) {
        Value::Object(o) => out.extend(o),
        other => {
            out.insert("result".into(), other);
        }
    }
    Ok(Value::Object(out))
}

pub fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn write_json(path: Option<&Path>, doc: &Value) -> anyhow::Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Comma-separated table with a header row.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Csv { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn write(&self, path: Option<&Path>) -> anyhow::Result<()> {
        let mut w = sink(path)?;
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(num(0.58496250072115618), "0.584962500721");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn document_rounds_nested_floats() {
        let d = document("x", json!({"a": [1.0 / 3.0], "b": {"c": 2.0f64.sqrt()}})).unwrap();
        assert_eq!(d["schema_version"], 1);
        assert_eq!(d["a"][0].as_f64().unwrap(), 0.333333333333);
        assert_eq!(d["b"]["c"].as_f64().unwrap(), 1.41421356237);
    }
}

//! Text output with every float at 17 significant digits.
//!
//! JSON goes through `serde_json::Value` and is re-written by hand so floats
//! print as `{:.16e}` and non-finite values as `null`. Object keys keep
//! their declaration order.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// `x` with 17 significant digits, or `null`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>, depth: usize) {
    let nl = |out: &mut String, d: usize| {
        if let Some(w) = indent {
            out.push('\n');
            out.extend(std::iter::repeat_n(' ', w * d));
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_f64(n.as_f64().expect("f64 number")));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                nl(out, depth + 1);
                write_value(out, x, indent, depth + 1);
            }
            nl(out, depth);
            out.push(']');
        }
        Value::Object(o) => {
            if o.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, x)) in o.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                nl(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("key encodes"));
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(out, x, indent, depth + 1);
            }
            nl(out, depth);
            out.push('}');
        }
    }
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// One-line JSON.
pub fn to_json_line(v: &impl Serialize) -> Result<String> {
    let mut s = String::new();
    write_value(&mut s, &to_value(v)?, None, 0);
    Ok(s)
}

/// Indented JSON with a trailing newline.
pub fn to_json_pretty(v: &impl Serialize) -> Result<String> {
    let mut s = String::new();
    write_value(&mut s, &to_value(v)?, Some(2), 0);
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    std::fs::write(path, to_json_pretty(v)?)?;
    Ok(())
}

/// Writes one JSON line per item.
pub fn write_jsonl<T: Serialize>(mut out: impl Write, items: impl IntoIterator<Item = T>) -> Result<()> {
    for it in items {
        writeln!(out, "{}", to_json_line(&it)?)?;
    }
    Ok(())
}

/// A CSV cell: floats as `{:.16e}` (empty when non-finite), strings quoted
/// only when they need it.
pub enum Cell<'a> {
    F(f64),
    I(i64),
    U(u64),
    S(&'a str),
    B(bool),
}

impl Cell<'_> {
    fn render(&self) -> String {
        match self {
            Cell::F(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::F(_) => String::new(),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.to_string(),
        }
    }
}

/// Accumulates rows; `finish` gives the document.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) {
        debug_assert_eq!(cells.len(), self.columns);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

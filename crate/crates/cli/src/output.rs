//! JSON and CSV emission with round-trip exact floats.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Number, Value};
use thinzeta_core::{CertifiedF64, Error, Result};

/// `x` with 17 significant digits, `null` when not finite.
pub fn float(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    // arbitrary_precision keeps the digits exactly as written
    serde_json::from_str::<Number>(&text)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub fn csv_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// Ordered JSON object builder.
#[derive(Default)]
pub struct Obj(Map<String, Value>);

impl Obj {
    pub fn new() -> Self {
        Obj::default()
    }

    pub fn put(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn num(self, key: &str, x: f64) -> Self {
        self.put(key, float(x))
    }

    pub fn value(self) -> Value {
        Value::Object(self.0)
    }
}

pub fn certified(v: &CertifiedF64) -> Value {
    Obj::new()
        .num("re", v.value.re)
        .num("im", v.value.im)
        .num("err", v.err)
        .put("certified", v.certified)
        .value()
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
        }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let line: Vec<String> = cells.into_iter().collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize") + "\n"
}

/// Writes to `out`, or stdout when absent.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    let res = match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush())
        }
    };
    res.map_err(|e| Error::Resource(format!("writing output: {e}")))
}

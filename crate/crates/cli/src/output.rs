use std::io::Write;
use std::path::Path;

use fnorm_core::Error;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::Format;

/// Everything a subcommand reports.
#[derive(Debug, Default, Serialize)]
pub struct CommandResult {
    pub command: &'static str,
    pub inputs: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub diagnostics: Map<String, Value>,
    /// Rows printed by `--format csv`; also included in `outputs.table`.
    #[serde(skip)]
    pub table: Option<Vec<Value>>,
}

impl CommandResult {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            ..Self::default()
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.inputs.insert(key.into(), to_value(value));
        self
    }

    pub fn output(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.outputs.insert(key.into(), to_value(value));
        self
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.diagnostics.insert(key.into(), to_value(value));
        self
    }

    pub fn set_table<T: Serialize>(&mut self, rows: &[T]) -> &mut Self {
        let rows: Vec<Value> = rows.iter().map(to_value).collect();
        self.outputs.insert("table".into(), Value::Array(rows.clone()));
        self.table = Some(rows);
        self
    }
}

/// A command error together with whatever the command computed before it.
#[derive(Debug)]
pub struct Failure {
    pub error: Error,
    pub detail: Option<Value>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self { error, detail: None }
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn emit(result: &CommandResult, format: Format) -> Result<(), Error> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |source| Error::Io {
        path: "<stdout>".into(),
        source,
    };
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(result)?;
            writeln!(out, "{text}").map_err(io)?;
        }
        Format::Csv => match &result.table {
            Some(rows) => write_table(&mut out, rows)?,
            None => {
                let row: Map<String, Value> = result
                    .outputs
                    .iter()
                    .filter(|(_, v)| !v.is_array() && !v.is_object())
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                write_table(&mut out, &[Value::Object(row)])?;
            }
        },
    }
    out.flush().map_err(io)
}

pub fn emit_error(command: &str, failure: &Failure) {
    let e = &failure.error;
    let mut error = json!({
        "kind": e.kind(),
        "message": e.to_string(),
    });
    if let Some(p) = e.partial_estimate() {
        error["partial_estimate"] = json!(p);
    }
    let mut body = json!({ "command": command, "error": error });
    if let Some(d) = &failure.detail {
        body["outputs"] = d.clone();
    }
    // stdout may already be closed, e.g. by a pipe; nothing else to report to
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&body).unwrap_or_default());
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Writes objects as CSV, using the keys of the first row as the header.
pub fn write_table<W: Write>(writer: W, rows: &[Value]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = match rows.first() {
        Some(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    };
    if !header.is_empty() {
        w.write_record(&header)?;
    }
    for r in rows {
        if let Value::Object(m) = r {
            w.write_record(header.iter().map(|k| m.get(k).map(cell).unwrap_or_default()))?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

pub fn write_table_file(path: &Path, rows: &[Value]) -> Result<(), Error> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_table(std::io::BufWriter::new(file), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_uses_first_row_keys() {
        let rows = vec![json!({"a": 1, "b": "x"}), json!({"b": "y", "a": 2.5})];
        let mut buf = Vec::new();
        write_table(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,x\n2.5,y\n");
    }

    #[test]
    fn set_table_mirrors_rows_into_outputs() {
        let mut r = CommandResult::new("t");
        r.set_table(&[json!({"k": 1})]);
        assert_eq!(r.outputs["table"], json!([{"k": 1}]));
        assert_eq!(r.table.as_ref().map(Vec::len), Some(1));
    }
}

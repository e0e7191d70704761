//! Tabular results and their CSV / JSON encodings.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::Format;

/// Version of the JSON document layout.
pub const SCHEMA: u64 = 1;

/// Named columns, rows of JSON scalars, and run-level summary fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Map<String, Value>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// RFC 4180 CSV: header line, then one record per row, CRLF terminated.
pub fn write_csv<W: Write>(table: &Table, w: W) -> io::Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
    wr.write_record(&table.columns)?;
    for row in &table.rows {
        wr.write_record(row.iter().map(cell))?;
    }
    wr.flush()
}

pub fn to_json(command: &str, seed: u64, params: Value, table: &Table) -> Value {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Object(table.columns.iter().cloned().zip(r.iter().cloned()).collect()))
        .collect();
    json!({
        "schema": SCHEMA,
        "command": command,
        "seed": seed,
        "params": params,
        "summary": Value::Object(table.summary.clone()),
        "rows": rows,
    })
}

pub fn emit(format: Format, out: Option<&Path>, command: &str, seed: u64, params: Value, table: &Table) -> io::Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = sink;
    match format {
        Format::Csv => write_csv(table, &mut sink)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &to_json(command, seed, params, table))?;
            sink.write_all(b"\n")?;
        }
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_per_rfc4180() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec![json!("a,b"), json!(1.5)]);
        t.push(vec![json!("say \"hi\""), Value::Null]);
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "name,value\r\n\"a,b\",1.5\r\n\"say \"\"hi\"\"\",\r\n");
    }

    #[test]
    fn json_carries_schema() {
        let mut t = Table::new(&["m"]);
        t.push(vec![json!(3)]);
        let v = to_json("exact", 7, json!({}), &t);
        assert_eq!(v["schema"], 1);
        assert_eq!(v["rows"][0]["m"], 3);
    }
}

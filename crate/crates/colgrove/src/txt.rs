//! Delimited text baseline: one line per record, fields separated by tabs.
//!
//! Rendering: integers and doubles in decimal, strings verbatim, bytes as
//! lowercase hex, arrays as `a,b,c`, maps as `k=v;j=w`. Arrays and maps may
//! only hold primitive elements. Strings containing tab, newline, carriage
//! return, backslash, `;` or `=` are rejected by the writer, as are `,` and
//! empty elements inside arrays.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use colgrove_core::{
    Error as CoreError, FieldType, MeteredSource, Result as CoreResult, ScanMetrics, Schema, Value,
};

use crate::error::Result;
use crate::io::{schema_sidecar, write_file, FileSink, FileSource, ReadOptions};
use crate::scan::{check_row, RecordSink, RowSource, WriteSummary};

const FORBIDDEN: [char; 6] = ['\t', '\n', '\r', '\\', ';', '='];
const READ_CHUNK: usize = 1 << 20;

fn reject(what: &str, s: &str) -> CoreError {
    CoreError::Config(format!("text format cannot hold {what} {s:?}"))
}

fn render_primitive(v: &Value, in_array: bool, out: &mut String) -> CoreResult<()> {
    match v {
        Value::Int64(i) => write!(out, "{i}").expect("string write"),
        Value::Double(d) => write!(out, "{d}").expect("string write"),
        Value::String(s) => {
            if s.contains(FORBIDDEN) || (in_array && (s.is_empty() || s.contains(','))) {
                return Err(reject("string", s));
            }
            out.push_str(s);
        }
        Value::Bytes(b) => {
            if in_array && b.is_empty() {
                return Err(reject("empty bytes element", ""));
            }
            out.push_str(&hex::encode(b));
        }
        Value::Array(_) | Value::Map(_) => {
            return Err(CoreError::Config(
                "text format cannot hold nested arrays or maps".into(),
            ))
        }
    }
    Ok(())
}

/// Appends the text rendering of one field value.
pub fn render_value(v: &Value, out: &mut String) -> CoreResult<()> {
    match v {
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render_primitive(item, true, out)?;
            }
        }
        Value::Map(entries) => {
            for (i, (k, item)) in entries.iter().enumerate() {
                if k.contains(FORBIDDEN) {
                    return Err(reject("map key", k));
                }
                if i > 0 {
                    out.push(';');
                }
                out.push_str(k);
                out.push('=');
                render_primitive(item, false, out)?;
            }
        }
        other => render_primitive(other, false, out)?,
    }
    Ok(())
}

fn parse_primitive(s: &str, ty: &FieldType) -> Result<Value, String> {
    match ty {
        FieldType::Int64 => s.parse().map(Value::Int64).map_err(|_| format!("bad int64 {s:?}")),
        FieldType::Double => s.parse().map(Value::Double).map_err(|_| format!("bad double {s:?}")),
        FieldType::String => Ok(Value::String(s.to_owned())),
        FieldType::Bytes => hex::decode(s)
            .map(Value::Bytes)
            .map_err(|_| format!("bad hex bytes {s:?}")),
        FieldType::Array(_) | FieldType::Map(_) => Err("nested complex type".into()),
    }
}

/// Parses one field's text rendering.
pub fn parse_value(s: &str, ty: &FieldType) -> Result<Value, String> {
    match ty {
        FieldType::Array(elem) => {
            if s.is_empty() {
                return Ok(Value::Array(Vec::new()));
            }
            s.split(',')
                .map(|p| parse_primitive(p, elem))
                .collect::<Result<_, _>>()
                .map(Value::Array)
        }
        FieldType::Map(val) => {
            if s.is_empty() {
                return Ok(Value::Map(Vec::new()));
            }
            s.split(';')
                .map(|entry| {
                    let (k, v) = entry
                        .split_once('=')
                        .ok_or_else(|| format!("map entry {entry:?} lacks `=`"))?;
                    Ok((k.to_owned(), parse_primitive(v, val)?))
                })
                .collect::<Result<_, String>>()
                .map(Value::Map)
        }
        other => parse_primitive(s, other),
    }
}

pub struct TxtWriter {
    schema: Arc<Schema>,
    sink: FileSink,
    line: String,
    count: u64,
}

impl TxtWriter {
    /// Creates `path` and its `.schema` sidecar.
    pub fn create(path: &Path, schema: Arc<Schema>) -> Result<Self> {
        write_file(&schema_sidecar(path), schema.to_text().as_bytes())?;
        Ok(TxtWriter {
            sink: FileSink::create(path)?,
            schema,
            line: String::new(),
            count: 0,
        })
    }
}

impl RecordSink for TxtWriter {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    fn write(&mut self, values: &[Value]) -> Result<()> {
        check_row(&self.schema, values)?;
        self.line.clear();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.line.push('\t');
            }
            render_value(v, &mut self.line)?;
        }
        self.line.push('\n');
        self.sink.write_all(self.line.as_bytes())?;
        self.count += 1;
        Ok(())
    }

    fn finish(self: Box<Self>) -> Result<WriteSummary> {
        let records = self.count;
        let bytes = self.sink.finish()?;
        Ok(WriteSummary {
            records,
            units: 1,
            bytes,
        })
    }
}

/// Parses every field of every line, whatever the projection.
pub struct TxtReader {
    source: MeteredSource<FileSource>,
    schema: Arc<Schema>,
    offset: u64,
    buf: Vec<u8>,
    start: usize,
    line_no: u64,
    values: Vec<u64>,
    emitted: u64,
}

impl TxtReader {
    pub fn open(path: &Path, schema: Arc<Schema>, opts: &ReadOptions) -> Result<Self> {
        let source = opts.open(path)?;
        Ok(TxtReader {
            source,
            values: vec![0; schema.len()],
            schema,
            offset: 0,
            buf: Vec::new(),
            start: 0,
            line_no: 0,
            emitted: 0,
        })
    }

    fn next_line(&mut self) -> CoreResult<Option<(usize, usize)>> {
        use colgrove_core::metered::ByteReader;
        let mut scan_from = self.start;
        loop {
            if let Some(nl) = self.buf[scan_from..].iter().position(|&b| b == b'\n') {
                let end = scan_from + nl;
                let line = (self.start, end);
                self.start = end + 1;
                return Ok(Some(line));
            }
            let len = self.source.len();
            if self.offset >= len {
                if self.start < self.buf.len() {
                    let line = (self.start, self.buf.len());
                    self.start = self.buf.len();
                    return Ok(Some(line));
                }
                return Ok(None);
            }
            if self.start > 0 {
                self.buf.drain(..self.start);
                self.start = 0;
            }
            scan_from = self.buf.len();
            let n = (len - self.offset).min(READ_CHUNK as u64) as usize;
            let chunk = self.source.bytes(self.offset, n)?;
            self.buf.extend_from_slice(chunk);
            self.offset += n as u64;
        }
    }
}

impl RowSource for TxtReader {
    fn row_schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    fn next_row(&mut self) -> CoreResult<Option<Vec<Value>>> {
        let Some((s, e)) = self.next_line()? else {
            return Ok(None);
        };
        self.line_no += 1;
        let line_no = self.line_no;
        let bad = |msg: String| CoreError::Corrupt(format!("line {line_no}: {msg}"));
        let text = std::str::from_utf8(&self.buf[s..e]).map_err(|_| bad("invalid UTF-8".into()))?;
        let parts: Vec<&str> = text.split('\t').collect();
        if parts.len() != self.schema.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                self.schema.len(),
                parts.len()
            )));
        }
        let mut row = Vec::with_capacity(parts.len());
        for (i, (p, f)) in parts.iter().zip(self.schema.fields()).enumerate() {
            row.push(parse_value(p, &f.ty).map_err(|m| bad(format!("field {}: {m}", f.name)))?);
            self.values[i] += 1;
        }
        self.emitted += 1;
        Ok(Some(row))
    }

    fn metrics(&self) -> ScanMetrics {
        let mut m = ScanMetrics::default();
        m.add_io(&self.source.stats());
        for (f, n) in self.schema.fields().iter().zip(&self.values) {
            m.add_values(&f.name, *n);
        }
        m.records_emitted = self.emitted;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(v: &Value) -> CoreResult<String> {
        let mut s = String::new();
        render_value(v, &mut s).map(|_| s)
    }

    #[test]
    fn renders_primitives_and_collections() {
        assert_eq!(render(&Value::Int64(1)).unwrap(), "1");
        assert_eq!(render(&Value::String("x".into())).unwrap(), "x");
        let m = Value::Map(vec![("k".into(), Value::Int64(1)), ("j".into(), Value::Int64(2))]);
        assert_eq!(render(&m).unwrap(), "k=1;j=2");
        let a = Value::Array(vec![Value::Int64(3), Value::Int64(4)]);
        assert_eq!(render(&a).unwrap(), "3,4");
        assert_eq!(render(&Value::Bytes(vec![0xab, 1])).unwrap(), "ab01");
    }

    #[test]
    fn rejects_unsafe_text() {
        assert!(render(&Value::String("a\tb".into())).is_err());
        assert!(render(&Value::String("a=b".into())).is_err());
        assert!(render(&Value::Array(vec![Value::String("a,b".into())])).is_err());
        assert!(render(&Value::Array(vec![Value::Array(vec![])])).is_err());
    }

    #[test]
    fn parse_inverts_render() {
        let ty = FieldType::map(FieldType::Double);
        let v = Value::Map(vec![("a".into(), Value::Double(0.1)), ("b".into(), Value::Double(-2.5e300))]);
        assert_eq!(parse_value(&render(&v).unwrap(), &ty).unwrap(), v);
        assert_eq!(
            parse_value("", &FieldType::array(FieldType::String)).unwrap(),
            Value::Array(vec![])
        );
        assert!(parse_value("x", &FieldType::Int64).is_err());
    }
}

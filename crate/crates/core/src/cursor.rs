//! Record cursors over a split's projected columns.
//!
//! An eager cursor deserializes every projected column on each advance. A
//! lazy cursor only moves a record index; a column is brought up to date
//! (skip, then deserialize) the first time the current record asks for it.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::column::{ColumnReader, ColumnStats};
use crate::error::{Error, Result};
use crate::metered::{ByteSource, IoStats};
use crate::metrics::ScanMetrics;
use crate::schema::{Schema, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Materialization {
    Eager,
    #[default]
    Lazy,
}

pub trait RecordCursor {
    /// Projected schema of the records handed out.
    fn schema(&self) -> &Schema;

    /// Moves to the next record; `false` once the input is exhausted.
    fn advance(&mut self) -> Result<bool>;

    /// Value of a projected field in the current record.
    fn get(&mut self, name: &str) -> Result<&Value>;
}

pub struct SplitCursor<S> {
    schema: Arc<Schema>,
    columns: Vec<ColumnReader<S>>,
    mode: Materialization,
    record_count: u64,
    cur: u64,
    started: bool,
    cache: Vec<Option<Value>>,
}

impl<S: ByteSource> SplitCursor<S> {
    /// `columns[i]` must hold `schema.fields()[i]`.
    pub fn new(
        schema: Arc<Schema>,
        columns: Vec<ColumnReader<S>>,
        mode: Materialization,
    ) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::Config(alloc::format!(
                "{} column readers for {} projected fields",
                columns.len(),
                schema.len()
            )));
        }
        let record_count = match columns.first() {
            Some(c) => c.record_count(),
            None => 0,
        };
        for (c, f) in columns.iter().zip(schema.fields()) {
            if c.record_count() != record_count {
                return Err(Error::Corrupt(alloc::format!(
                    "column {} has {} records, expected {record_count}",
                    f.name,
                    c.record_count()
                )));
            }
        }
        let cache = (0..columns.len()).map(|_| None).collect();
        Ok(SplitCursor {
            schema,
            columns,
            mode,
            record_count,
            cur: 0,
            started: false,
            cache,
        })
    }

    /// Overrides the record count for a cursor with no projected columns.
    pub fn with_record_count(mut self, n: u64) -> Self {
        if self.columns.is_empty() {
            self.record_count = n;
        }
        self
    }

    pub fn mode(&self) -> Materialization {
        self.mode
    }

    pub fn record_count(&self) -> u64 {
        self.record_count
    }

    /// Index of the current record (valid after a successful advance).
    pub fn position(&self) -> u64 {
        self.cur
    }

    /// Records the cursor has stopped on so far.
    pub fn records_emitted(&self) -> u64 {
        if self.started {
            (self.cur + 1).min(self.record_count)
        } else {
            0
        }
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        self.schema.clone()
    }

    pub fn io_stats(&self) -> IoStats {
        let mut io = IoStats::default();
        for c in &self.columns {
            io.merge(&c.io_stats());
        }
        io
    }

    pub fn column_stats(&self) -> Vec<(&str, ColumnStats)> {
        self.schema
            .fields()
            .iter()
            .zip(&self.columns)
            .map(|(f, c)| (f.name.as_str(), c.stats()))
            .collect()
    }

    pub fn columns(&self) -> &[ColumnReader<S>] {
        &self.columns
    }

    pub fn columns_mut(&mut self) -> &mut [ColumnReader<S>] {
        &mut self.columns
    }

    /// Adds this cursor's counters to `m`.
    pub fn record_metrics(&self, m: &mut ScanMetrics) {
        m.add_io(&self.io_stats());
        m.records_emitted += self.records_emitted();
        for (name, s) in self.column_stats() {
            m.add_column(name, &s);
        }
    }

    fn load(&mut self, idx: usize) -> Result<()> {
        let col = &mut self.columns[idx];
        let lag = self.cur - col.position();
        col.skip(lag)?;
        self.cache[idx] = Some(col.next_value()?);
        Ok(())
    }
}

impl<S: ByteSource> RecordCursor for SplitCursor<S> {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn advance(&mut self) -> Result<bool> {
        if !self.started {
            self.started = true;
        } else if self.cur < self.record_count {
            self.cur += 1;
        }
        for slot in &mut self.cache {
            *slot = None;
        }
        if self.cur >= self.record_count {
            return Ok(false);
        }
        if self.mode == Materialization::Eager {
            for i in 0..self.columns.len() {
                self.load(i)?;
            }
        }
        Ok(true)
    }

    fn get(&mut self, name: &str) -> Result<&Value> {
        let idx = self
            .schema
            .index_of(name)
            .ok_or_else(|| Error::NotProjected(name.into()))?;
        if !self.started || self.cur >= self.record_count {
            return Err(Error::Exhausted);
        }
        if self.cache[idx].is_none() {
            self.load(idx)?;
        }
        Ok(self.cache[idx].as_ref().expect("loaded"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::column::{write_column, ColumnLayout};
    use crate::metered::{memory_source, Metering};
    use crate::schema::FieldType;
    use alloc::format;
    use alloc::string::String;
    use alloc::vec;

    fn cursor(mode: Materialization, n: i64) -> SplitCursor<Vec<u8>> {
        let schema = Arc::new(Schema::parse("a:int64\nb:string").unwrap());
        let a: Vec<Value> = (0..n).map(Value::Int64).collect();
        let b: Vec<Value> = (0..n).map(|i| Value::String(format!("s{i}"))).collect();
        let fa = write_column(&FieldType::Int64, ColumnLayout::skip_list(), &a).unwrap();
        let fb = write_column(&FieldType::String, ColumnLayout::skip_list(), &b).unwrap();
        let cols = vec![
            ColumnReader::open(memory_source(fa, Metering::Exact), FieldType::Int64).unwrap(),
            ColumnReader::open(memory_source(fb, Metering::Exact), FieldType::String).unwrap(),
        ];
        SplitCursor::new(schema, cols, mode).unwrap()
    }

    fn counts(c: &SplitCursor<Vec<u8>>) -> Vec<u64> {
        c.column_stats().iter().map(|(_, s)| s.values_deserialized).collect()
    }

    #[test]
    fn lazy_reads_only_requested_values() {
        let mut c = cursor(Materialization::Lazy, 100);
        let mut seen = 0;
        while c.advance().unwrap() {
            let a = c.get("a").unwrap().as_i64().unwrap();
            if a % 10 == 3 {
                let b = c.get("b").unwrap().clone();
                assert_eq!(b, Value::String(format!("s{a}")));
                // Repeated access is served from the record cache.
                c.get("b").unwrap();
                seen += 1;
            }
        }
        assert_eq!(seen, 10);
        assert_eq!(counts(&c), [100, 10]);
    }

    #[test]
    fn eager_reads_everything() {
        let mut c = cursor(Materialization::Eager, 50);
        while c.advance().unwrap() {
            c.get("a").unwrap();
        }
        assert_eq!(counts(&c), [50, 50]);
    }

    #[test]
    fn errors() {
        let mut c = cursor(Materialization::Lazy, 2);
        assert_eq!(c.get("a"), Err(Error::Exhausted));
        assert!(c.advance().unwrap());
        assert_eq!(c.get("zzz"), Err(Error::NotProjected(String::from("zzz"))));
        assert!(c.advance().unwrap());
        assert!(!c.advance().unwrap());
        assert!(!c.advance().unwrap());
        assert_eq!(c.get("a"), Err(Error::Exhausted));
    }
}

//! Cursor and sink abstractions shared by every format.

use std::sync::Arc;

use colgrove_core::{
    ByteSource, Error as CoreError, RecordCursor, Result as CoreResult, ScanMetrics, Schema,
    SplitCursor, Value,
};

use crate::error::Result;

/// A record cursor over one split that can report its counters.
pub trait ScanCursor: RecordCursor + Send {
    fn metrics(&self) -> ScanMetrics;
}

impl<S: ByteSource + Send> ScanCursor for SplitCursor<S> {
    fn metrics(&self) -> ScanMetrics {
        let mut m = ScanMetrics::default();
        self.record_metrics(&mut m);
        m
    }
}

/// Row-at-a-time decoder behind a baseline format.
pub trait RowSource: Send {
    /// Schema of the value vectors returned by `next_row`.
    fn row_schema(&self) -> &Arc<Schema>;
    fn next_row(&mut self) -> CoreResult<Option<Vec<Value>>>;
    fn metrics(&self) -> ScanMetrics;
}

/// Exposes a [`RowSource`] through the get-by-name cursor interface.
pub struct RowCursor<R> {
    source: R,
    schema: Arc<Schema>,
    mapping: Vec<usize>,
    current: Option<Vec<Value>>,
    done: bool,
    emitted: u64,
}

impl<R: RowSource> RowCursor<R> {
    /// `projection` must be a sub-schema of the source's row schema.
    pub fn new(source: R, projection: Arc<Schema>) -> CoreResult<Self> {
        let mapping = projection
            .fields()
            .iter()
            .map(|f| {
                source
                    .row_schema()
                    .index_of(&f.name)
                    .ok_or_else(|| CoreError::UnknownField(f.name.clone()))
            })
            .collect::<CoreResult<Vec<_>>>()?;
        Ok(RowCursor {
            source,
            schema: projection,
            mapping,
            current: None,
            done: false,
            emitted: 0,
        })
    }

    pub fn into_inner(self) -> R {
        self.source
    }
}

impl<R: RowSource> RecordCursor for RowCursor<R> {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn advance(&mut self) -> CoreResult<bool> {
        if self.done {
            return Ok(false);
        }
        self.current = self.source.next_row()?;
        if self.current.is_none() {
            self.done = true;
            return Ok(false);
        }
        self.emitted += 1;
        Ok(true)
    }

    fn get(&mut self, name: &str) -> CoreResult<&Value> {
        let idx = self
            .schema
            .index_of(name)
            .ok_or_else(|| CoreError::NotProjected(name.into()))?;
        let row = self.current.as_ref().ok_or(CoreError::Exhausted)?;
        Ok(&row[self.mapping[idx]])
    }
}

impl<R: RowSource> ScanCursor for RowCursor<R> {
    fn metrics(&self) -> ScanMetrics {
        self.source.metrics()
    }
}

/// Materializes the current record's projected values in schema order.
pub fn current_values(cursor: &mut dyn ScanCursor) -> CoreResult<Vec<Value>> {
    let names: Vec<String> = cursor.schema().fields().iter().map(|f| f.name.clone()).collect();
    names.iter().map(|n| cursor.get(n).cloned()).collect()
}

/// Drains a cursor into value vectors.
pub fn collect_rows(cursor: &mut dyn ScanCursor) -> CoreResult<Vec<Vec<Value>>> {
    let mut out = Vec::new();
    while cursor.advance()? {
        out.push(current_values(cursor)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteSummary {
    pub records: u64,
    /// Row groups, blocks or split directories, depending on the format.
    pub units: u64,
    pub bytes: u64,
}

/// Streaming writer for one dataset.
pub trait RecordSink {
    fn schema(&self) -> &Arc<Schema>;
    /// Appends one record given as values in schema order.
    fn write(&mut self, values: &[Value]) -> Result<()>;
    fn finish(self: Box<Self>) -> Result<WriteSummary>;
}

/// Checks a row of values against a schema.
pub fn check_row(schema: &Schema, values: &[Value]) -> CoreResult<()> {
    if values.len() != schema.len() {
        let missing = schema
            .fields()
            .get(values.len())
            .map(|f| f.name.clone())
            .unwrap_or_else(|| format!("<{} extra values>", values.len() - schema.len()));
        return Err(CoreError::MissingField(missing));
    }
    for (f, v) in schema.fields().iter().zip(values) {
        v.check(&f.ty, &f.name)?;
    }
    Ok(())
}

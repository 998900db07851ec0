//! Core of the colgrove columnar store.
//!
//! Everything here is `no_std` + `alloc`: the typed record model, the plain
//! value encoding, the column layouts (plain, skip list, compressed blocks and
//! dictionary compressed skip lists), the lazy split cursor, and the block
//! placement / scheduling logic of the cluster simulator. Byte access goes
//! through the [`metered::ByteSource`] trait so that the `colgrove` crate can
//! back it with real files while tests use in-memory buffers.

#![no_std]
#![warn(clippy::all)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod codec;
pub mod column;
pub mod cursor;
pub mod encoding;
pub mod error;
pub mod metered;
pub mod metrics;
pub mod placement;
pub mod schema;
pub mod skiplist;

mod blocks;
mod dcsl;

pub use codec::CodecId;
pub use column::{ColumnFileHeader, ColumnLayout, ColumnReader, ColumnStats, ColumnWriter, Layout};
pub use cursor::{Materialization, RecordCursor, SplitCursor};
pub use error::{Error, Result};
pub use metered::{ByteSource, IoStats, Locality, MeteredSource, Metering};
pub use metrics::ScanMetrics;
pub use schema::{Field, FieldType, Kind, OwnedRecord, Record, Schema, Value};
pub use skiplist::SkipLadder;

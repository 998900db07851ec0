//! Row-oriented binary baseline.
//!
//! `SEQ0` files hold back-to-back records, each `[u32 length][fields]` with
//! fields plain-encoded in schema order. `SEQB` files hold compressed blocks
//! `[u32 record_count][u32 compressed_size][u8 codec][payload]` whose payload
//! decompresses to the same `[u32 length][fields]` record framing.

use std::path::Path;
use std::sync::Arc;

use colgrove_core::codec;
use colgrove_core::encoding::{decode_value, encode_value};
use colgrove_core::metered::{read_u32, ByteReader, SliceReader};
use colgrove_core::{
    CodecId, Error as CoreError, MeteredSource, Result as CoreResult, ScanMetrics, Schema, Value,
};

use crate::error::Result;
use crate::io::{schema_sidecar, write_file, FileSink, FileSource, ReadOptions};
use crate::scan::{check_row, RecordSink, RowSource, WriteSummary};

pub const MAGIC_UNCOMPRESSED: &[u8; 4] = b"SEQ0";
pub const MAGIC_BLOCK: &[u8; 4] = b"SEQB";
pub const MIN_BLOCK_TARGET: u64 = 4 * 1024;
pub const DEFAULT_BLOCK_TARGET: u64 = 1 << 20;
const BLOCK_HEADER_LEN: u64 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqVariant {
    Uncompressed,
    Block { codec: CodecId, target_bytes: u64 },
}

impl SeqVariant {
    pub fn block() -> Self {
        SeqVariant::Block {
            codec: CodecId::HighRatio,
            target_bytes: DEFAULT_BLOCK_TARGET,
        }
    }
}

pub struct SeqWriter {
    schema: Arc<Schema>,
    sink: FileSink,
    variant: SeqVariant,
    record: Vec<u8>,
    block: Vec<u8>,
    in_block: u32,
    blocks: u64,
    count: u64,
}

impl SeqWriter {
    pub fn create(path: &Path, schema: Arc<Schema>, variant: SeqVariant) -> Result<Self> {
        if let SeqVariant::Block { codec, target_bytes } = variant {
            if target_bytes < MIN_BLOCK_TARGET {
                return Err(CoreError::Config(format!(
                    "SEQ block target must be at least {MIN_BLOCK_TARGET} bytes"
                ))
                .into());
            }
            if codec == CodecId::Raw {
                return Err(CoreError::Config("SEQ blocks need a real codec".into()).into());
            }
        }
        write_file(&schema_sidecar(path), schema.to_text().as_bytes())?;
        let mut sink = FileSink::create(path)?;
        sink.write_all(match variant {
            SeqVariant::Uncompressed => MAGIC_UNCOMPRESSED,
            SeqVariant::Block { .. } => MAGIC_BLOCK,
        })?;
        Ok(SeqWriter {
            schema,
            sink,
            variant,
            record: Vec::new(),
            block: Vec::new(),
            in_block: 0,
            blocks: 0,
            count: 0,
        })
    }

    fn flush_block(&mut self) -> Result<()> {
        let SeqVariant::Block { codec, .. } = self.variant else {
            return Ok(());
        };
        if self.in_block == 0 {
            return Ok(());
        }
        let payload = codec::compress(codec, &self.block);
        let size = u32::try_from(payload.len())
            .map_err(|_| CoreError::Config("SEQ block exceeds 4 GiB".into()))?;
        let mut header = [0u8; BLOCK_HEADER_LEN as usize];
        header[..4].copy_from_slice(&self.in_block.to_le_bytes());
        header[4..8].copy_from_slice(&size.to_le_bytes());
        header[8] = codec.as_u8();
        self.sink.write_all(&header)?;
        self.sink.write_all(&payload)?;
        self.block.clear();
        self.in_block = 0;
        self.blocks += 1;
        Ok(())
    }
}

impl RecordSink for SeqWriter {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    fn write(&mut self, values: &[Value]) -> Result<()> {
        check_row(&self.schema, values)?;
        self.record.clear();
        self.record.extend_from_slice(&[0; 4]);
        for (v, f) in values.iter().zip(self.schema.fields()) {
            encode_value(v, &f.ty, &mut self.record)?;
        }
        let len = u32::try_from(self.record.len() - 4)
            .map_err(|_| CoreError::Config("record exceeds 4 GiB".into()))?;
        self.record[..4].copy_from_slice(&len.to_le_bytes());
        self.count += 1;
        match self.variant {
            SeqVariant::Uncompressed => self.sink.write_all(&self.record)?,
            SeqVariant::Block { target_bytes, .. } => {
                self.block.extend_from_slice(&self.record);
                self.in_block += 1;
                if self.block.len() as u64 >= target_bytes {
                    self.flush_block()?;
                }
            }
        }
        Ok(())
    }

    fn finish(mut self: Box<Self>) -> Result<WriteSummary> {
        self.flush_block()?;
        let records = self.count;
        let units = self.blocks;
        let bytes = self.sink.finish()?;
        Ok(WriteSummary {
            records,
            units,
            bytes,
        })
    }
}

/// Decodes every field of every record, whatever the projection.
pub struct SeqReader {
    source: MeteredSource<FileSource>,
    schema: Arc<Schema>,
    block_mode: bool,
    offset: u64,
    block: Vec<u8>,
    block_pos: u64,
    block_left: u32,
    values: u64,
    emitted: u64,
    blocks_decompressed: u64,
    bytes_decompressed: u64,
}

impl SeqReader {
    pub fn open(path: &Path, schema: Arc<Schema>, opts: &ReadOptions) -> Result<Self> {
        let mut source = opts.open(path)?;
        let magic = source.bytes(0, 4).map_err(|_| {
            CoreError::Corrupt(format!("{}: missing SEQ header", path.display()))
        })?;
        let block_mode = match magic {
            m if m == MAGIC_UNCOMPRESSED => false,
            m if m == MAGIC_BLOCK => true,
            _ => return Err(CoreError::Corrupt(format!("{}: bad SEQ magic", path.display())).into()),
        };
        Ok(SeqReader {
            source,
            schema,
            block_mode,
            offset: 4,
            block: Vec::new(),
            block_pos: 0,
            block_left: 0,
            values: 0,
            emitted: 0,
            blocks_decompressed: 0,
            bytes_decompressed: 0,
        })
    }

    fn decode_record<R: ByteReader + ?Sized>(
        r: &mut R,
        offset: u64,
        schema: &Schema,
    ) -> CoreResult<(Vec<Value>, u64)> {
        let len = read_u32(r, offset)? as u64;
        let mut pos = offset + 4;
        let mut row = Vec::with_capacity(schema.len());
        for f in schema.fields() {
            let (v, n) = decode_value(r, pos, &f.ty)?;
            row.push(v);
            pos += n;
        }
        if pos - offset - 4 != len {
            return Err(CoreError::Corrupt(format!(
                "record at byte {offset} declares {len} bytes but fields span {}",
                pos - offset - 4
            )));
        }
        Ok((row, pos - offset))
    }
}

impl RowSource for SeqReader {
    fn row_schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    fn next_row(&mut self) -> CoreResult<Option<Vec<Value>>> {
        let row = if self.block_mode {
            while self.block_left == 0 {
                if self.offset >= self.source.len() {
                    return Ok(None);
                }
                let count = read_u32(&mut self.source, self.offset)?;
                let size = read_u32(&mut self.source, self.offset + 4)? as usize;
                let codec = CodecId::from_u8(self.source.bytes(self.offset + 8, 1)?[0])?;
                let payload = self.source.bytes(self.offset + BLOCK_HEADER_LEN, size)?;
                self.block = codec::decompress(codec, payload, None)?;
                self.blocks_decompressed += 1;
                self.bytes_decompressed += self.block.len() as u64;
                self.offset += BLOCK_HEADER_LEN + size as u64;
                self.block_pos = 0;
                self.block_left = count;
            }
            let (row, n) =
                Self::decode_record(&mut SliceReader(&self.block), self.block_pos, &self.schema)?;
            self.block_pos += n;
            self.block_left -= 1;
            if self.block_left == 0 && self.block_pos != self.block.len() as u64 {
                return Err(CoreError::Corrupt("SEQ block has trailing bytes".into()));
            }
            row
        } else {
            if self.offset >= self.source.len() {
                return Ok(None);
            }
            let len = read_u32(&mut self.source, self.offset)? as usize;
            let bytes = self.source.bytes(self.offset, 4 + len)?;
            let (row, n) = Self::decode_record(&mut SliceReader(bytes), 0, &self.schema)?;
            self.offset += n;
            row
        };
        self.values += 1;
        self.emitted += 1;
        Ok(Some(row))
    }

    fn metrics(&self) -> ScanMetrics {
        let mut m = ScanMetrics::default();
        m.add_io(&self.source.stats());
        for f in self.schema.fields() {
            m.add_values(&f.name, self.values);
        }
        m.blocks_decompressed = self.blocks_decompressed;
        m.bytes_decompressed = self.bytes_decompressed;
        m.records_emitted = self.emitted;
        m
    }
}

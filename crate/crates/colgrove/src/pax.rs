//! Row-group (PAX) baseline.
//!
//! File: `"PAX0"`, a codec byte, then row groups. Each row group is
//!
//! ```text
//! sync[16] | row_count u32 | column_count u32 | column_lengths u64 × c
//!          | uncompressed_lengths u64 × c   (codec != raw only)
//!          | column segments in schema order
//! ```
//!
//! A segment holds `row_count` plain-encoded values of one column, compressed
//! as a unit when the file codec is not raw. Readers fetch the metadata
//! region of every group and only the segments of projected columns.

use std::path::Path;
use std::sync::Arc;

use colgrove_core::codec;
use colgrove_core::encoding::{decode_value, encode_value};
use colgrove_core::metered::{ByteReader, SliceReader};
use colgrove_core::{
    CodecId, Error as CoreError, MeteredSource, Result as CoreResult, ScanMetrics, Schema, Value,
};

use crate::error::Result;
use crate::io::{schema_sidecar, write_file, FileSink, FileSource, ReadOptions};
use crate::scan::{check_row, RecordSink, RowSource, WriteSummary};

pub const MAGIC: &[u8; 4] = b"PAX0";
pub const SYNC: &[u8; 16] = b"COLGROVE-PAXSYNC";
pub const MIN_ROWGROUP_TARGET: u64 = 64 * 1024;
pub const DEFAULT_ROWGROUP_TARGET: u64 = 4 << 20;
const FILE_HEADER_LEN: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaxConfig {
    pub rowgroup_target_bytes: u64,
    pub codec: CodecId,
}

impl Default for PaxConfig {
    fn default() -> Self {
        PaxConfig {
            rowgroup_target_bytes: DEFAULT_ROWGROUP_TARGET,
            codec: CodecId::Raw,
        }
    }
}

impl PaxConfig {
    pub fn validate(&self) -> CoreResult<()> {
        if self.rowgroup_target_bytes < MIN_ROWGROUP_TARGET {
            return Err(CoreError::Config(format!(
                "row-group target must be at least {MIN_ROWGROUP_TARGET} bytes"
            )));
        }
        Ok(())
    }
}

fn metadata_len(columns: usize, codec: CodecId) -> u64 {
    let per = if codec == CodecId::Raw { 8 } else { 16 };
    24 + per * columns as u64
}

pub struct PaxWriter {
    schema: Arc<Schema>,
    sink: FileSink,
    config: PaxConfig,
    segments: Vec<Vec<u8>>,
    rows: u32,
    buffered: u64,
    groups: u64,
    count: u64,
}

impl PaxWriter {
    pub fn create(path: &Path, schema: Arc<Schema>, config: PaxConfig) -> Result<Self> {
        config.validate()?;
        write_file(&schema_sidecar(path), schema.to_text().as_bytes())?;
        let mut sink = FileSink::create(path)?;
        sink.write_all(MAGIC)?;
        sink.write_all(&[config.codec.as_u8()])?;
        Ok(PaxWriter {
            segments: vec![Vec::new(); schema.len()],
            schema,
            sink,
            config,
            rows: 0,
            buffered: 0,
            groups: 0,
            count: 0,
        })
    }

    fn flush_group(&mut self) -> Result<()> {
        if self.rows == 0 {
            return Ok(());
        }
        let c = self.segments.len();
        let codec = self.config.codec;
        let payloads: Vec<Vec<u8>> = if codec == CodecId::Raw {
            std::mem::take(&mut self.segments)
        } else {
            self.segments.iter().map(|s| codec::compress(codec, s)).collect()
        };
        let mut meta = Vec::with_capacity(metadata_len(c, codec) as usize);
        meta.extend_from_slice(SYNC);
        meta.extend_from_slice(&self.rows.to_le_bytes());
        meta.extend_from_slice(&(c as u32).to_le_bytes());
        for p in &payloads {
            meta.extend_from_slice(&(p.len() as u64).to_le_bytes());
        }
        if codec != CodecId::Raw {
            for s in &self.segments {
                meta.extend_from_slice(&(s.len() as u64).to_le_bytes());
            }
        }
        self.sink.write_all(&meta)?;
        for p in &payloads {
            self.sink.write_all(p)?;
        }
        self.segments = vec![Vec::new(); c];
        self.rows = 0;
        self.buffered = 0;
        self.groups += 1;
        Ok(())
    }
}

impl RecordSink for PaxWriter {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    fn write(&mut self, values: &[Value]) -> Result<()> {
        check_row(&self.schema, values)?;
        for ((v, f), seg) in values.iter().zip(self.schema.fields()).zip(&mut self.segments) {
            let before = seg.len();
            encode_value(v, &f.ty, seg)?;
            self.buffered += (seg.len() - before) as u64;
        }
        self.rows += 1;
        self.count += 1;
        if self.buffered >= self.config.rowgroup_target_bytes {
            self.flush_group()?;
        }
        Ok(())
    }

    fn finish(mut self: Box<Self>) -> Result<WriteSummary> {
        self.flush_group()?;
        let records = self.count;
        let units = self.groups;
        let bytes = self.sink.finish()?;
        Ok(WriteSummary {
            records,
            units,
            bytes,
        })
    }
}

/// Metadata of one row group as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowGroupInfo {
    pub offset: u64,
    pub row_count: u32,
    pub column_lengths: Vec<u64>,
    pub uncompressed_lengths: Option<Vec<u64>>,
}

impl RowGroupInfo {
    pub fn data_offset(&self) -> u64 {
        let per = if self.uncompressed_lengths.is_some() { 16 } else { 8 };
        self.offset + 24 + per * self.column_lengths.len() as u64
    }

    pub fn end(&self) -> u64 {
        self.data_offset() + self.column_lengths.iter().sum::<u64>()
    }
}

fn read_group_info<R: ByteReader + ?Sized>(
    r: &mut R,
    offset: u64,
    columns: usize,
    codec: CodecId,
) -> CoreResult<RowGroupInfo> {
    let meta = r.bytes(offset, metadata_len(columns, codec) as usize)?;
    if &meta[..16] != SYNC {
        return Err(CoreError::Corrupt(format!("sync marker mismatch at byte {offset}")));
    }
    let u32_at = |i: usize| u32::from_le_bytes(meta[i..i + 4].try_into().expect("4 bytes"));
    let u64_at = |i: usize| u64::from_le_bytes(meta[i..i + 8].try_into().expect("8 bytes"));
    let row_count = u32_at(16);
    let column_count = u32_at(20) as usize;
    if column_count != columns {
        return Err(CoreError::Corrupt(format!(
            "row group at byte {offset} has {column_count} columns, schema has {columns}"
        )));
    }
    let column_lengths = (0..columns).map(|i| u64_at(24 + 8 * i)).collect();
    let uncompressed_lengths = (codec != CodecId::Raw)
        .then(|| (0..columns).map(|i| u64_at(24 + 8 * columns + 8 * i)).collect());
    Ok(RowGroupInfo {
        offset,
        row_count,
        column_lengths,
        uncompressed_lengths,
    })
}

/// Lists a PAX file's row groups (reads only metadata regions).
pub fn row_groups(path: &Path, columns: usize) -> Result<Vec<RowGroupInfo>> {
    let mut src = ReadOptions::exact().open(path)?;
    let codec = read_codec(&mut src)?;
    let mut out = Vec::new();
    let mut off = FILE_HEADER_LEN;
    while off < src.len() {
        let info = read_group_info(&mut src, off, columns, codec)?;
        off = info.end();
        out.push(info);
    }
    Ok(out)
}

fn read_codec(src: &mut MeteredSource<FileSource>) -> CoreResult<CodecId> {
    let h = src
        .bytes(0, FILE_HEADER_LEN as usize)
        .map_err(|_| CoreError::Corrupt("missing PAX header".into()))?;
    if &h[..4] != MAGIC {
        return Err(CoreError::Corrupt("bad PAX magic".into()));
    }
    CodecId::from_u8(h[4])
}

/// Reads projected column segments group by group.
pub struct PaxReader {
    source: MeteredSource<FileSource>,
    codec: CodecId,
    file_schema: Arc<Schema>,
    projected: Arc<Schema>,
    /// (file column index, projected index) in file order.
    wanted: Vec<(usize, usize)>,
    offset: u64,
    columns: Vec<std::vec::IntoIter<Value>>,
    left: u32,
    values: Vec<u64>,
    emitted: u64,
    blocks_decompressed: u64,
    bytes_decompressed: u64,
}

impl PaxReader {
    pub fn open(
        path: &Path,
        file_schema: Arc<Schema>,
        projected: Arc<Schema>,
        opts: &ReadOptions,
    ) -> Result<Self> {
        let mut source = opts.open(path)?;
        let codec = read_codec(&mut source).map_err(|e| crate::error::Error::At {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut wanted = projected
            .fields()
            .iter()
            .enumerate()
            .map(|(pi, f)| {
                file_schema
                    .index_of(&f.name)
                    .map(|fi| (fi, pi))
                    .ok_or_else(|| CoreError::UnknownField(f.name.clone()))
            })
            .collect::<CoreResult<Vec<_>>>()?;
        wanted.sort_unstable();
        Ok(PaxReader {
            source,
            codec,
            values: vec![0; projected.len()],
            columns: Vec::new(),
            file_schema,
            projected,
            wanted,
            offset: FILE_HEADER_LEN,
            left: 0,
            emitted: 0,
            blocks_decompressed: 0,
            bytes_decompressed: 0,
        })
    }

    fn load_group(&mut self) -> CoreResult<bool> {
        if self.offset >= self.source.len() {
            return Ok(false);
        }
        let info = read_group_info(&mut self.source, self.offset, self.file_schema.len(), self.codec)?;
        let mut starts = Vec::with_capacity(info.column_lengths.len());
        let mut at = info.data_offset();
        for l in &info.column_lengths {
            starts.push(at);
            at += l;
        }
        let mut cols: Vec<Vec<Value>> = vec![Vec::new(); self.projected.len()];
        for &(fi, pi) in &self.wanted {
            let raw = self.source.bytes(starts[fi], info.column_lengths[fi] as usize)?;
            let data;
            let bytes: &[u8] = match &info.uncompressed_lengths {
                Some(ul) => {
                    data = codec::decompress(self.codec, raw, Some(ul[fi] as usize))?;
                    self.blocks_decompressed += 1;
                    self.bytes_decompressed += data.len() as u64;
                    &data
                }
                None => raw,
            };
            let ty = &self.file_schema.fields()[fi].ty;
            let mut r = SliceReader(bytes);
            let mut pos = 0u64;
            let mut col = Vec::with_capacity(info.row_count as usize);
            for _ in 0..info.row_count {
                let (v, n) = decode_value(&mut r, pos, ty)?;
                col.push(v);
                pos += n;
            }
            if pos != bytes.len() as u64 {
                return Err(CoreError::Corrupt(format!(
                    "row group at byte {}: column {} segment has trailing bytes",
                    info.offset,
                    self.file_schema.fields()[fi].name
                )));
            }
            self.values[pi] += info.row_count as u64;
            cols[pi] = col;
        }
        self.columns = cols.into_iter().map(Vec::into_iter).collect();
        self.left = info.row_count;
        self.offset = info.end();
        Ok(true)
    }
}

impl RowSource for PaxReader {
    fn row_schema(&self) -> &Arc<Schema> {
        &self.projected
    }

    fn next_row(&mut self) -> CoreResult<Option<Vec<Value>>> {
        while self.left == 0 {
            if !self.load_group()? {
                return Ok(None);
            }
        }
        self.left -= 1;
        self.emitted += 1;
        let row = self
            .columns
            .iter_mut()
            .map(|c| c.next().expect("row_count values per segment"))
            .collect();
        Ok(Some(row))
    }

    fn metrics(&self) -> ScanMetrics {
        let mut m = ScanMetrics::default();
        m.add_io(&self.source.stats());
        for (f, n) in self.projected.fields().iter().zip(&self.values) {
            m.add_values(&f.name, *n);
        }
        m.blocks_decompressed = self.blocks_decompressed;
        m.bytes_decompressed = self.bytes_decompressed;
        m.records_emitted = self.emitted;
        m
    }
}

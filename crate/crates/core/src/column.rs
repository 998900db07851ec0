//! Column files: a 14-byte header followed by a layout-specific body.
//!
//! ```text
//! "CIF1" | layout u8 | codec u8 | record_count u64
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::blocks::{BlocksState, CompressedBlocksWriter, MIN_BLOCK_TARGET};
use crate::codec::CodecId;
use crate::dcsl::{DcslState, DcslWriter, DEFAULT_BLOCK_RECORDS};
use crate::encoding::{encode_value, skip_value};
use crate::error::{Error, Result};
use crate::metered::{ByteReader, ByteSource, IoStats, MeteredSource};
use crate::schema::{FieldType, Value};
use crate::skiplist::{SkipLadder, SkipListWriter, SkipNav, SkipStats};

pub const COLUMN_MAGIC: &[u8; 4] = b"CIF1";
pub const HEADER_LEN: u64 = 14;
pub const DEFAULT_BLOCK_TARGET: u32 = 256 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Layout {
    Plain = 0,
    SkipList = 1,
    CompressedBlocks = 2,
    Dcsl = 3,
}

impl Layout {
    pub fn from_u8(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Layout::Plain),
            1 => Ok(Layout::SkipList),
            2 => Ok(Layout::CompressedBlocks),
            3 => Ok(Layout::Dcsl),
            other => Err(Error::Corrupt(format!("unknown column layout {other}"))),
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Plain => "plain",
            Layout::SkipList => "skiplist",
            Layout::CompressedBlocks => "blocks",
            Layout::Dcsl => "dcsl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnFileHeader {
    pub layout: Layout,
    pub codec: CodecId,
    pub record_count: u64,
}

impl ColumnFileHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN as usize] {
        let mut h = [0u8; HEADER_LEN as usize];
        h[..4].copy_from_slice(COLUMN_MAGIC);
        h[4] = self.layout as u8;
        h[5] = self.codec.as_u8();
        h[6..].copy_from_slice(&self.record_count.to_le_bytes());
        h
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN as usize {
            return Err(Error::Truncated {
                offset: 0,
                needed: HEADER_LEN,
                available: bytes.len() as u64,
            });
        }
        if &bytes[..4] != COLUMN_MAGIC {
            return Err(Error::Corrupt("bad column file magic".into()));
        }
        let layout = Layout::from_u8(bytes[4])?;
        let codec = CodecId::from_u8(bytes[5])?;
        match (layout, codec) {
            (Layout::CompressedBlocks, CodecId::Raw) => {
                return Err(Error::Corrupt("compressed blocks with raw codec".into()))
            }
            (Layout::CompressedBlocks, _) | (_, CodecId::Raw) => {}
            _ => return Err(Error::Corrupt(format!("codec {codec} on {layout} column"))),
        }
        let mut n = [0u8; 8];
        n.copy_from_slice(&bytes[6..14]);
        Ok(ColumnFileHeader {
            layout,
            codec,
            record_count: u64::from_le_bytes(n),
        })
    }
}

/// How a column is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnLayout {
    Plain,
    SkipList(SkipLadder),
    CompressedBlocks { codec: CodecId, block_target_bytes: u32 },
    Dcsl { block_records: u32 },
}

impl Default for ColumnLayout {
    fn default() -> Self {
        ColumnLayout::Plain
    }
}

impl ColumnLayout {
    pub fn skip_list() -> Self {
        ColumnLayout::SkipList(SkipLadder::default())
    }

    pub fn blocks(codec: CodecId) -> Self {
        ColumnLayout::CompressedBlocks {
            codec,
            block_target_bytes: DEFAULT_BLOCK_TARGET,
        }
    }

    pub fn dcsl() -> Self {
        ColumnLayout::Dcsl {
            block_records: DEFAULT_BLOCK_RECORDS,
        }
    }

    pub fn layout(&self) -> Layout {
        match self {
            ColumnLayout::Plain => Layout::Plain,
            ColumnLayout::SkipList(_) => Layout::SkipList,
            ColumnLayout::CompressedBlocks { .. } => Layout::CompressedBlocks,
            ColumnLayout::Dcsl { .. } => Layout::Dcsl,
        }
    }

    pub fn codec(&self) -> CodecId {
        match self {
            ColumnLayout::CompressedBlocks { codec, .. } => *codec,
            _ => CodecId::Raw,
        }
    }

    /// Whether this layout can hold a column of type `ty`.
    pub fn supports(&self, ty: &FieldType) -> bool {
        !matches!(self, ColumnLayout::Dcsl { .. }) || matches!(ty, FieldType::Map(_))
    }
}

impl fmt::Display for ColumnLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLayout::Plain => f.write_str("plain"),
            ColumnLayout::SkipList(l) if *l == SkipLadder::default() => f.write_str("skiplist"),
            ColumnLayout::SkipList(l) => write!(f, "skiplist:{}:{}", l.base(), l.height()),
            ColumnLayout::CompressedBlocks {
                codec,
                block_target_bytes,
            } if *block_target_bytes == DEFAULT_BLOCK_TARGET => write!(f, "blocks:{codec}"),
            ColumnLayout::CompressedBlocks {
                codec,
                block_target_bytes,
            } => write!(f, "blocks:{codec}:{block_target_bytes}"),
            ColumnLayout::Dcsl { block_records } if *block_records == DEFAULT_BLOCK_RECORDS => {
                f.write_str("dcsl")
            }
            ColumnLayout::Dcsl { block_records } => write!(f, "dcsl:{block_records}"),
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("invalid {what} `{s}`")))
}

/// Accepts `plain`, `skiplist[:base:height]`, `blocks[:codec[:target_bytes]]`
/// (also `fast`/`high` as shorthand) and `dcsl[:block_records]`.
impl FromStr for ColumnLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let parts: Vec<&str> = lower.split(':').collect();
        match parts.as_slice() {
            ["plain"] => Ok(ColumnLayout::Plain),
            ["skiplist" | "sl"] => Ok(ColumnLayout::skip_list()),
            ["skiplist" | "sl", base, height] => Ok(ColumnLayout::SkipList(SkipLadder::new(
                parse_num(base, "skip base")?,
                parse_num(height, "skip height")?,
            )?)),
            ["blocks" | "cb"] => Ok(ColumnLayout::blocks(CodecId::FastLz)),
            ["fast" | "lzo" | "lz4"] => Ok(ColumnLayout::blocks(CodecId::FastLz)),
            ["high" | "zlib"] => Ok(ColumnLayout::blocks(CodecId::HighRatio)),
            ["blocks" | "cb", codec] => Ok(ColumnLayout::blocks(codec.parse()?)),
            ["blocks" | "cb", codec, target] => {
                let block_target_bytes: u32 = parse_num(target, "block target")?;
                if block_target_bytes < MIN_BLOCK_TARGET {
                    return Err(Error::Config(format!(
                        "block target must be at least {MIN_BLOCK_TARGET} bytes"
                    )));
                }
                Ok(ColumnLayout::CompressedBlocks {
                    codec: codec.parse()?,
                    block_target_bytes,
                })
            }
            ["dcsl"] => Ok(ColumnLayout::dcsl()),
            ["dcsl", n] => Ok(ColumnLayout::Dcsl {
                block_records: parse_num(n, "dcsl block size")?,
            }),
            _ => Err(Error::Config(format!("unknown column layout `{s}`"))),
        }
    }
}

#[derive(Debug)]
enum WriterBody {
    Plain(Vec<u8>),
    SkipList(SkipListWriter),
    Blocks(CompressedBlocksWriter),
    Dcsl(DcslWriter),
}

/// Builds one column file in memory.
#[derive(Debug)]
pub struct ColumnWriter {
    ty: FieldType,
    layout: ColumnLayout,
    body: WriterBody,
    count: u64,
    plain_bytes: u64,
    scratch: Vec<u8>,
}

impl ColumnWriter {
    pub fn new(ty: FieldType, layout: ColumnLayout) -> Result<Self> {
        let body = match layout {
            ColumnLayout::Plain => WriterBody::Plain(Vec::new()),
            ColumnLayout::SkipList(l) => WriterBody::SkipList(SkipListWriter::new(l)),
            ColumnLayout::CompressedBlocks {
                codec,
                block_target_bytes,
            } => WriterBody::Blocks(CompressedBlocksWriter::new(
                ty.clone(),
                codec,
                block_target_bytes,
            )?),
            ColumnLayout::Dcsl { block_records } => {
                WriterBody::Dcsl(DcslWriter::new(&ty, block_records, SkipLadder::default())?)
            }
        };
        Ok(ColumnWriter {
            ty,
            layout,
            body,
            count: 0,
            plain_bytes: 0,
            scratch: Vec::new(),
        })
    }

    pub fn layout(&self) -> ColumnLayout {
        self.layout
    }

    pub fn ty(&self) -> &FieldType {
        &self.ty
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Bytes the pushed values occupy in plain encoding.
    pub fn plain_bytes(&self) -> u64 {
        self.plain_bytes
    }

    pub fn push(&mut self, value: &Value) -> Result<()> {
        let ty = &self.ty;
        let len = match &mut self.body {
            WriterBody::Plain(out) => {
                let before = out.len();
                if let Err(e) = encode_value(value, ty, out) {
                    out.truncate(before);
                    return Err(e);
                }
                out.len() - before
            }
            WriterBody::SkipList(w) => {
                let mut len = 0;
                w.push_with(|buf| {
                    let before = buf.len();
                    encode_value(value, ty, buf)?;
                    len = buf.len() - before;
                    Ok(())
                })?;
                len
            }
            body => {
                self.scratch.clear();
                encode_value(value, ty, &mut self.scratch)?;
                match body {
                    WriterBody::Blocks(w) => w.push(value)?,
                    WriterBody::Dcsl(w) => w.push(value)?,
                    _ => unreachable!(),
                }
                self.scratch.len()
            }
        };
        self.plain_bytes += len as u64;
        self.count += 1;
        Ok(())
    }

    /// Returns the complete file: header plus body.
    pub fn finish(self) -> Result<Vec<u8>> {
        let header = ColumnFileHeader {
            layout: self.layout.layout(),
            codec: self.layout.codec(),
            record_count: self.count,
        };
        let body = match self.body {
            WriterBody::Plain(out) => out,
            WriterBody::SkipList(w) => w.finish().0,
            WriterBody::Blocks(w) => w.finish()?.0,
            WriterBody::Dcsl(w) => w.finish().0,
        };
        let mut file = Vec::with_capacity(HEADER_LEN as usize + body.len());
        file.extend_from_slice(&header.encode());
        file.extend_from_slice(&body);
        Ok(file)
    }
}

/// Encodes a whole column in one call.
pub fn write_column<'a, I>(ty: &FieldType, layout: ColumnLayout, values: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = &'a Value>,
{
    let mut w = ColumnWriter::new(ty.clone(), layout)?;
    for v in values {
        w.push(v)?;
    }
    w.finish()
}

/// Per-column read counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColumnStats {
    pub values_deserialized: u64,
    pub blocks_decompressed: u64,
    pub bytes_decompressed: u64,
    pub skip: SkipStats,
}

impl ColumnStats {
    pub fn merge(&mut self, other: &ColumnStats) {
        self.values_deserialized += other.values_deserialized;
        self.blocks_decompressed += other.blocks_decompressed;
        self.bytes_decompressed += other.bytes_decompressed;
        self.skip.merge(&other.skip);
    }
}

#[derive(Debug)]
enum ReadState {
    Plain { offset: u64 },
    SkipList(SkipNav),
    Blocks(BlocksState),
    Dcsl(DcslState),
}

/// Forward-only reader over one column file.
pub struct ColumnReader<S> {
    source: MeteredSource<S>,
    ty: FieldType,
    header: ColumnFileHeader,
    pos: u64,
    state: ReadState,
    stats: ColumnStats,
}

impl<S: ByteSource> ColumnReader<S> {
    pub fn open(source: MeteredSource<S>, ty: FieldType) -> Result<Self> {
        Self::open_with_ladder(source, ty, SkipLadder::default())
    }

    pub fn open_with_ladder(
        mut source: MeteredSource<S>,
        ty: FieldType,
        ladder: SkipLadder,
    ) -> Result<Self> {
        if source.len() < HEADER_LEN {
            return Err(Error::Corrupt(format!(
                "column file of {} bytes is shorter than its header",
                source.len()
            )));
        }
        let header = ColumnFileHeader::decode(source.bytes(0, HEADER_LEN as usize)?)?;
        let state = match header.layout {
            Layout::Plain => ReadState::Plain { offset: HEADER_LEN },
            Layout::SkipList => ReadState::SkipList(SkipNav::new(ladder, HEADER_LEN)),
            Layout::CompressedBlocks => ReadState::Blocks(BlocksState::new(HEADER_LEN)),
            Layout::Dcsl => {
                ReadState::Dcsl(DcslState::new(HEADER_LEN, &ty, SkipLadder::default())?)
            }
        };
        Ok(ColumnReader {
            source,
            ty,
            header,
            pos: 0,
            state,
            stats: ColumnStats::default(),
        })
    }

    pub fn header(&self) -> &ColumnFileHeader {
        &self.header
    }

    pub fn ty(&self) -> &FieldType {
        &self.ty
    }

    pub fn record_count(&self) -> u64 {
        self.header.record_count
    }

    /// Index of the next record `next_value` would return.
    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn io_stats(&self) -> IoStats {
        self.source.stats()
    }

    pub fn stats(&self) -> ColumnStats {
        let mut s = self.stats.clone();
        match &self.state {
            ReadState::SkipList(nav) => s.skip = nav.stats.clone(),
            ReadState::Dcsl(_) | ReadState::Plain { .. } | ReadState::Blocks(_) => {}
        }
        s
    }

    pub fn source_mut(&mut self) -> &mut MeteredSource<S> {
        &mut self.source
    }

    fn body_error(&self, e: Error) -> Error {
        match e {
            Error::Truncated { offset, .. } => Error::Corrupt(format!(
                "column body ends early at byte {offset} (record {} of {})",
                self.pos, self.header.record_count
            )),
            other => other,
        }
    }

    /// Advances `n` records without deserializing them.
    pub fn skip(&mut self, n: u64) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let count = self.header.record_count;
        if self.pos.checked_add(n).is_none_or(|end| end > count) {
            return Err(Error::SkipPastEnd {
                position: self.pos,
                count: n,
                record_count: count,
            });
        }
        let res = match &mut self.state {
            ReadState::Plain { offset } => {
                let mut r = Ok(());
                if let Some(w) = self.ty.fixed_width() {
                    *offset += n * w;
                } else {
                    for _ in 0..n {
                        match skip_value(&mut self.source, *offset, &self.ty) {
                            Ok(len) => *offset += len,
                            Err(e) => {
                                r = Err(e);
                                break;
                            }
                        }
                    }
                }
                r
            }
            ReadState::SkipList(nav) => {
                let ty = &self.ty;
                nav.skip(&mut self.source, n, |r, at| skip_value(r, at, ty))
            }
            ReadState::Blocks(b) => b.skip(&mut self.source, n),
            ReadState::Dcsl(d) => d.skip(&mut self.source, n),
        };
        res.map_err(|e| self.body_error(e))?;
        self.pos += n;
        Ok(())
    }

    /// Deserializes the record at the current position and advances by one.
    pub fn next_value(&mut self) -> Result<Value> {
        if self.pos >= self.header.record_count {
            return Err(Error::Exhausted);
        }
        let res = match &mut self.state {
            ReadState::Plain { offset } => self.source.decode_value_at(*offset, &self.ty)
                .map(|(v, len)| {
                    *offset += len;
                    v
                }),
            ReadState::SkipList(nav) => self.source.decode_value_at(nav.value_offset(), &self.ty)
                .map(|(v, len)| {
                    nav.consume(len);
                    v
                }),
            ReadState::Blocks(b) => b.next_value(&mut self.source, &self.ty, &mut self.stats),
            ReadState::Dcsl(d) => d.next_value(&mut self.source),
        };
        let v = res.map_err(|e| self.body_error(e))?;
        self.stats.values_deserialized += 1;
        self.pos += 1;
        Ok(v)
    }

    /// Reads the values at strictly increasing `indices`, skipping the gaps.
    pub fn read_indices(&mut self, indices: &[u64]) -> Result<Vec<Value>> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            if i < self.pos {
                return Err(Error::Config(format!(
                    "index {i} is behind reader position {}",
                    self.pos
                )));
            }
            self.skip(i - self.pos)?;
            out.push(self.next_value()?);
        }
        Ok(out)
    }

    /// Reads every remaining value.
    pub fn read_all(&mut self) -> Result<Vec<Value>> {
        let left = self.header.record_count - self.pos;
        let mut out = Vec::with_capacity(left.min(1 << 20) as usize);
        for _ in 0..left {
            out.push(self.next_value()?);
        }
        Ok(out)
    }
}

impl<S> fmt::Debug for ColumnReader<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ColumnReader")
            .field("ty", &self.ty)
            .field("header", &self.header)
            .field("pos", &self.pos)
            .finish_non_exhaustive()
    }
}

/// Human-readable summary used in error messages and reports.
pub fn describe(header: &ColumnFileHeader) -> String {
    format!(
        "{} codec={} records={}",
        header.layout, header.codec, header.record_count
    )
}

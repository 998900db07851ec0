//! Compressed-block column body: repeated
//! `[record_count u32][uncompressed_size u32][compressed_size u32][codec u8][payload]`.
//! The payload is the codec-compressed concatenation of plain-encoded
//! values. A block nobody reads from is stepped over using its header alone.

use alloc::format;
use alloc::vec::Vec;

use crate::codec::{self, CodecId};
use crate::column::ColumnStats;
use crate::encoding::{decode_value, encode_value, skip_value};
use crate::error::{Error, Result};
use crate::metered::{read_u32, ByteReader, SliceReader};
use crate::schema::{FieldType, Value};

pub(crate) const BLOCK_HEADER_LEN: u64 = 13;
pub const MIN_BLOCK_TARGET: u32 = 4 * 1024;

#[derive(Debug)]
pub(crate) struct CompressedBlocksWriter {
    ty: FieldType,
    codec: CodecId,
    target: u32,
    buf: Vec<u8>,
    in_block: u32,
    out: Vec<u8>,
    blocks: u64,
}

impl CompressedBlocksWriter {
    pub fn new(ty: FieldType, codec: CodecId, target: u32) -> Result<Self> {
        if target < MIN_BLOCK_TARGET {
            return Err(Error::Config(format!(
                "compressed block target {target} below {MIN_BLOCK_TARGET} bytes"
            )));
        }
        if codec == CodecId::Raw {
            return Err(Error::Config("compressed blocks need a real codec".into()));
        }
        Ok(CompressedBlocksWriter {
            ty,
            codec,
            target,
            buf: Vec::new(),
            in_block: 0,
            out: Vec::new(),
            blocks: 0,
        })
    }

    pub fn push(&mut self, value: &Value) -> Result<()> {
        let before = self.buf.len();
        if let Err(e) = encode_value(value, &self.ty, &mut self.buf) {
            self.buf.truncate(before);
            return Err(e);
        }
        self.in_block += 1;
        if self.buf.len() >= self.target as usize {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if self.in_block == 0 {
            return Ok(());
        }
        let uncompressed = u32::try_from(self.buf.len())
            .map_err(|_| Error::Config("compressed block exceeds 4 GiB".into()))?;
        let payload = codec::compress(self.codec, &self.buf);
        let compressed = u32::try_from(payload.len())
            .map_err(|_| Error::Config("compressed block exceeds 4 GiB".into()))?;
        self.out.extend_from_slice(&self.in_block.to_le_bytes());
        self.out.extend_from_slice(&uncompressed.to_le_bytes());
        self.out.extend_from_slice(&compressed.to_le_bytes());
        self.out.push(self.codec.as_u8());
        self.out.extend_from_slice(&payload);
        self.buf.clear();
        self.in_block = 0;
        self.blocks += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(Vec<u8>, u64)> {
        self.flush()?;
        Ok((self.out, self.blocks))
    }
}

#[derive(Debug)]
struct CurrentBlock {
    count: u32,
    uncompressed: u32,
    compressed: u32,
    codec: CodecId,
    payload_offset: u64,
    /// Next record (block-local) to hand out.
    local: u32,
    data: Option<Vec<u8>>,
    data_pos: u64,
    data_idx: u32,
}

#[derive(Debug)]
pub(crate) struct BlocksState {
    next_header: u64,
    cur: Option<CurrentBlock>,
}

impl BlocksState {
    pub fn new(body_offset: u64) -> Self {
        BlocksState {
            next_header: body_offset,
            cur: None,
        }
    }

    fn current<R: ByteReader + ?Sized>(&mut self, r: &mut R) -> Result<&mut CurrentBlock> {
        if self.cur.as_ref().is_some_and(|c| c.local == c.count) {
            self.cur = None;
        }
        if self.cur.is_none() {
            let at = self.next_header;
            let count = read_u32(r, at)?;
            let uncompressed = read_u32(r, at + 4)?;
            let compressed = read_u32(r, at + 8)?;
            let codec = CodecId::from_u8(r.bytes(at + 12, 1)?[0])?;
            if count == 0 {
                return Err(Error::Corrupt(format!("empty compressed block at byte {at}")));
            }
            let payload_offset = at + BLOCK_HEADER_LEN;
            self.next_header = payload_offset + compressed as u64;
            self.cur = Some(CurrentBlock {
                count,
                uncompressed,
                compressed,
                codec,
                payload_offset,
                local: 0,
                data: None,
                data_pos: 0,
                data_idx: 0,
            });
        }
        Ok(self.cur.as_mut().expect("loaded"))
    }

    pub fn skip<R: ByteReader + ?Sized>(&mut self, r: &mut R, mut n: u64) -> Result<()> {
        while n > 0 {
            let cur = self.current(r)?;
            let left = (cur.count - cur.local) as u64;
            if n >= left {
                cur.local = cur.count;
                n -= left;
            } else {
                cur.local += n as u32;
                n = 0;
            }
        }
        Ok(())
    }

    pub fn next_value<R: ByteReader + ?Sized>(
        &mut self,
        r: &mut R,
        ty: &FieldType,
        stats: &mut ColumnStats,
    ) -> Result<Value> {
        let cur = self.current(r)?;
        if cur.data.is_none() {
            let payload = r.bytes(cur.payload_offset, cur.compressed as usize)?;
            let data = codec::decompress(cur.codec, payload, Some(cur.uncompressed as usize))?;
            stats.blocks_decompressed += 1;
            stats.bytes_decompressed += data.len() as u64;
            cur.data = Some(data);
            cur.data_pos = 0;
            cur.data_idx = 0;
        }
        let data = cur.data.as_deref().expect("decompressed");
        let mut sr = SliceReader(data);
        while cur.data_idx < cur.local {
            cur.data_pos += skip_value(&mut sr, cur.data_pos, ty)?;
            cur.data_idx += 1;
        }
        let (v, len) = decode_value(&mut sr, cur.data_pos, ty)?;
        cur.data_pos += len;
        cur.data_idx += 1;
        cur.local += 1;
        Ok(v)
    }
}

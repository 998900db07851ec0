//! Dictionary compressed skip lists for map columns.
//!
//! Each block is `[record_count u32][dict_len u32][(u16 len, key bytes)...]`
//! followed by a skip-list body of `record_count` maps. Inside the body a map
//! is `[entry_count u32]` then `(key index u32, plain value)` pairs. The
//! dictionary lists the block's distinct keys in first-occurrence order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::encoding::{decode_value, encode_value, skip_value};
use crate::error::{Error, Result};
use crate::metered::{read_u16, read_u32, ByteReader};
use crate::schema::{FieldType, Value};
use crate::skiplist::{SkipLadder, SkipListWriter, SkipNav};

pub const DEFAULT_BLOCK_RECORDS: u32 = 10_000;

#[derive(Debug)]
pub(crate) struct DcslWriter {
    value_ty: FieldType,
    block_records: u32,
    ladder: SkipLadder,
    dict: Vec<String>,
    dict_index: BTreeMap<String, u32>,
    body: SkipListWriter,
    in_block: u32,
    out: Vec<u8>,
    blocks: u64,
}

impl DcslWriter {
    pub fn new(ty: &FieldType, block_records: u32, ladder: SkipLadder) -> Result<Self> {
        let FieldType::Map(value_ty) = ty else {
            return Err(Error::Config(format!(
                "dictionary compressed skip lists need a map column, got {ty}"
            )));
        };
        if block_records == 0 {
            return Err(Error::Config("dcsl block_records must be at least 1".into()));
        }
        Ok(DcslWriter {
            value_ty: (**value_ty).clone(),
            block_records,
            ladder,
            dict: Vec::new(),
            dict_index: BTreeMap::new(),
            body: SkipListWriter::new(ladder),
            in_block: 0,
            out: Vec::new(),
            blocks: 0,
        })
    }

    pub fn push(&mut self, value: &Value) -> Result<()> {
        let Value::Map(entries) = value else {
            return Err(Error::TypeMismatch {
                field: String::new(),
                expected: crate::schema::Kind::Map,
                actual: value.kind(),
            });
        };
        let mut indices = Vec::with_capacity(entries.len());
        for (k, _) in entries {
            if k.len() > u16::MAX as usize {
                return Err(Error::Config(format!(
                    "map key of {} bytes exceeds dictionary limit",
                    k.len()
                )));
            }
            let idx = match self.dict_index.get(k.as_str()) {
                Some(&i) => i,
                None => {
                    let i = self.dict.len() as u32;
                    self.dict.push(k.clone());
                    self.dict_index.insert(k.clone(), i);
                    i
                }
            };
            indices.push(idx);
        }
        let value_ty = &self.value_ty;
        self.body.push_with(|buf| {
            buf.extend_from_slice(&(entries.len() as u32).to_le_bytes());
            for ((_, v), idx) in entries.iter().zip(&indices) {
                buf.extend_from_slice(&idx.to_le_bytes());
                encode_value(v, value_ty, buf)?;
            }
            Ok(())
        })?;
        self.in_block += 1;
        if self.in_block == self.block_records {
            self.flush();
        }
        Ok(())
    }

    fn flush(&mut self) {
        if self.in_block == 0 {
            return;
        }
        let body = core::mem::replace(&mut self.body, SkipListWriter::new(self.ladder));
        let (body, count) = body.finish();
        self.out.extend_from_slice(&(count as u32).to_le_bytes());
        self.out
            .extend_from_slice(&(self.dict.len() as u32).to_le_bytes());
        for key in &self.dict {
            self.out.extend_from_slice(&(key.len() as u16).to_le_bytes());
            self.out.extend_from_slice(key.as_bytes());
        }
        self.out.extend_from_slice(&body);
        self.dict.clear();
        self.dict_index.clear();
        self.in_block = 0;
        self.blocks += 1;
    }

    pub fn finish(mut self) -> (Vec<u8>, u64) {
        self.flush();
        (self.out, self.blocks)
    }
}

pub(crate) fn skip_dcsl_map<R: ByteReader + ?Sized>(
    r: &mut R,
    offset: u64,
    value_ty: &FieldType,
) -> Result<u64> {
    let count = read_u32(r, offset)? as u64;
    if let Some(w) = value_ty.fixed_width() {
        let len = 4 + count * (4 + w);
        let available = r.total_len().saturating_sub(offset);
        if len > available {
            return Err(Error::Truncated {
                offset,
                needed: len,
                available,
            });
        }
        return Ok(len);
    }
    let mut pos = offset + 4;
    for _ in 0..count {
        pos += 4;
        pos += skip_value(r, pos, value_ty)?;
    }
    Ok(pos - offset)
}

fn decode_dcsl_map<R: ByteReader + ?Sized>(
    r: &mut R,
    offset: u64,
    value_ty: &FieldType,
    dict: &[String],
) -> Result<(Value, u64)> {
    let count = read_u32(r, offset)?;
    let mut pos = offset + 4;
    let cap = (count as u64).min(r.total_len().saturating_sub(pos) / 12) as usize;
    let mut entries = Vec::with_capacity(cap);
    for _ in 0..count {
        let idx = read_u32(r, pos)?;
        let key = dict.get(idx as usize).ok_or_else(|| {
            Error::Corrupt(format!(
                "dictionary index {idx} out of range ({} entries) at byte {pos}",
                dict.len()
            ))
        })?;
        pos += 4;
        let (v, n) = decode_value(r, pos, value_ty)?;
        pos += n;
        entries.push((key.clone(), v));
    }
    Ok((Value::Map(entries), pos - offset))
}

#[derive(Debug)]
struct CurrentBlock {
    count: u32,
    dict: Vec<String>,
    nav: SkipNav,
}

#[derive(Debug)]
pub(crate) struct DcslState {
    ladder: SkipLadder,
    value_ty: FieldType,
    next_block: u64,
    cur: Option<CurrentBlock>,
    pub dict_entries_read: u64,
}

impl DcslState {
    pub fn new(body_offset: u64, ty: &FieldType, ladder: SkipLadder) -> Result<Self> {
        let FieldType::Map(value_ty) = ty else {
            return Err(Error::Corrupt(format!("dcsl layout on non-map column {ty}")));
        };
        Ok(DcslState {
            ladder,
            value_ty: (**value_ty).clone(),
            next_block: body_offset,
            cur: None,
            dict_entries_read: 0,
        })
    }

    fn current<R: ByteReader + ?Sized>(&mut self, r: &mut R) -> Result<&mut CurrentBlock> {
        if self.cur.is_none() {
            let at = self.next_block;
            let count = read_u32(r, at)?;
            if count == 0 {
                return Err(Error::Corrupt(format!("empty dcsl block at byte {at}")));
            }
            let entries = read_u32(r, at + 4)?;
            let mut pos = at + 8;
            let mut dict = Vec::with_capacity((entries as u64).min(r.total_len() / 2) as usize);
            for _ in 0..entries {
                let len = read_u16(r, pos)? as usize;
                let bytes = r.bytes(pos + 2, len)?;
                let key = core::str::from_utf8(bytes)
                    .map_err(|_| Error::InvalidUtf8 { offset: pos + 2 })?;
                dict.push(String::from(key));
                pos += 2 + len as u64;
            }
            self.dict_entries_read += entries as u64;
            self.cur = Some(CurrentBlock {
                count,
                dict,
                nav: SkipNav::new(self.ladder, pos),
            });
        }
        Ok(self.cur.as_mut().expect("loaded"))
    }

    fn close_if_done(&mut self) {
        if let Some(cur) = &self.cur {
            if cur.nav.index == cur.count as u64 {
                self.next_block = cur.nav.offset;
                self.cur = None;
            }
        }
    }

    pub fn skip<R: ByteReader + ?Sized>(&mut self, r: &mut R, mut n: u64) -> Result<()> {
        while n > 0 {
            let value_ty = self.value_ty.clone();
            let cur = self.current(r)?;
            let take = n.min(cur.count as u64 - cur.nav.index);
            cur.nav
                .skip(r, take, |r, at| skip_dcsl_map(r, at, &value_ty))?;
            n -= take;
            self.close_if_done();
        }
        Ok(())
    }

    pub fn next_value<R: ByteReader + ?Sized>(&mut self, r: &mut R) -> Result<Value> {
        let value_ty = self.value_ty.clone();
        let cur = self.current(r)?;
        let at = cur.nav.value_offset();
        let (v, len) = decode_dcsl_map(r, at, &value_ty, &cur.dict)?;
        cur.nav.consume(len);
        self.close_if_done();
        Ok(v)
    }
}

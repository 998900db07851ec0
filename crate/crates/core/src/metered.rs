//! Random-access byte sources with I/O accounting.
//!
//! A [`MeteredSource`] wraps a [`ByteSource`] and charges every logical read
//! either by the exact number of bytes requested or by whole transfer-size
//! windows. Windows are charged at most once per source (one scan pass), which
//! is what makes narrow reads inside interleaved layouts expensive.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::encoding::decode_value;

/// Default I/O transfer size (128 KiB).
pub const DEFAULT_TRANSFER_SIZE: u64 = 128 * 1024;

pub trait ByteSource {
    fn len(&self) -> u64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fills `buf` with the bytes at `offset..offset + buf.len()`.
    fn read_at(&mut self, offset: u64, buf: &mut [u8]) -> Result<()>;
}

impl ByteSource for Vec<u8> {
    fn len(&self) -> u64 {
        self.as_slice().len() as u64
    }

    fn read_at(&mut self, offset: u64, buf: &mut [u8]) -> Result<()> {
        self.as_slice().read_at(offset, buf)
    }
}

impl ByteSource for &[u8] {
    fn len(&self) -> u64 {
        <[u8]>::len(self) as u64
    }

    fn read_at(&mut self, offset: u64, buf: &mut [u8]) -> Result<()> {
        let start = offset as usize;
        let end = start + buf.len();
        if end > <[u8]>::len(self) {
            return Err(Error::Truncated {
                offset,
                needed: buf.len() as u64,
                available: (<[u8]>::len(self) as u64).saturating_sub(offset),
            });
        }
        buf.copy_from_slice(&self[start..end]);
        Ok(())
    }
}

/// Read access used by the decoders: borrow `len` bytes at `offset`.
pub trait ByteReader {
    fn total_len(&self) -> u64;
    fn bytes(&mut self, offset: u64, len: usize) -> Result<&[u8]>;
}

/// Unmetered reader over an in-memory slice (decompressed blocks, SEQ
/// records).
#[derive(Debug, Clone, Copy)]
pub struct SliceReader<'a>(pub &'a [u8]);

impl ByteReader for SliceReader<'_> {
    fn total_len(&self) -> u64 {
        self.0.len() as u64
    }

    #[inline]
    fn bytes(&mut self, offset: u64, len: usize) -> Result<&[u8]> {
        let start = offset as usize;
        match start.checked_add(len) {
            Some(end) if end <= self.0.len() => Ok(&self.0[start..end]),
            _ => Err(Error::Truncated {
                offset,
                needed: len as u64,
                available: (self.0.len() as u64).saturating_sub(offset),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metering {
    /// Count exactly the bytes requested.
    Exact,
    /// Count whole aligned windows of the given size, once each; the last
    /// window of a source stops at its end.
    Transfer(u64),
}

impl Default for Metering {
    fn default() -> Self {
        Metering::Transfer(DEFAULT_TRANSFER_SIZE)
    }
}

/// Where the bytes of a source live relative to the reading node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Locality {
    #[default]
    Local,
    Remote,
    /// Per fixed-size block: `remote[i]` covers `[i * block_size, (i+1) * block_size)`.
    PerBlock { block_size: u64, remote: Vec<bool> },
}

impl Locality {
    fn is_remote(&self, offset: u64) -> bool {
        match self {
            Locality::Local => false,
            Locality::Remote => true,
            Locality::PerBlock { block_size, remote } => remote
                .get((offset / block_size) as usize)
                .copied()
                .unwrap_or(false),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoStats {
    pub bytes_local: u64,
    pub bytes_remote: u64,
    /// Physical fetches from the underlying source.
    pub fetches: u64,
    /// Transfer windows charged (transfer metering only).
    pub transfers: u64,
}

impl IoStats {
    pub fn bytes_read(&self) -> u64 {
        self.bytes_local + self.bytes_remote
    }

    pub fn merge(&mut self, other: &IoStats) {
        self.bytes_local += other.bytes_local;
        self.bytes_remote += other.bytes_remote;
        self.fetches += other.fetches;
        self.transfers += other.transfers;
    }
}

pub struct MeteredSource<S> {
    source: S,
    len: u64,
    metering: Metering,
    locality: Locality,
    buf: Vec<u8>,
    buf_start: u64,
    buf_cap: usize,
    charged: BTreeSet<u64>,
    last_window: Option<u64>,
    /// Byte range covered by the most recently charged windows.
    hot: (u64, u64),
    stats: IoStats,
}

impl<S: ByteSource> MeteredSource<S> {
    pub fn new(source: S, metering: Metering) -> Self {
        let buf_cap = match metering {
            Metering::Transfer(t) => t.clamp(4096, 4 << 20) as usize,
            Metering::Exact => DEFAULT_TRANSFER_SIZE as usize,
        };
        MeteredSource {
            len: source.len(),
            source,
            metering,
            locality: Locality::Local,
            buf: Vec::new(),
            buf_start: 0,
            buf_cap,
            charged: BTreeSet::new(),
            last_window: None,
            hot: (0, 0),
            stats: IoStats::default(),
        }
    }

    pub fn with_locality(mut self, locality: Locality) -> Self {
        self.locality = locality;
        self
    }

    pub fn set_locality(&mut self, locality: Locality) {
        self.locality = locality;
    }

    pub fn set_remote(&mut self, remote: bool) {
        self.locality = if remote {
            Locality::Remote
        } else {
            Locality::Local
        };
    }

    pub fn metering(&self) -> Metering {
        self.metering
    }

    pub fn stats(&self) -> IoStats {
        self.stats
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn into_inner(self) -> S {
        self.source
    }

    fn add_bytes(&mut self, offset: u64, n: u64) {
        if self.locality.is_remote(offset) {
            self.stats.bytes_remote += n;
        } else {
            self.stats.bytes_local += n;
        }
    }

    #[inline]
    fn charge(&mut self, offset: u64, len: u64) {
        if len == 0 {
            return;
        }
        match self.metering {
            Metering::Exact => match &self.locality {
                Locality::PerBlock { block_size, .. } => {
                    let bs = *block_size;
                    let end = offset + len;
                    let mut at = offset;
                    while at < end {
                        let next = ((at / bs) + 1) * bs;
                        let chunk = next.min(end) - at;
                        self.add_bytes(at, chunk);
                        at += chunk;
                    }
                }
                _ => self.add_bytes(offset, len),
            },
            Metering::Transfer(t) => {
                if offset >= self.hot.0 && offset + len <= self.hot.1 {
                    return;
                }
                let first = offset / t;
                let last = (offset + len - 1) / t;
                for w in first..=last {
                    if self.last_window == Some(w) {
                        continue;
                    }
                    self.last_window = Some(w);
                    if self.charged.insert(w) {
                        self.stats.transfers += 1;
                        self.add_bytes(w * t, t.min(self.len - w * t));
                    }
                }
                self.hot = (first * t, (last + 1) * t);
            }
        }
    }

    fn fill(&mut self, offset: u64, len: usize) -> Result<()> {
        let want = len.max(self.buf_cap) as u64;
        let n = want.min(self.len - offset) as usize;
        if self.buf.len() < n {
            self.buf.resize(n, 0);
        }
        self.buf.truncate(n);
        self.source.read_at(offset, &mut self.buf)?;
        self.buf_start = offset;
        self.stats.fetches += 1;
        Ok(())
    }
}

impl<S: ByteSource> MeteredSource<S> {
    /// Decodes the value at `offset` straight from the read buffer when it
    /// lies inside it. Charges exactly the value's bytes, like
    /// [`decode_value`] through [`ByteReader::bytes`] would.
    pub fn decode_value_at(
        &mut self,
        offset: u64,
        ty: &crate::schema::FieldType,
    ) -> Result<(crate::schema::Value, u64)> {
        let buf_end = self.buf_start + self.buf.len() as u64;
        if offset < self.buf_start || offset >= buf_end {
            if offset >= self.len {
                return decode_value(self, offset, ty);
            }
            self.fill(offset, 0)?;
        }
        let start = (offset - self.buf_start) as usize;
        match decode_value(&mut SliceReader(&self.buf[start..]), 0, ty) {
            Ok((v, n)) => {
                self.charge(offset, n);
                Ok((v, n))
            }
            Err(_) => decode_value(self, offset, ty),
        }
    }
}

impl<S: ByteSource> ByteReader for MeteredSource<S> {
    fn total_len(&self) -> u64 {
        self.len
    }

    #[inline]
    fn bytes(&mut self, offset: u64, len: usize) -> Result<&[u8]> {
        let end = offset.checked_add(len as u64);
        if end.is_none_or(|e| e > self.len) {
            return Err(Error::Truncated {
                offset,
                needed: len as u64,
                available: self.len.saturating_sub(offset),
            });
        }
        self.charge(offset, len as u64);
        let buf_end = self.buf_start + self.buf.len() as u64;
        if offset < self.buf_start || offset + len as u64 > buf_end {
            self.fill(offset, len)?;
        }
        let start = (offset - self.buf_start) as usize;
        Ok(&self.buf[start..start + len])
    }
}

/// In-memory source convenience for tests and tools.
pub fn memory_source(bytes: Vec<u8>, metering: Metering) -> MeteredSource<Vec<u8>> {
    MeteredSource::new(bytes, metering)
}

/// Reads a little-endian `u32` at `offset`.
#[inline]
pub fn read_u32<R: ByteReader + ?Sized>(r: &mut R, offset: u64) -> Result<u32> {
    let b = r.bytes(offset, 4)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

#[inline]
pub fn read_u16<R: ByteReader + ?Sized>(r: &mut R, offset: u64) -> Result<u16> {
    let b = r.bytes(offset, 2)?;
    Ok(u16::from_le_bytes([b[0], b[1]]))
}

#[inline]
pub fn read_u64<R: ByteReader + ?Sized>(r: &mut R, offset: u64) -> Result<u64> {
    let b = r.bytes(offset, 8)?;
    let mut a = [0u8; 8];
    a.copy_from_slice(b);
    Ok(u64::from_le_bytes(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn zeroes(len: usize) -> Vec<u8> {
        vec![0; len]
    }

    #[test]
    fn buffered_decode_matches_plain_decode() {
        use crate::encoding::encode_value;
        use crate::schema::{FieldType, Value};
        let ty = FieldType::String;
        let mut data = Vec::new();
        let mut values = Vec::new();
        for i in 0..3000usize {
            let v = Value::String(alloc::format!("{i:0>width$}", width = 1 + i % 97));
            encode_value(&v, &ty, &mut data).unwrap();
            values.push(v);
        }
        for metering in [Metering::Exact, Metering::Transfer(1000)] {
            let mut a = MeteredSource::new(data.clone(), metering);
            let mut b = MeteredSource::new(data.clone(), metering);
            let (mut oa, mut ob) = (0, 0);
            for v in &values {
                let (va, na) = a.decode_value_at(oa, &ty).unwrap();
                let (vb, nb) = decode_value(&mut b, ob, &ty).unwrap();
                assert_eq!((&va, na), (&vb, nb));
                assert_eq!(&va, v);
                oa += na;
                ob += nb;
                assert_eq!(a.stats().bytes_read(), b.stats().bytes_read());
            }
            assert!(a.decode_value_at(oa, &ty).is_err());
            let cut = data.len() as u64 - 3;
            let mut c = MeteredSource::new(data[..cut as usize].to_vec(), metering);
            let mut at = 0;
            let mut failed = false;
            while at < cut {
                match c.decode_value_at(at, &ty) {
                    Ok((_, n)) => at += n,
                    Err(e) => {
                        assert!(matches!(e, Error::Truncated { .. }));
                        failed = true;
                        break;
                    }
                }
            }
            assert!(failed);
        }
    }

    #[test]
    fn transfer_metering_charges_whole_windows_once() {
        let data = zeroes(1000);
        let mut m = MeteredSource::new(data, Metering::Transfer(256));
        let mut off = 0;
        while off < 1000 {
            let n = 7.min(1000 - off);
            m.bytes(off, n as usize).unwrap();
            off += n;
        }
        // three whole windows plus the 232-byte tail
        assert_eq!(m.stats().bytes_read(), 1000);
        assert_eq!(m.stats().transfers, 4);
        m.bytes(0, 10).unwrap();
        assert_eq!(m.stats().bytes_read(), 1000);
        let mut m = MeteredSource::new(zeroes(1000), Metering::Transfer(256));
        m.bytes(300, 1).unwrap();
        m.bytes(990, 1).unwrap();
        assert_eq!(m.stats().bytes_read(), 256 + 232);
    }

    #[test]
    fn exact_metering_counts_requested_bytes() {
        let mut m = MeteredSource::new(zeroes(100), Metering::Exact);
        m.bytes(10, 5).unwrap();
        m.bytes(90, 10).unwrap();
        assert_eq!(m.stats().bytes_read(), 15);
        assert!(matches!(m.bytes(95, 10), Err(Error::Truncated { .. })));
        assert_eq!(m.stats().bytes_read(), 15);
    }

    #[test]
    fn large_reads_bypass_buffer_capacity() {
        let data: Vec<u8> = (0..20_000u32).map(|i| i as u8).collect();
        let mut m = MeteredSource::new(data.clone(), Metering::Transfer(4096));
        let got = m.bytes(100, 15_000).unwrap().to_vec();
        assert_eq!(got, data[100..15_100]);
    }

    #[test]
    fn per_block_locality_splits_bytes() {
        let mut m = MeteredSource::new(zeroes(300), Metering::Exact).with_locality(
            Locality::PerBlock {
                block_size: 100,
                remote: vec![false, true, false],
            },
        );
        m.bytes(50, 200).unwrap();
        assert_eq!(m.stats().bytes_local, 100);
        assert_eq!(m.stats().bytes_remote, 100);
    }
}

//! Skip-list column body.
//!
//! Every record whose index is a multiple of the ladder base is preceded by
//! a skip block. The block holds one little-endian `u64` per ladder level
//! that divides the index, largest level first. With the default ladder
//! (base 10, height 3) index 0 carries `[skip1000, skip100, skip10]`, index
//! 100 carries `[skip100, skip10]` and index 10 carries `[skip10]`.
//!
//! A skip distance is measured from the end of its skip block to the start
//! of the skip block `N` records ahead, or to end-of-body when fewer than
//! `N` records follow. Presence is a function of the index alone, so the
//! body needs no flags.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metered::{read_u64, ByteReader};

pub const MAX_HEIGHT: u32 = 6;

/// Geometric ladder of skip distances: `base^height, ..., base^1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SkipLadder {
    base: u64,
    height: u32,
}

impl Default for SkipLadder {
    fn default() -> Self {
        SkipLadder { base: 10, height: 3 }
    }
}

impl SkipLadder {
    pub fn new(base: u64, height: u32) -> Result<Self> {
        if base < 2 || height == 0 || height > MAX_HEIGHT || base.checked_pow(height).is_none() {
            return Err(Error::Config(alloc::format!(
                "invalid skip ladder base={base} height={height}"
            )));
        }
        Ok(SkipLadder { base, height })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Record distance of level `j` (1-based).
    pub fn level(&self, j: u32) -> u64 {
        self.base.pow(j)
    }

    /// Largest skip distance; also the writer's buffering unit.
    pub fn top(&self) -> u64 {
        self.level(self.height)
    }

    /// Number of skip entries stored before record `index`.
    pub fn present(&self, index: u64) -> u32 {
        let mut p = 0;
        let mut step = self.base;
        while p < self.height && index % step == 0 {
            p += 1;
            step = step.saturating_mul(self.base);
        }
        p
    }

    pub fn block_len(&self, index: u64) -> u64 {
        8 * self.present(index) as u64
    }
}

/// Buffers one top-level group of encoded values, then emits it with its
/// skip blocks filled in.
#[derive(Debug)]
pub struct SkipListWriter {
    ladder: SkipLadder,
    group: Vec<u8>,
    ends: Vec<usize>,
    out: Vec<u8>,
    count: u64,
}

impl SkipListWriter {
    pub fn new(ladder: SkipLadder) -> Self {
        SkipListWriter {
            ladder,
            group: Vec::new(),
            ends: Vec::new(),
            out: Vec::new(),
            count: 0,
        }
    }

    /// Appends one record; `encode` writes its bytes into the supplied buffer.
    pub fn push_with<F>(&mut self, encode: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let before = self.group.len();
        if let Err(e) = encode(&mut self.group) {
            self.group.truncate(before);
            return Err(e);
        }
        self.ends.push(self.group.len());
        self.count += 1;
        if self.ends.len() as u64 == self.ladder.top() {
            self.flush_group();
        }
        Ok(())
    }

    pub fn push_encoded(&mut self, bytes: &[u8]) -> Result<()> {
        self.push_with(|buf| {
            buf.extend_from_slice(bytes);
            Ok(())
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    fn flush_group(&mut self) {
        let n = self.ends.len();
        if n == 0 {
            return;
        }
        let base = self.ladder.base as usize;
        let first = self.count - n as u64;
        let blocks = n.div_ceil(base);
        let value_start = |k: usize| if k == 0 { 0 } else { self.ends[k - 1] };
        let mut block_start = vec![0u64; blocks];
        let mut skip_bytes = 0u64;
        for (b, start) in block_start.iter_mut().enumerate() {
            let k = b * base;
            *start = skip_bytes + value_start(k) as u64;
            skip_bytes += self.ladder.block_len(first + k as u64);
        }
        let group_end = skip_bytes + self.group.len() as u64;
        self.out.reserve(group_end as usize);
        for (b, &start) in block_start.iter().enumerate() {
            let k = b * base;
            let p = self.ladder.present(first + k as u64);
            let end_of_block = start + 8 * p as u64;
            for j in (1..=p).rev() {
                let span = self.ladder.level(j) as usize;
                let target = if k + span < n {
                    block_start[(k + span) / base]
                } else {
                    group_end
                };
                self.out
                    .extend_from_slice(&(target - end_of_block).to_le_bytes());
            }
            let last = (k + base).min(n);
            self.out
                .extend_from_slice(&self.group[value_start(k)..self.ends[last - 1]]);
        }
        self.group.clear();
        self.ends.clear();
    }

    /// Flushes the tail group and returns the body with its record count.
    pub fn finish(mut self) -> (Vec<u8>, u64) {
        self.flush_group();
        (self.out, self.count)
    }
}

/// Counts of how a skip was carried out.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SkipStats {
    /// Jumps taken per level, index 0 = `base^1`.
    pub level_jumps: Vec<u64>,
    /// Records stepped over one at a time via their length headers.
    pub values_skipped: u64,
}

impl SkipStats {
    pub fn merge(&mut self, other: &SkipStats) {
        if self.level_jumps.len() < other.level_jumps.len() {
            self.level_jumps.resize(other.level_jumps.len(), 0);
        }
        for (a, b) in self.level_jumps.iter_mut().zip(&other.level_jumps) {
            *a += b;
        }
        self.values_skipped += other.values_skipped;
    }
}

/// Forward navigation over a skip-list body.
///
/// `offset` sits at the skip block preceding record `index` when the index
/// carries one, otherwise at the record itself.
#[derive(Debug, Clone)]
pub(crate) struct SkipNav {
    ladder: SkipLadder,
    pub offset: u64,
    pub index: u64,
    pub stats: SkipStats,
}

impl SkipNav {
    pub fn new(ladder: SkipLadder, offset: u64) -> Self {
        SkipNav {
            ladder,
            offset,
            index: 0,
            stats: SkipStats {
                level_jumps: vec![0; ladder.height as usize],
                values_skipped: 0,
            },
        }
    }

    /// Byte offset of record `index`'s value, stepping over its skip block.
    pub fn value_offset(&self) -> u64 {
        self.offset + self.ladder.block_len(self.index)
    }

    /// Moves past the current record whose value is `len` bytes long.
    pub fn consume(&mut self, len: u64) {
        self.offset = self.value_offset() + len;
        self.index += 1;
    }

    /// Advances `n` records: largest available jumps first, then single
    /// records via `value_len`.
    pub fn skip<R, F>(&mut self, r: &mut R, mut n: u64, mut value_len: F) -> Result<()>
    where
        R: ByteReader + ?Sized,
        F: FnMut(&mut R, u64) -> Result<u64>,
    {
        while n > 0 {
            let p = self.ladder.present(self.index);
            if p > 0 {
                let mut jumped = false;
                for j in (1..=p).rev() {
                    let span = self.ladder.level(j);
                    if span <= n {
                        let entry = self.offset + 8 * (p - j) as u64;
                        let dist = read_u64(r, entry)?;
                        self.offset = self.offset + 8 * p as u64 + dist;
                        self.index += span;
                        n -= span;
                        self.stats.level_jumps[(j - 1) as usize] += 1;
                        jumped = true;
                        break;
                    }
                }
                if jumped {
                    continue;
                }
            }
            let at = self.value_offset();
            let len = value_len(r, at)?;
            self.offset = at + len;
            self.index += 1;
            self.stats.values_skipped += 1;
            n -= 1;
        }
        Ok(())
    }
}

//! General-purpose byte codecs used by compressed blocks, block-compressed
//! SEQ files and compressed PAX segments.
//!
//! `FastLz` is LZ4 (size-prepended block format); `HighRatio` is raw
//! deflate at level 6.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum CodecId {
    #[default]
    Raw = 0,
    FastLz = 1,
    HighRatio = 2,
}

impl CodecId {
    pub fn from_u8(b: u8) -> Result<Self> {
        match b {
            0 => Ok(CodecId::Raw),
            1 => Ok(CodecId::FastLz),
            2 => Ok(CodecId::HighRatio),
            other => Err(Error::Corrupt(format!("unknown codec id {other}"))),
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodecId::Raw => "raw",
            CodecId::FastLz => "fast",
            CodecId::HighRatio => "high",
        })
    }
}

impl FromStr for CodecId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" | "none" => Ok(CodecId::Raw),
            "fast" | "fast_lz" | "lz4" | "lzo" => Ok(CodecId::FastLz),
            "high" | "high_ratio" | "deflate" | "zlib" => Ok(CodecId::HighRatio),
            other => Err(Error::Config(format!("unknown codec `{other}`"))),
        }
    }
}

const DEFLATE_LEVEL: u8 = 6;

pub fn compress(codec: CodecId, data: &[u8]) -> Vec<u8> {
    match codec {
        CodecId::Raw => data.to_vec(),
        CodecId::FastLz => lz4_flex::block::compress_prepend_size(data),
        CodecId::HighRatio => miniz_oxide::deflate::compress_to_vec(data, DEFLATE_LEVEL),
    }
}

/// Decompresses `data`. When `expected_len` is given the output length is
/// verified against it.
pub fn decompress(codec: CodecId, data: &[u8], expected_len: Option<usize>) -> Result<Vec<u8>> {
    let out = match codec {
        CodecId::Raw => data.to_vec(),
        CodecId::FastLz => lz4_flex::block::decompress_size_prepended(data)
            .map_err(|e| Error::Codec(format!("lz4: {e}")))?,
        CodecId::HighRatio => {
            let limit = expected_len.unwrap_or(usize::MAX);
            miniz_oxide::inflate::decompress_to_vec_with_limit(data, limit)
                .map_err(|e| Error::Codec(format!("inflate: {:?}", e.status)))?
        }
    };
    if let Some(n) = expected_len {
        if out.len() != n {
            return Err(Error::Corrupt(format!(
                "decompressed {} bytes, header says {n}",
                out.len()
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_every_codec() {
        let data: Vec<u8> = (0..10_000u32).flat_map(|i| (i % 97).to_le_bytes()).collect();
        for codec in [CodecId::Raw, CodecId::FastLz, CodecId::HighRatio] {
            let c = compress(codec, &data);
            assert_eq!(decompress(codec, &c, Some(data.len())).unwrap(), data);
        }
    }

    #[test]
    fn size_mismatch_is_corruption() {
        let c = compress(CodecId::FastLz, &[1, 2, 3]);
        assert!(decompress(CodecId::FastLz, &c, Some(4)).is_err());
        assert!(decompress(CodecId::HighRatio, &[0xff, 0xff], None).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("lzo".parse::<CodecId>().unwrap(), CodecId::FastLz);
        assert_eq!("zlib".parse::<CodecId>().unwrap(), CodecId::HighRatio);
        assert!("snappy".parse::<CodecId>().is_err());
        assert_eq!(CodecId::from_u8(2).unwrap(), CodecId::HighRatio);
        assert!(CodecId::from_u8(9).is_err());
    }
}

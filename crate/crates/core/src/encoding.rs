//! Plain binary value encoding.
//!
//! Layout (little-endian throughout):
//!
//! | type     | encoding                                          |
//! |----------|---------------------------------------------------|
//! | int64    | 8 bytes                                           |
//! | double   | 8 bytes, IEEE-754 bit pattern                     |
//! | string   | u32 byte length + UTF-8                           |
//! | bytes    | u32 length + raw bytes                            |
//! | array    | u32 count + elements                              |
//! | map      | u32 count + (string key, value) pairs             |

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metered::{read_u32, ByteReader};
use crate::schema::{FieldType, Value};

fn mismatch(ty: &FieldType, value: &Value) -> Error {
    Error::TypeMismatch {
        field: String::new(),
        expected: ty.kind(),
        actual: value.kind(),
    }
}

fn push_len(out: &mut Vec<u8>, len: usize) -> Result<()> {
    let len = u32::try_from(len).map_err(|_| Error::Config("length exceeds u32".into()))?;
    out.extend_from_slice(&len.to_le_bytes());
    Ok(())
}

/// Appends the plain encoding of `value` to `out`.
pub fn encode_value(value: &Value, ty: &FieldType, out: &mut Vec<u8>) -> Result<()> {
    match (value, ty) {
        (Value::Int64(v), FieldType::Int64) => out.extend_from_slice(&v.to_le_bytes()),
        (Value::Double(v), FieldType::Double) => out.extend_from_slice(&v.to_bits().to_le_bytes()),
        (Value::String(s), FieldType::String) => {
            push_len(out, s.len())?;
            out.extend_from_slice(s.as_bytes());
        }
        (Value::Bytes(b), FieldType::Bytes) => {
            push_len(out, b.len())?;
            out.extend_from_slice(b);
        }
        (Value::Array(items), FieldType::Array(elem)) => {
            push_len(out, items.len())?;
            for item in items {
                encode_value(item, elem, out)?;
            }
        }
        (Value::Map(entries), FieldType::Map(val)) => {
            push_len(out, entries.len())?;
            for (k, v) in entries {
                push_len(out, k.len())?;
                out.extend_from_slice(k.as_bytes());
                encode_value(v, val, out)?;
            }
        }
        _ => return Err(mismatch(ty, value)),
    }
    Ok(())
}

/// Encoded size of a value without encoding it. The value is assumed to be
/// well typed.
pub fn encoded_len(value: &Value) -> usize {
    match value {
        Value::Int64(_) | Value::Double(_) => 8,
        Value::String(s) => 4 + s.len(),
        Value::Bytes(b) => 4 + b.len(),
        Value::Array(items) => 4 + items.iter().map(encoded_len).sum::<usize>(),
        Value::Map(entries) => {
            4 + entries
                .iter()
                .map(|(k, v)| 4 + k.len() + encoded_len(v))
                .sum::<usize>()
        }
    }
}

fn min_width(ty: &FieldType) -> u64 {
    ty.fixed_width().unwrap_or(4)
}

/// Capacity hint for a count read from the input; bounded by what the
/// remaining bytes could possibly hold.
fn capacity_for<R: ByteReader + ?Sized>(r: &R, offset: u64, count: u32, unit: u64) -> usize {
    let remaining = r.total_len().saturating_sub(offset);
    (count as u64).min(remaining / unit.max(1)) as usize
}

pub(crate) fn decode_string<R: ByteReader + ?Sized>(r: &mut R, offset: u64) -> Result<(String, u64)> {
    let len = read_u32(r, offset)? as usize;
    let bytes = r.bytes(offset + 4, len)?;
    let s = core::str::from_utf8(bytes)
        .map_err(|_| Error::InvalidUtf8 { offset: offset + 4 })?;
    Ok((String::from(s), 4 + len as u64))
}

/// Decodes one value at `offset`, returning it with the number of bytes
/// consumed.
pub fn decode_value<R: ByteReader + ?Sized>(
    r: &mut R,
    offset: u64,
    ty: &FieldType,
) -> Result<(Value, u64)> {
    match ty {
        FieldType::Int64 => {
            let b = r.bytes(offset, 8)?;
            let mut a = [0u8; 8];
            a.copy_from_slice(b);
            Ok((Value::Int64(i64::from_le_bytes(a)), 8))
        }
        FieldType::Double => {
            let b = r.bytes(offset, 8)?;
            let mut a = [0u8; 8];
            a.copy_from_slice(b);
            Ok((Value::Double(f64::from_bits(u64::from_le_bytes(a))), 8))
        }
        FieldType::String => {
            let (s, n) = decode_string(r, offset)?;
            Ok((Value::String(s), n))
        }
        FieldType::Bytes => {
            let len = read_u32(r, offset)? as usize;
            let b = r.bytes(offset + 4, len)?.to_vec();
            Ok((Value::Bytes(b), 4 + len as u64))
        }
        FieldType::Array(elem) => {
            let count = read_u32(r, offset)?;
            let mut pos = offset + 4;
            let mut items = Vec::with_capacity(capacity_for(r, pos, count, min_width(elem)));
            for _ in 0..count {
                let (v, n) = decode_value(r, pos, elem)?;
                items.push(v);
                pos += n;
            }
            Ok((Value::Array(items), pos - offset))
        }
        FieldType::Map(val) => {
            let count = read_u32(r, offset)?;
            let mut pos = offset + 4;
            let mut entries = Vec::with_capacity(capacity_for(r, pos, count, 4 + min_width(val)));
            for _ in 0..count {
                let (k, kn) = decode_string(r, pos)?;
                pos += kn;
                let (v, vn) = decode_value(r, pos, val)?;
                pos += vn;
                entries.push((k, v));
            }
            Ok((Value::Map(entries), pos - offset))
        }
    }
}

fn check_available<R: ByteReader + ?Sized>(r: &R, offset: u64, needed: u64) -> Result<()> {
    let available = r.total_len().saturating_sub(offset);
    if needed > available {
        return Err(Error::Truncated {
            offset,
            needed,
            available,
        });
    }
    Ok(())
}

/// Returns the encoded length of the value at `offset` without building it.
/// Only length headers are read; fixed-width values cost no reads at all.
pub fn skip_value<R: ByteReader + ?Sized>(r: &mut R, offset: u64, ty: &FieldType) -> Result<u64> {
    match ty {
        FieldType::Int64 | FieldType::Double => {
            check_available(r, offset, 8)?;
            Ok(8)
        }
        FieldType::String | FieldType::Bytes => {
            let len = read_u32(r, offset)? as u64;
            check_available(r, offset + 4, len)?;
            Ok(4 + len)
        }
        FieldType::Array(elem) => {
            let count = read_u32(r, offset)? as u64;
            if let Some(w) = elem.fixed_width() {
                check_available(r, offset + 4, count * w)?;
                return Ok(4 + count * w);
            }
            let mut pos = offset + 4;
            for _ in 0..count {
                pos += skip_value(r, pos, elem)?;
            }
            Ok(pos - offset)
        }
        FieldType::Map(val) => {
            let count = read_u32(r, offset)?;
            let mut pos = offset + 4;
            for _ in 0..count {
                pos += skip_value(r, pos, &FieldType::String)?;
                pos += skip_value(r, pos, val)?;
            }
            Ok(pos - offset)
        }
    }
}

/// Convenience: encode into a fresh buffer.
pub fn to_bytes(value: &Value, ty: &FieldType) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(encoded_len(value));
    encode_value(value, ty, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metered::{MeteredSource, Metering, SliceReader};
    use alloc::vec;

    #[test]
    fn int64_layout() {
        assert_eq!(to_bytes(&Value::Int64(0), &FieldType::Int64).unwrap(), [0u8; 8]);
        assert_eq!(
            to_bytes(&Value::Int64(10000), &FieldType::Int64).unwrap(),
            [0x10, 0x27, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn string_layout() {
        assert_eq!(
            to_bytes(&Value::String("ab".into()), &FieldType::String).unwrap(),
            [2, 0, 0, 0, 0x61, 0x62]
        );
    }

    #[test]
    fn map_layout() {
        let m = Value::Map(vec![("k1".into(), Value::Int64(7))]);
        assert_eq!(
            to_bytes(&m, &FieldType::map(FieldType::Int64)).unwrap(),
            [1, 0, 0, 0, 2, 0, 0, 0, 0x6B, 0x31, 7, 0, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn type_mismatch_is_rejected() {
        assert!(matches!(
            to_bytes(&Value::Int64(1), &FieldType::String),
            Err(Error::TypeMismatch { .. })
        ));
    }

    #[test]
    fn decode_int64() {
        let bytes = to_bytes(&Value::Int64(10000), &FieldType::Int64).unwrap();
        let mut r = SliceReader(&bytes);
        assert_eq!(
            decode_value(&mut r, 0, &FieldType::Int64).unwrap(),
            (Value::Int64(10000), 8)
        );
    }

    #[test]
    fn truncated_string() {
        let bytes = [5u8, 0, 0, 0, b'a', b'b', b'c'];
        let mut r = SliceReader(&bytes);
        assert!(matches!(
            decode_value(&mut r, 0, &FieldType::String),
            Err(Error::Truncated { needed: 5, available: 3, .. })
        ));
        assert!(matches!(
            skip_value(&mut r, 0, &FieldType::String),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn invalid_utf8() {
        let bytes = [2u8, 0, 0, 0, 0xff, 0xfe];
        let mut r = SliceReader(&bytes);
        assert_eq!(
            decode_value(&mut r, 0, &FieldType::String),
            Err(Error::InvalidUtf8 { offset: 4 })
        );
    }

    #[test]
    fn skip_fixed_width_reads_nothing() {
        let bytes = to_bytes(&Value::Int64(5), &FieldType::Int64).unwrap();
        let mut m = MeteredSource::new(bytes, Metering::Exact);
        assert_eq!(skip_value(&mut m, 0, &FieldType::Int64).unwrap(), 8);
        assert_eq!(m.stats().bytes_read(), 0);
    }

    #[test]
    fn skip_string_reads_only_header() {
        let bytes = to_bytes(&Value::String("ab".into()), &FieldType::String).unwrap();
        let mut m = MeteredSource::new(bytes, Metering::Exact);
        assert_eq!(skip_value(&mut m, 0, &FieldType::String).unwrap(), 6);
        assert_eq!(m.stats().bytes_read(), 4);
    }

    #[test]
    fn huge_count_does_not_preallocate() {
        let bytes = [0xffu8, 0xff, 0xff, 0xff];
        let mut r = SliceReader(&bytes);
        assert!(decode_value(&mut r, 0, &FieldType::array(FieldType::Int64)).is_err());
    }
}

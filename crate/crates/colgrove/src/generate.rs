//! Seeded dataset generators.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use colgrove_core::{Field, FieldType, Schema, Value};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;

/// Readable ASCII minus the characters the text format reserves.
pub fn safe_alphabet() -> Vec<u8> {
    (0x21u8..=0x7e).filter(|b| !b";=\\".contains(b)).collect()
}

fn random_string(rng: &mut ChaCha8Rng, alphabet: &[u8], len: usize, out: &mut String) {
    for _ in 0..len {
        out.push(alphabet[rng.random_range(0..alphabet.len())] as char);
    }
}

fn random_word(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len)
        .map(|_| (b'a' + rng.random_range(0..26u8)) as char)
        .collect()
}

fn unique_keys(rng: &mut ChaCha8Rng, alphabet: &[u8], count: usize, len: usize) -> Vec<String> {
    let mut keys: Vec<String> = Vec::with_capacity(count);
    while keys.len() < count {
        let mut k = String::with_capacity(len);
        random_string(rng, alphabet, len, &mut k);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys
}

/// A seeded record stream with a fixed schema.
pub trait Generator: Iterator<Item = Vec<Value>> {
    fn schema(&self) -> Arc<Schema>;
}

/// Selectivity levels, in percent, tagged into `str0` of synthetic records.
pub const SELECTIVITY_POINTS: [u32; 7] = [1, 5, 10, 25, 50, 75, 100];

/// Substring of `str0` carried by exactly those synthetic records whose
/// selectivity draw falls below `percent`.
pub fn selectivity_pattern(percent: u32) -> Option<String> {
    let j = SELECTIVITY_POINTS.iter().position(|&p| p == percent)?;
    Some(format!("#{}", "s".repeat(SELECTIVITY_POINTS.len() - j)))
}

pub const SYNTHETIC_STRINGS: usize = 6;
pub const SYNTHETIC_INTS: usize = 6;
pub const SYNTHETIC_MAP_ENTRIES: usize = 10;

/// `str0..str5`, `int0..int5`, `map0` (string → int64).
pub fn synthetic_schema() -> Schema {
    let mut fields = Vec::new();
    for i in 0..SYNTHETIC_STRINGS {
        fields.push(Field::new(format!("str{i}"), FieldType::String));
    }
    for i in 0..SYNTHETIC_INTS {
        fields.push(Field::new(format!("int{i}"), FieldType::Int64));
    }
    fields.push(Field::new("map0", FieldType::map(FieldType::Int64)));
    Schema::new(fields).expect("static schema")
}

/// Six strings of 20–40 safe characters, six ints in [1, 10000] and a map
/// of ten random 4-character keys. `str0` starts with a selectivity tag
/// (`#`, one `s` per [`SELECTIVITY_POINTS`] level the record falls under,
/// `|`), included in its length.
pub struct Synthetic {
    rng: ChaCha8Rng,
    left: u64,
    schema: Arc<Schema>,
    alphabet: Vec<u8>,
}

impl Synthetic {
    pub fn new(records: u64, seed: u64) -> Self {
        Synthetic {
            rng: ChaCha8Rng::seed_from_u64(seed),
            left: records,
            schema: Arc::new(synthetic_schema()),
            alphabet: safe_alphabet(),
        }
    }
}

impl Iterator for Synthetic {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        let rng = &mut self.rng;
        let mut row = Vec::with_capacity(self.schema.len());
        for i in 0..SYNTHETIC_STRINGS {
            let len = rng.random_range(20..=40usize);
            let mut s = String::with_capacity(len);
            if i == 0 {
                let draw = rng.random_range(0..100u32);
                let levels = SELECTIVITY_POINTS.iter().filter(|&&p| draw < p).count();
                s.push('#');
                s.push_str(&"s".repeat(levels));
                s.push('|');
            }
            let rest = len - s.len();
            random_string(rng, &self.alphabet, rest, &mut s);
            row.push(Value::String(s));
        }
        for _ in 0..SYNTHETIC_INTS {
            row.push(Value::Int64(rng.random_range(1..=10_000)));
        }
        let keys = unique_keys(rng, &self.alphabet, SYNTHETIC_MAP_ENTRIES, 4);
        row.push(Value::Map(
            keys.into_iter()
                .map(|k| (k, Value::Int64(rng.random_range(1..=10_000))))
                .collect(),
        ));
        Some(row)
    }
}

impl Generator for Synthetic {
    fn schema(&self) -> Arc<Schema> {
        self.schema.clone()
    }
}

pub const CRAWL_PATTERN: &str = "ibm.com/jp";
pub const CONTENT_TYPE: &str = "content-type";
pub const DEFAULT_CONTENT_BYTES: usize = 4096;
pub const CONTENT_TYPES: [&str; 6] = [
    "text/html",
    "text/plain",
    "application/pdf",
    "application/xml",
    "image/jpeg",
    "text/css",
];
const METADATA_KEYS: [&str; 20] = [
    "server",
    "date",
    "last-modified",
    "etag",
    "content-length",
    "content-language",
    "content-encoding",
    "cache-control",
    "expires",
    "vary",
    "connection",
    "accept-ranges",
    "age",
    "via",
    "x-powered-by",
    "set-cookie",
    "location",
    "pragma",
    "keep-alive",
    "transfer-encoding",
];

/// `url`, `srcUrl`, `fetchTime`, `inlink`, `metadata`, `annotations`, `content`.
pub fn crawl_schema() -> Schema {
    Schema::new(vec![
        Field::new("url", FieldType::String),
        Field::new("srcUrl", FieldType::String),
        Field::new("fetchTime", FieldType::Int64),
        Field::new("inlink", FieldType::array(FieldType::String)),
        Field::new("metadata", FieldType::map(FieldType::String)),
        Field::new("annotations", FieldType::map(FieldType::String)),
        Field::new("content", FieldType::Bytes),
    ])
    .expect("static schema")
}

/// Crawl-like records. Exactly `round(match_fraction × records)` urls
/// contain [`CRAWL_PATTERN`], chosen by sequential selection sampling.
pub struct Crawl {
    rng: ChaCha8Rng,
    total: u64,
    done: u64,
    matches_left: u64,
    content_bytes: usize,
    schema: Arc<Schema>,
}

impl Crawl {
    pub fn new(records: u64, match_fraction: f64, content_bytes: usize, seed: u64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&match_fraction) {
            return Err(Error::Usage(format!(
                "match fraction {match_fraction} outside [0, 1]"
            )));
        }
        Ok(Crawl {
            rng: ChaCha8Rng::seed_from_u64(seed),
            total: records,
            done: 0,
            matches_left: (match_fraction * records as f64).round() as u64,
            content_bytes,
            schema: Arc::new(crawl_schema()),
        })
    }

    pub fn match_count(records: u64, match_fraction: f64) -> u64 {
        (match_fraction * records as f64).round() as u64
    }

    fn other_url(rng: &mut ChaCha8Rng) -> String {
        let host = random_word(rng, 5, 12);
        let tld = if rng.random_bool(0.5) { "org" } else { "com" };
        format!("http://www.{host}.{tld}/{}", rng.random_range(0..1_000_000u32))
    }
}

impl Iterator for Crawl {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        if self.done == self.total {
            return None;
        }
        let remaining = self.total - self.done;
        self.done += 1;
        let rng = &mut self.rng;
        let is_match = rng.random_range(0..remaining) < self.matches_left;
        let url = if is_match {
            self.matches_left -= 1;
            format!("http://www.{CRAWL_PATTERN}/{}", rng.random_range(0..1_000_000u32))
        } else {
            Self::other_url(rng)
        };
        let src = Self::other_url(rng);
        let fetch_time = rng.random_range(1_200_000_000..1_300_000_000i64);
        let inlinks = (0..rng.random_range(0..=20))
            .map(|_| Value::String(Self::other_url(rng)))
            .collect();
        let mut metadata = vec![(
            CONTENT_TYPE.to_owned(),
            Value::String(CONTENT_TYPES[rng.random_range(0..CONTENT_TYPES.len())].to_owned()),
        )];
        let extra = rng.random_range(5..=15);
        let mut keys: Vec<&str> = METADATA_KEYS.to_vec();
        for i in 0..extra {
            let j = rng.random_range(i..keys.len());
            keys.swap(i, j);
            metadata.push((keys[i].to_owned(), Value::String(random_word(rng, 3, 16))));
        }
        let annotations = (0..rng.random_range(0..=4))
            .map(|i| (format!("note{i}"), Value::String(random_word(rng, 4, 12))))
            .collect();
        let mut content = vec![0u8; self.content_bytes];
        rng.fill_bytes(&mut content);
        Some(vec![
            Value::String(url),
            Value::String(src),
            Value::Int64(fetch_time),
            Value::Array(inlinks),
            Value::Map(metadata),
            Value::Map(annotations),
            Value::Bytes(content),
        ])
    }
}

impl Generator for Crawl {
    fn schema(&self) -> Arc<Schema> {
        self.schema.clone()
    }
}

pub const WIDE_VALUE_LEN: usize = 30;
pub const WIDE_WIDTHS: [usize; 3] = [20, 40, 80];

pub fn wide_schema(columns: usize) -> Schema {
    Schema::new(
        (0..columns)
            .map(|i| Field::new(format!("col{i}"), FieldType::String))
            .collect(),
    )
    .expect("generated names are valid")
}

/// All-string records of `columns` 30-character values, as many as fit
/// in `total_bytes` of plain encoding.
pub struct Wide {
    rng: ChaCha8Rng,
    left: u64,
    columns: usize,
    schema: Arc<Schema>,
    alphabet: Vec<u8>,
}

impl Wide {
    pub fn new(columns: usize, total_bytes: u64, seed: u64) -> Result<Self, Error> {
        if columns == 0 {
            return Err(Error::Usage("wide datasets need at least one column".into()));
        }
        Ok(Wide {
            rng: ChaCha8Rng::seed_from_u64(seed),
            left: Self::records_for(columns, total_bytes),
            columns,
            schema: Arc::new(wide_schema(columns)),
            alphabet: safe_alphabet(),
        })
    }

    pub fn records_for(columns: usize, total_bytes: u64) -> u64 {
        total_bytes / (columns as u64 * (4 + WIDE_VALUE_LEN as u64))
    }
}

impl Iterator for Wide {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        Some(
            (0..self.columns)
                .map(|_| {
                    let mut s = String::with_capacity(WIDE_VALUE_LEN);
                    random_string(&mut self.rng, &self.alphabet, WIDE_VALUE_LEN, &mut s);
                    Value::String(s)
                })
                .collect(),
        )
    }
}

impl Generator for Wide {
    fn schema(&self) -> Arc<Schema> {
        self.schema.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypedKind {
    Int,
    Double,
    Map,
}

impl TypedKind {
    pub const ALL: [TypedKind; 3] = [TypedKind::Int, TypedKind::Double, TypedKind::Map];

    fn element_type(self) -> FieldType {
        match self {
            TypedKind::Int => FieldType::Int64,
            TypedKind::Double => FieldType::Double,
            TypedKind::Map => FieldType::map(FieldType::Int64),
        }
    }

    /// Plain-encoded size of one typed element.
    pub fn element_bytes(self) -> usize {
        match self {
            TypedKind::Int | TypedKind::Double => 8,
            TypedKind::Map => 4 + DESER_MAP_ENTRIES * (4 + 4 + 8),
        }
    }
}

impl fmt::Display for TypedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypedKind::Int => "int",
            TypedKind::Double => "double",
            TypedKind::Map => "map",
        })
    }
}

impl FromStr for TypedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "int" | "int64" => Ok(TypedKind::Int),
            "double" => Ok(TypedKind::Double),
            "map" => Ok(TypedKind::Map),
            other => Err(Error::Usage(format!("unknown typed kind `{other}`"))),
        }
    }
}

pub const DESER_RECORD_BYTES: usize = 1000;
pub const DESER_MAP_ENTRIES: usize = 4;
/// Record bytes left after the two fields' length prefixes.
const DESER_BUDGET: usize = DESER_RECORD_BYTES - 8;

pub fn deser_schema(kind: TypedKind) -> Schema {
    Schema::new(vec![
        Field::new("typed", FieldType::array(kind.element_type())),
        Field::new("filler", FieldType::Bytes),
    ])
    .expect("static schema")
}

/// Records of exactly 1000 plain-encoded bytes: an array of typed elements
/// filling about `typed_fraction` of the record and a bytes filler.
pub struct DeserBench {
    rng: ChaCha8Rng,
    left: u64,
    kind: TypedKind,
    elements: usize,
    filler: usize,
    schema: Arc<Schema>,
    alphabet: Vec<u8>,
}

impl DeserBench {
    pub fn new(records: u64, typed_fraction: f64, kind: TypedKind, seed: u64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&typed_fraction) {
            return Err(Error::Usage(format!(
                "typed fraction {typed_fraction} outside [0, 1]"
            )));
        }
        let elements = (typed_fraction * DESER_BUDGET as f64 / kind.element_bytes() as f64) as usize;
        Ok(DeserBench {
            rng: ChaCha8Rng::seed_from_u64(seed),
            left: records,
            kind,
            elements,
            filler: DESER_BUDGET - elements * kind.element_bytes(),
            schema: Arc::new(deser_schema(kind)),
            alphabet: safe_alphabet(),
        })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }
}

impl Iterator for DeserBench {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        let rng = &mut self.rng;
        let typed = (0..self.elements)
            .map(|_| match self.kind {
                TypedKind::Int => Value::Int64(rng.random()),
                TypedKind::Double => Value::Double(rng.random()),
                TypedKind::Map => Value::Map(
                    unique_keys(rng, &self.alphabet, DESER_MAP_ENTRIES, 4)
                        .into_iter()
                        .map(|k| (k, Value::Int64(rng.random())))
                        .collect(),
                ),
            })
            .collect();
        let mut filler = vec![0u8; self.filler];
        rng.fill_bytes(&mut filler);
        Some(vec![Value::Array(typed), Value::Bytes(filler)])
    }
}

impl Generator for DeserBench {
    fn schema(&self) -> Arc<Schema> {
        self.schema.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use colgrove_core::encoding::encoded_len;

    fn plain_size(schema: &Schema, row: &[Value]) -> usize {
        row.iter()
            .zip(schema.fields())
            .map(|(v, _)| encoded_len(v))
            .sum()
    }

    #[test]
    fn synthetic_records_validate_and_are_seeded() {
        let g = Synthetic::new(200, 7);
        let schema = g.schema();
        let a: Vec<_> = g.collect();
        for row in &a {
            crate::scan::check_row(&schema, row).unwrap();
            for v in &row[..SYNTHETIC_STRINGS] {
                let n = v.as_str().unwrap().len();
                assert!((20..=40).contains(&n));
            }
        }
        assert_eq!(a, Synthetic::new(200, 7).collect::<Vec<_>>());
        assert_ne!(a, Synthetic::new(200, 8).collect::<Vec<_>>());
    }

    #[test]
    fn selectivity_tags_nest() {
        for row in Synthetic::new(2000, 1) {
            let s = row[0].as_str().unwrap();
            let hits: Vec<bool> = SELECTIVITY_POINTS
                .iter()
                .map(|&p| s.contains(&selectivity_pattern(p).unwrap()))
                .collect();
            assert!(hits[SELECTIVITY_POINTS.len() - 1]);
            for w in hits.windows(2) {
                assert!(!w[0] || w[1]);
            }
        }
    }

    #[test]
    fn crawl_match_count_is_exact() {
        for (n, f) in [(1000u64, 0.06), (999, 0.5), (10, 0.0), (10, 1.0)] {
            let matches = Crawl::new(n, f, 16, 3)
                .unwrap()
                .filter(|r| r[0].as_str().unwrap().contains(CRAWL_PATTERN))
                .count() as u64;
            assert_eq!(matches, Crawl::match_count(n, f));
        }
    }

    #[test]
    fn deser_records_are_exactly_one_kilobyte() {
        for kind in TypedKind::ALL {
            for f in [0.0, 0.3, 1.0] {
                let g = DeserBench::new(3, f, kind, 1).unwrap();
                let schema = g.schema();
                for row in g {
                    assert_eq!(plain_size(&schema, &row), DESER_RECORD_BYTES);
                }
            }
        }
    }

    #[test]
    fn wide_record_count_follows_encoding() {
        assert_eq!(Wide::records_for(20, 20 * 34 * 10 + 5), 10);
        let g = Wide::new(3, 3 * 34 * 4, 1).unwrap();
        let rows: Vec<_> = g.collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().flatten().all(|v| v.as_str().unwrap().len() == WIDE_VALUE_LEN));
    }
}

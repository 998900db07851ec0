//! Typed record model: field types, schemas, values and the get-by-name
//! record abstraction shared by every storage format.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Top-level kind of a [`FieldType`] or [`Value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Int64,
    Double,
    String,
    Bytes,
    Array,
    Map,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Int64 => "int64",
            Kind::Double => "double",
            Kind::String => "string",
            Kind::Bytes => "bytes",
            Kind::Array => "array",
            Kind::Map => "map",
        })
    }
}

/// Type of a schema field. Map keys are always strings; the boxed type of a
/// `Map` is the value type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldType {
    Int64,
    Double,
    String,
    Bytes,
    Array(Box<FieldType>),
    Map(Box<FieldType>),
}

impl FieldType {
    pub fn array(element: FieldType) -> Self {
        FieldType::Array(Box::new(element))
    }

    pub fn map(value: FieldType) -> Self {
        FieldType::Map(Box::new(value))
    }

    pub fn kind(&self) -> Kind {
        match self {
            FieldType::Int64 => Kind::Int64,
            FieldType::Double => Kind::Double,
            FieldType::String => Kind::String,
            FieldType::Bytes => Kind::Bytes,
            FieldType::Array(_) => Kind::Array,
            FieldType::Map(_) => Kind::Map,
        }
    }

    /// Encoded width for fixed-size types.
    pub fn fixed_width(&self) -> Option<u64> {
        match self {
            FieldType::Int64 | FieldType::Double => Some(8),
            _ => None,
        }
    }

    pub fn is_primitive(&self) -> bool {
        !matches!(self, FieldType::Array(_) | FieldType::Map(_))
    }
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldType::Array(e) => write!(f, "array<{e}>"),
            FieldType::Map(v) => write!(f, "map<{v}>"),
            other => write!(f, "{}", other.kind()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub ty: FieldType,
}

impl Field {
    pub fn new(name: impl Into<String>, ty: FieldType) -> Self {
        Field {
            name: name.into(),
            ty,
        }
    }
}

/// An ordered list of uniquely named fields. Order defines serialization
/// order and column-file ordinals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Schema {
    fields: Vec<Field>,
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Schema {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &fields {
            if !is_valid_name(&f.name) {
                return Err(Error::InvalidName(f.name.clone()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::DuplicateField(f.name.clone()));
            }
        }
        Ok(Schema { fields })
    }

    /// Parses the line-oriented schema text (`name:type` per line, `#`
    /// comments, blank lines ignored).
    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            let trimmed = line.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let lead = line.len() - trimmed.len();
            let Some(colon) = trimmed.find(':') else {
                return Err(Error::Syntax {
                    line: line_no,
                    column: lead + trimmed.len() + 1,
                    message: "expected `:` after field name".to_owned(),
                });
            };
            let name = trimmed[..colon].trim_end();
            if !is_valid_name(name) {
                return Err(Error::Syntax {
                    line: line_no,
                    column: lead + 1,
                    message: format!("invalid field name `{name}`"),
                });
            }
            let mut parser = TypeParser {
                text: line,
                pos: lead + colon + 1,
                line: line_no,
            };
            parser.skip_ws();
            let ty = parser.parse_type()?;
            parser.skip_ws();
            if parser.pos != line.len() {
                return Err(parser.syntax("unexpected trailing input"));
            }
            if !seen.insert(name.to_owned()) {
                return Err(Error::DuplicateField(name.to_owned()));
            }
            fields.push(Field::new(name, ty));
        }
        Ok(Schema { fields })
    }

    /// Canonical rendering: one `name:type` line per field.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.fields {
            out.push_str(&f.name);
            out.push(':');
            out.push_str(&f.ty.to_string());
            out.push('\n');
        }
        out
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Returns a copy extended with one more field at the end.
    pub fn with_field(&self, field: Field) -> Result<Self> {
        let mut fields = self.fields.clone();
        fields.push(field);
        Schema::new(fields)
    }

    /// Sub-schema holding `names` in the given order. An empty list means
    /// every field.
    pub fn project(&self, names: &[String]) -> Result<Self> {
        if names.is_empty() {
            return Ok(self.clone());
        }
        let mut fields = Vec::with_capacity(names.len());
        let mut seen = BTreeSet::new();
        for n in names {
            let f = self
                .field(n)
                .ok_or_else(|| Error::UnknownField(n.clone()))?;
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateField(n.clone()));
            }
            fields.push(f.clone());
        }
        Ok(Schema { fields })
    }
}

struct TypeParser<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl TypeParser<'_> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            line: self.line,
            column: self.pos + 1,
            message: message.to_owned(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{c}`")))
        }
    }

    fn parse_type(&mut self) -> Result<FieldType> {
        self.skip_ws();
        let start = self.pos;
        let word_len = self.text[start..]
            .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .unwrap_or(self.text.len() - start);
        if word_len == 0 {
            return Err(self.syntax("expected a type"));
        }
        let word = &self.text[start..start + word_len];
        self.pos += word_len;
        let ty = match word {
            "int64" => FieldType::Int64,
            "double" => FieldType::Double,
            "string" => FieldType::String,
            "bytes" => FieldType::Bytes,
            "array" | "map" => {
                self.expect('<')?;
                let inner = self.parse_type()?;
                self.expect('>')?;
                if word == "array" {
                    FieldType::array(inner)
                } else {
                    FieldType::map(inner)
                }
            }
            other => {
                return Err(Error::UnknownType {
                    line: self.line,
                    column: start + 1,
                    keyword: other.to_owned(),
                })
            }
        };
        Ok(ty)
    }
}

/// A typed value. Map entries keep insertion order.
#[derive(Debug, Clone)]
pub enum Value {
    Int64(i64),
    Double(f64),
    String(String),
    Bytes(Vec<u8>),
    Array(Vec<Value>),
    Map(Vec<(String, Value)>),
}

// Doubles compare by bit pattern so that round-trip checks are exact.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int64(a), Value::Int64(b)) => a == b,
            (Value::Double(a), Value::Double(b)) => a.to_bits() == b.to_bits(),
            (Value::String(a), Value::String(b)) => a == b,
            (Value::Bytes(a), Value::Bytes(b)) => a == b,
            (Value::Array(a), Value::Array(b)) => a == b,
            (Value::Map(a), Value::Map(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Int64(_) => Kind::Int64,
            Value::Double(_) => Kind::Double,
            Value::String(_) => Kind::String,
            Value::Bytes(_) => Kind::Bytes,
            Value::Array(_) => Kind::Array,
            Value::Map(_) => Kind::Map,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int64(v) => Some(*v),
            _ => None,
        }
    }

    /// Looks up a key in a map value.
    pub fn map_get(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Map(entries) => entries.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Checks that the value's shape matches `ty`, descending into
    /// containers. `path` names the location for error messages.
    pub fn check(&self, ty: &FieldType, path: &str) -> Result<()> {
        let mismatch = || Error::TypeMismatch {
            field: path.to_owned(),
            expected: ty.kind(),
            actual: self.kind(),
        };
        match (self, ty) {
            (Value::Int64(_), FieldType::Int64)
            | (Value::Double(_), FieldType::Double)
            | (Value::String(_), FieldType::String)
            | (Value::Bytes(_), FieldType::Bytes) => Ok(()),
            (Value::Array(items), FieldType::Array(elem)) => {
                items.iter().try_for_each(|v| v.check(elem, path))
            }
            (Value::Map(entries), FieldType::Map(val)) => {
                let mut keys = BTreeSet::new();
                for (k, v) in entries {
                    if !keys.insert(k.as_str()) {
                        return Err(Error::DuplicateKey(k.clone()));
                    }
                    v.check(val, path)?;
                }
                Ok(())
            }
            _ => Err(mismatch()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int64(v) => write!(f, "{v}"),
            Value::Double(v) => write!(f, "{v}"),
            Value::String(s) => f.write_str(s),
            Value::Bytes(b) => {
                for byte in b {
                    write!(f, "{byte:02x}")?;
                }
                Ok(())
            }
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Map(entries) => {
                f.write_str("{")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Validates a bag of named values against a schema: every schema field
/// present exactly once with a matching value and nothing else.
pub fn validate<'a, I>(fields: I, schema: &Schema) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a Value)>,
{
    let mut seen = BTreeSet::new();
    for (name, value) in fields {
        let field = schema
            .field(name)
            .ok_or_else(|| Error::UnknownField(name.to_owned()))?;
        if !seen.insert(name) {
            return Err(Error::DuplicateField(name.to_owned()));
        }
        value.check(&field.ty, name)?;
    }
    if let Some(missing) = schema.fields().iter().find(|f| !seen.contains(f.name.as_str())) {
        return Err(Error::MissingField(missing.name.clone()));
    }
    Ok(())
}

/// Generic get-by-name access to one record.
pub trait Record {
    fn schema(&self) -> &Schema;
    fn get(&mut self, name: &str) -> Result<&Value>;
}

/// A fully materialized record whose values follow schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnedRecord {
    schema: Arc<Schema>,
    values: Vec<Value>,
}

impl OwnedRecord {
    /// Builds a record from values in schema order, checking types.
    pub fn new(schema: Arc<Schema>, values: Vec<Value>) -> Result<Self> {
        if values.len() != schema.len() {
            let missing = schema
                .fields()
                .get(values.len())
                .map(|f| f.name.clone())
                .unwrap_or_default();
            return Err(Error::MissingField(missing));
        }
        for (f, v) in schema.fields().iter().zip(&values) {
            v.check(&f.ty, &f.name)?;
        }
        Ok(OwnedRecord { schema, values })
    }

    /// Builds a record without type checks; used by decoders whose output is
    /// typed by construction.
    pub fn from_decoded(schema: Arc<Schema>, values: Vec<Value>) -> Self {
        debug_assert_eq!(schema.len(), values.len());
        OwnedRecord { schema, values }
    }

    /// Builds a record from named values in any order.
    pub fn from_pairs<'a, I>(schema: Arc<Schema>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, Value)>,
    {
        let pairs: Vec<(&str, Value)> = pairs.into_iter().collect();
        validate(pairs.iter().map(|(n, v)| (*n, v)), &schema)?;
        let mut slots: Vec<Option<Value>> = (0..schema.len()).map(|_| None).collect();
        for (name, value) in pairs {
            let idx = schema.index_of(name).expect("validated");
            slots[idx] = Some(value);
        }
        let values = slots.into_iter().map(|v| v.expect("validated")).collect();
        Ok(OwnedRecord { schema, values })
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Value> {
        self.values
    }

    pub fn value(&self, name: &str) -> Result<&Value> {
        self.schema
            .index_of(name)
            .map(|i| &self.values[i])
            .ok_or_else(|| Error::UnknownField(name.to_owned()))
    }
}

impl Record for OwnedRecord {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn get(&mut self, name: &str) -> Result<&Value> {
        self.value(name)
    }
}

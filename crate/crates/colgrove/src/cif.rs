//! Split-directory column datasets.
//!
//! ```text
//! <dataset>/s<k>/schema
//! <dataset>/s<k>/c<ordinal>_<field>
//! ```
//!
//! Records are partitioned horizontally in arrival order. A split closes
//! once its buffered plain-encoded bytes reach the split target. Every split
//! directory carries its own copy of the schema.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use colgrove_core::column::HEADER_LEN;
use colgrove_core::{
    ColumnFileHeader, ColumnLayout, ColumnReader, ColumnWriter, Error as CoreError, FieldType,
    Locality, Materialization, Schema, SplitCursor, Value,
};

use crate::error::{Error, IoContext, Result};
use crate::io::{write_file, FileSource, ReadOptions};
use crate::scan::{check_row, RecordSink, WriteSummary};

pub const SCHEMA_FILE: &str = "schema";
pub const DEFAULT_SPLIT_TARGET: u64 = 64 << 20;
pub const MIN_SPLIT_TARGET: u64 = 1 << 20;
const STAGING_PREFIX: &str = ".staging-";

pub fn column_file_name(ordinal: usize, field: &str) -> String {
    format!("c{ordinal}_{field}")
}

pub fn split_dir_name(index: u64) -> String {
    format!("s{index}")
}

fn parse_split_index(name: &str) -> Option<u64> {
    let digits = name.strip_prefix('s')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Per-field column layouts. A default applies to every field it can hold;
/// fields it cannot hold (dcsl on a non-map) fall back to plain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LayoutPlan {
    pub default: ColumnLayout,
    pub per_field: BTreeMap<String, ColumnLayout>,
}

impl LayoutPlan {
    pub fn uniform(layout: ColumnLayout) -> Self {
        LayoutPlan {
            default: layout,
            per_field: BTreeMap::new(),
        }
    }

    pub fn with_field(mut self, name: &str, layout: ColumnLayout) -> Self {
        self.per_field.insert(name.to_owned(), layout);
        self
    }

    pub fn layout_for(&self, name: &str, ty: &FieldType) -> ColumnLayout {
        match self.per_field.get(name) {
            Some(l) => *l,
            None if self.default.supports(ty) => self.default,
            None => ColumnLayout::Plain,
        }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        for (name, layout) in &self.per_field {
            let f = schema
                .field(name)
                .ok_or_else(|| Error::Usage(format!("layout plan names unknown field `{name}`")))?;
            if !layout.supports(&f.ty) {
                return Err(Error::Usage(format!(
                    "layout {layout} cannot hold field `{name}` of type {}",
                    f.ty
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for LayoutPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.default)?;
        for (k, v) in &self.per_field {
            write!(f, ",{k}={v}")?;
        }
        Ok(())
    }
}

/// `layout[,field=layout...]`; a leading bare layout sets the default.
impl FromStr for LayoutPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut plan = LayoutPlan::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((field, layout)) => {
                    plan.per_field
                        .insert(field.trim().to_owned(), layout.parse().map_err(Error::Core)?);
                }
                None => plan.default = part.parse().map_err(Error::Core)?,
            }
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDirectory {
    pub path: PathBuf,
    pub index: u64,
    pub schema: Arc<Schema>,
    pub record_count: u64,
    /// One per schema field, in schema order.
    pub column_files: Vec<PathBuf>,
}

impl SplitDirectory {
    pub fn column_file(&self, field: &str) -> Option<&Path> {
        self.schema
            .index_of(field)
            .map(|i| self.column_files[i].as_path())
    }

    /// Total bytes of the named columns' files (all columns when empty).
    pub fn column_bytes(&self, fields: &[String]) -> Result<u64> {
        let paths: Vec<&Path> = if fields.is_empty() {
            self.column_files.iter().map(PathBuf::as_path).collect()
        } else {
            fields
                .iter()
                .map(|f| {
                    self.column_file(f)
                        .ok_or_else(|| Error::Core(CoreError::UnknownField(f.clone())))
                })
                .collect::<Result<_>>()?
        };
        paths
            .into_iter()
            .map(|p| Ok(fs::metadata(p).at(p)?.len()))
            .sum()
    }
}

/// Streaming writer producing split directories.
pub struct CofWriter {
    dataset: PathBuf,
    schema: Arc<Schema>,
    plan: LayoutPlan,
    split_target: u64,
    writers: Vec<ColumnWriter>,
    in_split: u64,
    splits: Vec<SplitDirectory>,
    count: u64,
    bytes: u64,
}

impl CofWriter {
    /// `dataset` must not exist yet or be an empty directory.
    pub fn create(
        dataset: &Path,
        schema: Arc<Schema>,
        plan: LayoutPlan,
        split_target: u64,
    ) -> Result<Self> {
        if split_target < MIN_SPLIT_TARGET {
            return Err(Error::Usage(format!(
                "split target must be at least {MIN_SPLIT_TARGET} bytes"
            )));
        }
        plan.validate(&schema)?;
        if dataset.exists() && fs::read_dir(dataset).at(dataset)?.next().is_some() {
            return Err(Error::Usage(format!(
                "{} already exists and is not empty",
                dataset.display()
            )));
        }
        fs::create_dir_all(dataset).at(dataset)?;
        let writers = Self::fresh_writers(&schema, &plan)?;
        Ok(CofWriter {
            dataset: dataset.to_path_buf(),
            schema,
            plan,
            split_target,
            writers,
            in_split: 0,
            splits: Vec::new(),
            count: 0,
            bytes: 0,
        })
    }

    fn fresh_writers(schema: &Schema, plan: &LayoutPlan) -> Result<Vec<ColumnWriter>> {
        schema
            .fields()
            .iter()
            .map(|f| Ok(ColumnWriter::new(f.ty.clone(), plan.layout_for(&f.name, &f.ty))?))
            .collect()
    }

    fn flush_split(&mut self) -> Result<()> {
        let index = self.splits.len() as u64;
        let dir = self.dataset.join(split_dir_name(index));
        fs::create_dir_all(&dir).at(&dir)?;
        write_file(&dir.join(SCHEMA_FILE), self.schema.to_text().as_bytes())?;
        let writers = std::mem::replace(&mut self.writers, Self::fresh_writers(&self.schema, &self.plan)?);
        let mut column_files = Vec::with_capacity(writers.len());
        for (i, (w, f)) in writers.into_iter().zip(self.schema.fields()).enumerate() {
            let path = dir.join(column_file_name(i, &f.name));
            let bytes = w.finish()?;
            self.bytes += bytes.len() as u64;
            write_file(&path, &bytes)?;
            column_files.push(path);
        }
        self.splits.push(SplitDirectory {
            path: dir,
            index,
            schema: self.schema.clone(),
            record_count: self.in_split,
            column_files,
        });
        self.in_split = 0;
        Ok(())
    }

    pub fn splits(&self) -> &[SplitDirectory] {
        &self.splits
    }

    pub fn finish_splits(mut self) -> Result<Vec<SplitDirectory>> {
        if self.in_split > 0 || self.splits.is_empty() {
            self.flush_split()?;
        }
        Ok(self.splits)
    }
}

impl RecordSink for CofWriter {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    fn write(&mut self, values: &[Value]) -> Result<()> {
        check_row(&self.schema, values)?;
        for (w, v) in self.writers.iter_mut().zip(values) {
            w.push(v)?;
        }
        self.in_split += 1;
        self.count += 1;
        let buffered: u64 = self.writers.iter().map(ColumnWriter::plain_bytes).sum();
        if buffered >= self.split_target {
            self.flush_split()?;
        }
        Ok(())
    }

    fn finish(self: Box<Self>) -> Result<WriteSummary> {
        let records = self.count;
        let mut me = *self;
        if me.in_split > 0 || me.splits.is_empty() {
            me.flush_split()?;
        }
        Ok(WriteSummary {
            records,
            units: me.splits.len() as u64,
            bytes: me.bytes,
        })
    }
}

fn read_header(path: &Path) -> Result<ColumnFileHeader> {
    let mut f = fs::File::open(path).at(path)?;
    let mut buf = [0u8; HEADER_LEN as usize];
    f.read_exact(&mut buf)
        .map_err(|_| Error::structure(path, "column file shorter than its header"))?;
    ColumnFileHeader::decode(&buf).at(path)
}

/// Reads a split directory's schema.
pub fn read_schema(dir: &Path) -> Result<Schema> {
    let path = dir.join(SCHEMA_FILE);
    if !path.is_file() {
        return Err(Error::structure(&path, "missing schema file"));
    }
    let text = fs::read_to_string(&path).at(&path)?;
    Schema::parse(&text).at(&path)
}

/// Validates and describes one split directory. Only the schema file and
/// the 14-byte column headers are read.
pub fn open_split_dir(dir: &Path, index: u64) -> Result<SplitDirectory> {
    let schema = Arc::new(read_schema(dir)?);
    let mut present: Vec<String> = Vec::new();
    for entry in fs::read_dir(dir).at(dir)? {
        let entry = entry.at(dir)?;
        present.push(entry.file_name().to_string_lossy().into_owned());
    }
    let expected: Vec<String> = schema
        .fields()
        .iter()
        .enumerate()
        .map(|(i, f)| column_file_name(i, &f.name))
        .collect();
    for name in &expected {
        if !present.contains(name) {
            return Err(Error::structure(dir.join(name), "missing column file"));
        }
    }
    if let Some(extra) = present
        .iter()
        .find(|n| n.as_str() != SCHEMA_FILE && !expected.contains(n))
    {
        return Err(Error::structure(dir.join(extra), "unexpected file in split directory"));
    }
    let column_files: Vec<PathBuf> = expected.iter().map(|n| dir.join(n)).collect();
    let mut record_count = None;
    for p in &column_files {
        let h = read_header(p)?;
        match record_count {
            None => record_count = Some(h.record_count),
            Some(n) if n != h.record_count => {
                return Err(Error::structure(
                    p,
                    format!("holds {} records, sibling columns hold {n}", h.record_count),
                ))
            }
            Some(_) => {}
        }
    }
    Ok(SplitDirectory {
        path: dir.to_path_buf(),
        index,
        schema,
        record_count: record_count.unwrap_or(0),
        column_files,
    })
}

/// Lists a dataset's split directories in index order.
pub fn cif_splits(dataset: &Path) -> Result<Vec<SplitDirectory>> {
    let mut indices = Vec::new();
    for entry in fs::read_dir(dataset).at(dataset)? {
        let entry = entry.at(dataset)?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(i) = parse_split_index(&name) {
            if entry.file_type().at(dataset)?.is_dir() {
                indices.push((i, entry.path()));
            }
        }
    }
    indices.sort();
    for (expect, (i, p)) in indices.iter().enumerate() {
        if *i != expect as u64 {
            return Err(Error::structure(
                p,
                format!("split indices are not dense: expected s{expect}"),
            ));
        }
    }
    indices
        .into_iter()
        .map(|(i, p)| open_split_dir(&p, i))
        .collect()
}

/// Opens a cursor over the projected columns of one split. Unprojected
/// column files are never opened.
pub fn cif_open(
    split: &SplitDirectory,
    projection: &[String],
    mode: Materialization,
    opts: &ReadOptions,
) -> Result<SplitCursor<FileSource>> {
    cif_open_with_locality(split, projection, mode, opts, |_| Ok(Locality::Local))
}

/// [`cif_open`] with each column file's reads tagged by `locality`.
pub fn cif_open_with_locality<F>(
    split: &SplitDirectory,
    projection: &[String],
    mode: Materialization,
    opts: &ReadOptions,
    mut locality: F,
) -> Result<SplitCursor<FileSource>>
where
    F: FnMut(&Path) -> Result<Locality>,
{
    let projected = Arc::new(split.schema.project(projection).at(&split.path)?);
    let mut readers = Vec::with_capacity(projected.len());
    for f in projected.fields() {
        let path = split.column_file(&f.name).expect("projected from split schema");
        let src = opts.open(path)?.with_locality(locality(path)?);
        let r = ColumnReader::open_with_ladder(src, f.ty.clone(), opts.skip_ladder).at(path)?;
        if r.record_count() != split.record_count {
            return Err(Error::structure(
                path,
                format!(
                    "holds {} records, split holds {}",
                    r.record_count(),
                    split.record_count
                ),
            ));
        }
        readers.push(r);
    }
    Ok(SplitCursor::new(projected, readers, mode)
        .at(&split.path)?
        .with_record_count(split.record_count))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddColumnReport {
    pub schema: Schema,
    pub files_created: Vec<PathBuf>,
    pub schema_files_rewritten: u64,
    /// Bytes of existing column files read while validating (headers only).
    pub existing_bytes_read: u64,
}

/// Appends a column to every split directory. `values[k]` holds split `k`'s
/// values. Existing column files are neither rewritten nor read beyond
/// their headers. All new files are staged before any becomes visible; on a
/// validation or staging failure the dataset is left unchanged.
pub fn add_column(
    dataset: &Path,
    name: &str,
    ty: FieldType,
    layout: ColumnLayout,
    values: &[Vec<Value>],
) -> Result<AddColumnReport> {
    let splits = cif_splits(dataset)?;
    let headers_read = splits
        .iter()
        .map(|s| s.column_files.len() as u64 * HEADER_LEN)
        .sum();
    if splits.is_empty() {
        return Err(Error::Usage(format!("{} has no splits", dataset.display())));
    }
    if !layout.supports(&ty) {
        return Err(Error::Usage(format!("layout {layout} cannot hold type {ty}")));
    }
    if values.len() != splits.len() {
        return Err(Error::Usage(format!(
            "{} value lists for {} splits",
            values.len(),
            splits.len()
        )));
    }
    let field = colgrove_core::Field::new(name, ty.clone());
    let mut staged: Vec<(PathBuf, PathBuf, Vec<u8>)> = Vec::with_capacity(splits.len());
    let mut schemas = Vec::with_capacity(splits.len());
    for (split, vals) in splits.iter().zip(values) {
        let schema = split.schema.with_field(field.clone()).at(&split.path)?;
        if vals.len() as u64 != split.record_count {
            return Err(Error::Usage(format!(
                "{}: {} values for {} records",
                split.path.display(),
                vals.len(),
                split.record_count
            )));
        }
        let mut w = ColumnWriter::new(ty.clone(), layout)?;
        for v in vals {
            v.check(&ty, name)?;
            w.push(v)?;
        }
        let file_name = column_file_name(split.schema.len(), name);
        let final_path = split.path.join(&file_name);
        let stage_path = split.path.join(format!("{STAGING_PREFIX}{file_name}"));
        staged.push((stage_path, final_path, w.finish()?));
        schemas.push(schema);
    }
    let cleanup = |staged: &[(PathBuf, PathBuf, Vec<u8>)]| {
        for (s, _, _) in staged {
            let _ = fs::remove_file(s);
        }
    };
    for (stage, _, bytes) in &staged {
        if let Err(e) = write_file(stage, bytes) {
            cleanup(&staged);
            return Err(e);
        }
    }
    for (split, schema) in splits.iter().zip(&schemas) {
        let stage = split.path.join(format!("{STAGING_PREFIX}{SCHEMA_FILE}"));
        if let Err(e) = write_file(&stage, schema.to_text().as_bytes()) {
            cleanup(&staged);
            for s in &splits {
                let _ = fs::remove_file(s.path.join(format!("{STAGING_PREFIX}{SCHEMA_FILE}")));
            }
            return Err(e);
        }
    }
    let mut files_created = Vec::with_capacity(staged.len());
    for ((stage, final_path, _), split) in staged.iter().zip(&splits) {
        fs::rename(stage, final_path).at(final_path)?;
        let schema_stage = split.path.join(format!("{STAGING_PREFIX}{SCHEMA_FILE}"));
        let schema_path = split.path.join(SCHEMA_FILE);
        fs::rename(&schema_stage, &schema_path).at(&schema_path)?;
        files_created.push(final_path.clone());
    }
    Ok(AddColumnReport {
        schema: schemas.into_iter().next().expect("at least one split"),
        schema_files_rewritten: splits.len() as u64,
        files_created,
        existing_bytes_read: headers_read,
    })
}

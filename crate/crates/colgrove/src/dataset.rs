//! Format-independent access to datasets: open splits, create writers,
//! convert between formats.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use colgrove_core::{CodecId, Materialization, Schema, Value};

use crate::cif::{self, CofWriter, LayoutPlan, SplitDirectory, DEFAULT_SPLIT_TARGET};
use crate::error::{Error, IoContext, Result};
use crate::io::{schema_sidecar, ReadOptions};
use crate::pax::{PaxConfig, PaxReader, PaxWriter};
use crate::scan::{current_values, RecordSink, RowCursor, ScanCursor, WriteSummary};
use crate::seq::{SeqReader, SeqVariant, SeqWriter};
use crate::txt::{TxtReader, TxtWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Format {
    Txt,
    Seq,
    Pax,
    Cif,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Txt, Format::Seq, Format::Pax, Format::Cif];
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Txt => "txt",
            Format::Seq => "seq",
            Format::Pax => "pax",
            Format::Cif => "cif",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "txt" | "text" => Ok(Format::Txt),
            "seq" => Ok(Format::Seq),
            "pax" | "rcfile" => Ok(Format::Pax),
            "cif" => Ok(Format::Cif),
            other => Err(Error::Usage(format!("unknown format `{other}`"))),
        }
    }
}

/// Writer parameters for every format; each format uses its own part.
#[derive(Debug, Clone)]
pub struct WriteConfig {
    pub seq: SeqVariant,
    pub pax: PaxConfig,
    pub plan: LayoutPlan,
    pub split_target: u64,
}

impl Default for WriteConfig {
    fn default() -> Self {
        WriteConfig {
            seq: SeqVariant::Uncompressed,
            pax: PaxConfig::default(),
            plan: LayoutPlan::default(),
            split_target: DEFAULT_SPLIT_TARGET,
        }
    }
}

impl WriteConfig {
    pub fn with_plan(plan: LayoutPlan) -> Self {
        WriteConfig {
            plan,
            ..Self::default()
        }
    }

    pub fn with_pax(rowgroup_target_bytes: u64, codec: CodecId) -> Self {
        WriteConfig {
            pax: PaxConfig {
                rowgroup_target_bytes,
                codec,
            },
            ..Self::default()
        }
    }
}

pub fn create_sink(
    path: &Path,
    format: Format,
    schema: Arc<Schema>,
    config: &WriteConfig,
) -> Result<Box<dyn RecordSink>> {
    Ok(match format {
        Format::Txt => Box::new(TxtWriter::create(path, schema)?),
        Format::Seq => Box::new(SeqWriter::create(path, schema, config.seq)?),
        Format::Pax => Box::new(PaxWriter::create(path, schema, config.pax)?),
        Format::Cif => Box::new(CofWriter::create(
            path,
            schema,
            config.plan.clone(),
            config.split_target,
        )?),
    })
}

/// Writes `rows` to a new dataset.
pub fn write_dataset<I>(
    path: &Path,
    format: Format,
    schema: Arc<Schema>,
    config: &WriteConfig,
    rows: I,
) -> Result<WriteSummary>
where
    I: IntoIterator<Item = Vec<Value>>,
{
    let mut sink = create_sink(path, format, schema, config)?;
    for row in rows {
        sink.write(&row)?;
    }
    sink.finish()
}

#[derive(Debug, Clone)]
enum Unit {
    File(PathBuf),
    Split(SplitDirectory),
}

/// An existing dataset and its splits. Single-file formats form one split.
#[derive(Debug, Clone)]
pub struct Dataset {
    path: PathBuf,
    format: Format,
    schema: Arc<Schema>,
    units: Vec<Unit>,
}

impl Dataset {
    pub fn open(path: &Path, format: Format) -> Result<Self> {
        match format {
            Format::Cif => {
                let splits = cif::cif_splits(path)?;
                let schema = match splits.first() {
                    Some(s) => s.schema.clone(),
                    None => {
                        return Err(Error::structure(path, "dataset has no split directories"))
                    }
                };
                if let Some(s) = splits.iter().find(|s| s.schema != schema) {
                    return Err(Error::structure(
                        &s.path,
                        "schema differs from the first split's schema",
                    ));
                }
                Ok(Dataset {
                    path: path.to_path_buf(),
                    format,
                    schema,
                    units: splits.into_iter().map(Unit::Split).collect(),
                })
            }
            _ => {
                let sidecar = schema_sidecar(path);
                let text = fs::read_to_string(&sidecar).at(&sidecar)?;
                let schema = Arc::new(Schema::parse(&text).at(&sidecar)?);
                if !path.is_file() {
                    return Err(Error::structure(path, "missing data file"));
                }
                Ok(Dataset {
                    path: path.to_path_buf(),
                    format,
                    schema,
                    units: vec![Unit::File(path.to_path_buf())],
                })
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn split_count(&self) -> usize {
        self.units.len()
    }

    pub fn cif_splits(&self) -> Vec<&SplitDirectory> {
        self.units
            .iter()
            .filter_map(|u| match u {
                Unit::Split(s) => Some(s),
                Unit::File(_) => None,
            })
            .collect()
    }

    pub fn record_count_hint(&self) -> Option<u64> {
        match self.format {
            Format::Cif => Some(self.cif_splits().iter().map(|s| s.record_count).sum()),
            _ => None,
        }
    }

    /// Total on-disk bytes of the data (sidecars excluded).
    pub fn data_bytes(&self) -> Result<u64> {
        self.units
            .iter()
            .map(|u| match u {
                Unit::File(p) => Ok(fs::metadata(p).at(p)?.len()),
                Unit::Split(s) => s.column_bytes(&[]),
            })
            .sum()
    }

    /// Opens split `index` for the given projection (empty = all fields).
    /// `mode` only affects column datasets; row formats always decode whole
    /// records.
    pub fn open_split(
        &self,
        index: usize,
        projection: &[String],
        mode: Materialization,
        opts: &ReadOptions,
    ) -> Result<Box<dyn ScanCursor>> {
        let projected = Arc::new(self.schema.project(projection)?);
        Ok(match &self.units[index] {
            Unit::Split(s) => Box::new(cif::cif_open(s, projection, mode, opts)?),
            Unit::File(p) => match self.format {
                Format::Txt => Box::new(RowCursor::new(
                    TxtReader::open(p, self.schema.clone(), opts)?,
                    projected,
                )?),
                Format::Seq => Box::new(RowCursor::new(
                    SeqReader::open(p, self.schema.clone(), opts)?,
                    projected,
                )?),
                Format::Pax => Box::new(RowCursor::new(
                    PaxReader::open(p, self.schema.clone(), projected.clone(), opts)?,
                    projected,
                )?),
                Format::Cif => unreachable!("CIF datasets hold split units"),
            },
        })
    }

    /// Reads every record in split order.
    pub fn read_all(&self, opts: &ReadOptions) -> Result<Vec<Vec<Value>>> {
        let mut out = Vec::new();
        for i in 0..self.split_count() {
            let mut c = self.open_split(i, &[], Materialization::Eager, opts)?;
            while c.advance()? {
                out.push(current_values(c.as_mut())?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadReport {
    pub summary: WriteSummary,
    pub load_time_secs: f64,
}

/// Streams every record of one dataset into a new dataset.
pub fn load(
    input: &Path,
    in_format: Format,
    output: &Path,
    out_format: Format,
    config: &WriteConfig,
) -> Result<LoadReport> {
    let start = Instant::now();
    let ds = Dataset::open(input, in_format)?;
    let mut sink = create_sink(output, out_format, ds.schema().clone(), config)?;
    let opts = ReadOptions::default();
    for i in 0..ds.split_count() {
        let mut c = ds.open_split(i, &[], Materialization::Eager, &opts)?;
        while c.advance()? {
            sink.write(&current_values(c.as_mut())?)?;
        }
    }
    let summary = sink.finish()?;
    Ok(LoadReport {
        summary,
        load_time_secs: start.elapsed().as_secs_f64(),
    })
}

//! Built-in scan jobs: a map phase over every split and an in-process
//! reduce.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use colgrove_core::encoding::encode_value;
use colgrove_core::{Error as CoreError, FieldType, Materialization, ScanMetrics, Schema, Value};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::io::ReadOptions;
use crate::scan::ScanCursor;
use crate::txt::render_value;

/// Map key meaning "every entry" for aggregation.
pub const ALL_KEYS: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JobKind {
    DistinctValue,
    MapAggregate,
    FullChecksum,
}

impl fmt::Display for JobKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JobKind::DistinctValue => "distinct",
            JobKind::MapAggregate => "aggregate",
            JobKind::FullChecksum => "checksum",
        })
    }
}

impl FromStr for JobKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "distinct" => Ok(JobKind::DistinctValue),
            "aggregate" => Ok(JobKind::MapAggregate),
            "checksum" => Ok(JobKind::FullChecksum),
            other => Err(Error::Usage(format!("unknown job `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSpec {
    pub kind: JobKind,
    pub predicate_column: String,
    /// Records match when the predicate column contains this substring.
    pub predicate_substring: String,
    pub target_column: String,
    /// For map-typed targets; [`ALL_KEYS`] aggregates every entry.
    pub target_map_key: Option<String>,
}

impl JobSpec {
    pub fn distinct(predicate: &str, pattern: &str, target: &str, map_key: Option<&str>) -> Self {
        JobSpec {
            kind: JobKind::DistinctValue,
            predicate_column: predicate.into(),
            predicate_substring: pattern.into(),
            target_column: target.into(),
            target_map_key: map_key.map(Into::into),
        }
    }

    pub fn aggregate(predicate: &str, pattern: &str, target: &str, map_key: &str) -> Self {
        JobSpec {
            kind: JobKind::MapAggregate,
            predicate_column: predicate.into(),
            predicate_substring: pattern.into(),
            target_column: target.into(),
            target_map_key: Some(map_key.into()),
        }
    }

    /// Checksums every projected field of every record.
    pub fn checksum() -> Self {
        JobSpec {
            kind: JobKind::FullChecksum,
            predicate_column: String::new(),
            predicate_substring: String::new(),
            target_column: String::new(),
            target_map_key: None,
        }
    }

    /// Columns the job reads, predicate first.
    pub fn columns(&self) -> Vec<String> {
        match self.kind {
            JobKind::FullChecksum => Vec::new(),
            _ if self.predicate_column == self.target_column => vec![self.target_column.clone()],
            _ => vec![self.predicate_column.clone(), self.target_column.clone()],
        }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.kind == JobKind::FullChecksum {
            return Ok(());
        }
        let field = |name: &str| {
            schema
                .field(name)
                .map(|f| &f.ty)
                .ok_or_else(|| Error::Usage(format!("job column `{name}` is not in the schema")))
        };
        if field(&self.predicate_column)? != &FieldType::String {
            return Err(Error::Usage(format!(
                "predicate column `{}` must be a string",
                self.predicate_column
            )));
        }
        let target = field(&self.target_column)?;
        match (self.kind, target) {
            (JobKind::MapAggregate, FieldType::Map(v)) if **v == FieldType::Int64 => {}
            (JobKind::MapAggregate, _) => {
                return Err(Error::Usage(format!(
                    "aggregate target `{}` must be a map of int64",
                    self.target_column
                )))
            }
            (_, FieldType::Map(_)) => {}
            (_, _) if self.target_map_key.is_some() => {
                return Err(Error::Usage(format!(
                    "map key given but `{}` is not a map",
                    self.target_column
                )))
            }
            _ => {}
        }
        if self.kind == JobKind::MapAggregate && self.target_map_key.is_none() {
            return Err(Error::Usage("aggregate needs a map key".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    /// Deterministic, sorted output lines.
    pub output: Vec<String>,
    pub metrics: ScanMetrics,
    pub matches: u64,
}

#[derive(Debug, Default)]
struct Partial {
    distinct: BTreeSet<String>,
    sum: i64,
    records: u64,
    checksum: u64,
    matches: u64,
}

impl Partial {
    fn merge(&mut self, other: Partial) {
        self.distinct.extend(other.distinct);
        self.sum = self.sum.wrapping_add(other.sum);
        self.records += other.records;
        self.checksum = self.checksum.wrapping_add(other.checksum);
        self.matches += other.matches;
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => {
            let mut s = String::new();
            match render_value(other, &mut s) {
                Ok(()) => s,
                Err(_) => format!("{other:?}"),
            }
        }
    }
}

fn map_split(cursor: &mut dyn ScanCursor, job: &JobSpec) -> Result<Partial> {
    let mut p = Partial::default();
    if job.kind == JobKind::FullChecksum {
        let fields: Vec<(String, FieldType)> = cursor
            .schema()
            .fields()
            .iter()
            .map(|f| (f.name.clone(), f.ty.clone()))
            .collect();
        let mut buf = Vec::new();
        while cursor.advance()? {
            buf.clear();
            for (name, ty) in &fields {
                encode_value(cursor.get(name)?, ty, &mut buf)?;
            }
            p.records += 1;
            p.checksum = p.checksum.wrapping_add(crc32fast::hash(&buf) as u64);
        }
        return Ok(p);
    }
    while cursor.advance()? {
        p.records += 1;
        let hit = cursor
            .get(&job.predicate_column)?
            .as_str()
            .ok_or_else(|| CoreError::Config("predicate column is not a string".into()))?
            .contains(job.predicate_substring.as_str());
        if !hit {
            continue;
        }
        p.matches += 1;
        let target = cursor.get(&job.target_column)?;
        match job.kind {
            JobKind::DistinctValue => {
                let v = match (&job.target_map_key, target) {
                    (Some(k), Value::Map(_)) => target.map_get(k),
                    _ => Some(target),
                };
                if let Some(v) = v {
                    p.distinct.insert(render(v));
                }
            }
            JobKind::MapAggregate => {
                let key = job.target_map_key.as_deref().unwrap_or(ALL_KEYS);
                if let Value::Map(entries) = target {
                    for (k, v) in entries {
                        if key == ALL_KEYS || k == key {
                            p.sum = p.sum.wrapping_add(v.as_i64().unwrap_or(0));
                        }
                    }
                }
            }
            JobKind::FullChecksum => unreachable!(),
        }
    }
    Ok(p)
}

/// Calls `f` for every split index on up to `workers` threads; results come
/// back in split order.
pub fn for_each_split<T, F>(dataset: &Dataset, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let splits = dataset.split_count();
    let workers = workers.clamp(1, splits.max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<T>)>> = Mutex::new(Vec::new());
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= splits {
            break;
        }
        let r = f(i);
        results.lock().expect("results poisoned").push((i, r));
    };
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(&work);
            }
        });
    }
    let mut results = results.into_inner().expect("results poisoned");
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

/// Reads every record and accesses every projected field, doing nothing
/// else. Used to time scans.
pub fn scan_all(
    dataset: &Dataset,
    projection: &[String],
    mode: Materialization,
    opts: &ReadOptions,
    workers: usize,
) -> Result<ScanMetrics> {
    let start = Instant::now();
    let names: Vec<String> = dataset
        .schema()
        .project(projection)?
        .fields()
        .iter()
        .map(|f| f.name.clone())
        .collect();
    let parts = for_each_split(dataset, workers, |i| {
        let mut c = dataset.open_split(i, projection, mode, opts)?;
        while c.advance()? {
            for n in &names {
                std::hint::black_box(c.get(n)?);
            }
        }
        Ok(c.metrics())
    })?;
    let mut m = ScanMetrics::default();
    for p in &parts {
        m.merge(p);
    }
    m.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(m)
}

/// Runs `job` over every split of `dataset` with up to `workers` threads.
/// An empty projection means the job's own columns (all fields for the
/// checksum job).
pub fn run_job(
    dataset: &Dataset,
    projection: &[String],
    job: &JobSpec,
    mode: Materialization,
    opts: &ReadOptions,
    workers: usize,
) -> Result<JobResult> {
    job.validate(dataset.schema())?;
    let projection: Vec<String> = if projection.is_empty() {
        job.columns()
    } else {
        for c in job.columns() {
            if !projection.contains(&c) {
                return Err(Error::Usage(format!("projection lacks job column `{c}`")));
            }
        }
        projection.to_vec()
    };
    let start = Instant::now();
    let results = for_each_split(dataset, workers, |i| {
        let mut c = dataset.open_split(i, &projection, mode, opts)?;
        Ok((map_split(c.as_mut(), job)?, c.metrics()))
    })?;
    let mut total = Partial::default();
    let mut metrics = ScanMetrics::default();
    for (p, m) in results {
        total.merge(p);
        metrics.merge(&m);
    }
    metrics.wall_time_secs = start.elapsed().as_secs_f64();
    let output = match job.kind {
        JobKind::DistinctValue => total.distinct.into_iter().collect(),
        JobKind::MapAggregate => vec![total.sum.to_string()],
        JobKind::FullChecksum => vec![
            format!("records\t{}", total.records),
            format!("checksum\t{:016x}", total.checksum),
        ],
    };
    Ok(JobResult {
        output,
        metrics,
        matches: total.matches,
    })
}

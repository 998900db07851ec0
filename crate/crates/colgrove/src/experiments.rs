//! Scan, load and placement experiments with CSV and JSON reports.
//!
//! Datasets are generated once per work directory and reused by later
//! runs. Timings are the minimum over `repetitions` runs; counters are
//! identical across repetitions.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use colgrove_core::placement::{ClusterConfig, PlacementPolicy};
use colgrove_core::{CodecId, ColumnLayout, Materialization, ScanMetrics};
use serde::{Deserialize, Serialize};

use crate::cif::LayoutPlan;
use crate::cluster;
use crate::dataset::{load, write_dataset, Dataset, Format, LoadReport, WriteConfig};
use crate::error::{Error, IoContext, Result};
use crate::generate::{
    selectivity_pattern, DeserBench, Generator, Synthetic, TypedKind, Wide, SELECTIVITY_POINTS,
};
use crate::io::ReadOptions;
use crate::jobs::{run_job, scan_all, JobSpec, ALL_KEYS};
use crate::seq::SeqVariant;

const MIB: u64 = 1 << 20;
/// Mean plain-encoded size of a synthetic record.
pub const SYNTHETIC_RECORD_BYTES: u64 = 416;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ScanMatrix,
    Selectivity,
    Rowgroup,
    Width,
    Deser,
    Placement,
    LoadTimes,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::ScanMatrix,
        Experiment::Selectivity,
        Experiment::Rowgroup,
        Experiment::Width,
        Experiment::Deser,
        Experiment::Placement,
        Experiment::LoadTimes,
    ];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::ScanMatrix => "scan-matrix",
            Experiment::Selectivity => "selectivity",
            Experiment::Rowgroup => "rowgroup",
            Experiment::Width => "width",
            Experiment::Deser => "deser",
            Experiment::Placement => "placement",
            Experiment::LoadTimes => "load-times",
        })
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| Error::Usage(format!("unknown experiment `{s}`")))
    }
}

/// Experiment parameters; every field has a desk-scale default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub repetitions: u32,
    /// Synthetic dataset size in plain-encoded bytes.
    pub data_bytes: u64,
    pub transfer_bytes: u64,
    pub split_bytes: u64,
    pub rowgroup_bytes: Vec<u64>,
    pub widths: Vec<usize>,
    pub width_bytes: u64,
    pub typed_fractions: Vec<f64>,
    pub deser_records: u64,
    pub selectivities: Vec<u32>,
    pub nodes: u32,
    pub slots: u32,
    pub replication: u32,
    pub block_bytes: u64,
    pub placement_seeds: u64,
    pub workers: usize,
    /// Where generated datasets live; defaults to `<report dir>/data`.
    pub work_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            seed: 42,
            repetitions: 3,
            data_bytes: 100 * MIB,
            transfer_bytes: 128 * 1024,
            split_bytes: MIB,
            rowgroup_bytes: vec![MIB, 4 * MIB, 16 * MIB],
            widths: vec![20, 40, 80],
            width_bytes: 60 * MIB,
            typed_fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            deser_records: 50_000,
            selectivities: SELECTIVITY_POINTS.to_vec(),
            nodes: 10,
            slots: 6,
            replication: 3,
            block_bytes: MIB,
            placement_seeds: 10,
            workers: 1,
            work_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Usage("repetitions must be at least 1".into()));
        }
        if self.transfer_bytes == 0 {
            return Err(Error::Usage("transfer_bytes must be positive".into()));
        }
        for &p in &self.selectivities {
            if selectivity_pattern(p).is_none() {
                return Err(Error::Usage(format!(
                    "selectivity {p} is not one of {SELECTIVITY_POINTS:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn synthetic_records(&self) -> u64 {
        self.data_bytes / SYNTHETIC_RECORD_BYTES
    }

    fn transfer(&self) -> ReadOptions {
        ReadOptions::transfer(self.transfer_bytes)
    }

    fn cluster(&self, seed: u64) -> ClusterConfig {
        ClusterConfig {
            node_count: self.nodes,
            map_slots_per_node: self.slots,
            replication_factor: self.replication,
            block_size: self.block_bytes,
            rng_seed: seed,
        }
    }
}

/// One measurement. Counter fields mirror [`ScanMetrics`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub dataset: String,
    pub format: String,
    pub layout: String,
    pub projection: String,
    pub mode: String,
    /// Sweep coordinate: selectivity %, row-group bytes, width or typed fraction.
    pub parameter: f64,
    pub data_bytes: u64,
    pub bytes_read_local: u64,
    pub bytes_read_remote: u64,
    pub bytes_read: u64,
    pub values_deserialized: u64,
    pub blocks_decompressed: u64,
    pub bytes_decompressed: u64,
    pub records_emitted: u64,
    pub wall_time_secs: f64,
    pub load_time_secs: f64,
    pub matches: u64,
    pub values_by_column: BTreeMap<String, u64>,
    pub extra: BTreeMap<String, f64>,
}

impl ReportRow {
    fn new(experiment: Experiment, dataset: &str, target: &Target, projection: &[String], mode: Materialization) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            dataset: dataset.into(),
            format: target.format.to_string(),
            layout: target.layout.clone(),
            projection: if projection.is_empty() {
                "*".into()
            } else {
                projection.join("+")
            },
            mode: match mode {
                Materialization::Eager => "eager".into(),
                Materialization::Lazy => "lazy".into(),
            },
            parameter: 0.0,
            data_bytes: 0,
            bytes_read_local: 0,
            bytes_read_remote: 0,
            bytes_read: 0,
            values_deserialized: 0,
            blocks_decompressed: 0,
            bytes_decompressed: 0,
            records_emitted: 0,
            wall_time_secs: 0.0,
            load_time_secs: 0.0,
            matches: 0,
            values_by_column: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    fn with_metrics(mut self, m: &ScanMetrics) -> Self {
        self.bytes_read_local = m.bytes_read_local;
        self.bytes_read_remote = m.bytes_read_remote;
        self.bytes_read = m.bytes_read();
        self.values_deserialized = m.total_values_deserialized();
        self.blocks_decompressed = m.blocks_decompressed;
        self.bytes_decompressed = m.bytes_decompressed;
        self.records_emitted = m.records_emitted;
        self.wall_time_secs = m.wall_time_secs;
        self.values_by_column = m.values_deserialized.clone();
        self
    }

    fn with_parameter(mut self, p: f64) -> Self {
        self.parameter = p;
        self
    }

    /// Bytes read per emitted record.
    pub fn bytes_per_record(&self) -> f64 {
        self.bytes_read as f64 / self.records_emitted.max(1) as f64
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    dataset: &'a str,
    format: &'a str,
    layout: &'a str,
    projection: &'a str,
    mode: &'a str,
    parameter: f64,
    data_bytes: u64,
    bytes_read_local: u64,
    bytes_read_remote: u64,
    bytes_read: u64,
    values_deserialized: u64,
    blocks_decompressed: u64,
    bytes_decompressed: u64,
    records_emitted: u64,
    wall_time_secs: f64,
    load_time_secs: f64,
    matches: u64,
    values_by_column: String,
    extra: String,
}

fn join_map<V: fmt::Display>(m: &BTreeMap<String, V>) -> String {
    m.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: Experiment,
    pub spec: ExperimentSpec,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(CsvRow {
                experiment: &r.experiment,
                dataset: &r.dataset,
                format: &r.format,
                layout: &r.layout,
                projection: &r.projection,
                mode: &r.mode,
                parameter: r.parameter,
                data_bytes: r.data_bytes,
                bytes_read_local: r.bytes_read_local,
                bytes_read_remote: r.bytes_read_remote,
                bytes_read: r.bytes_read,
                values_deserialized: r.values_deserialized,
                blocks_decompressed: r.blocks_decompressed,
                bytes_decompressed: r.bytes_decompressed,
                records_emitted: r.records_emitted,
                wall_time_secs: r.wall_time_secs,
                load_time_secs: r.load_time_secs,
                matches: r.matches,
                values_by_column: join_map(&r.values_by_column),
                extra: join_map(&r.extra),
            })?;
        }
        w.flush().map_err(|e| Error::Report(e.to_string()))?;
        Ok(())
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).at(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.experiment));
        let json_path = dir.join(format!("{}.json", self.experiment));
        self.write_csv(fs::File::create(&csv_path).at(&csv_path)?)?;
        serde_json::to_writer_pretty(fs::File::create(&json_path).at(&json_path)?, self)?;
        Ok((csv_path, json_path))
    }

    pub fn rows_where<'a>(&'a self, pred: impl Fn(&ReportRow) -> bool + 'a) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| pred(r))
    }
}

/// A format plus writer configuration under a short label.
#[derive(Debug, Clone)]
pub struct Target {
    pub label: String,
    pub format: Format,
    pub layout: String,
    pub config: WriteConfig,
}

impl Target {
    pub fn txt() -> Self {
        Target::simple("txt", Format::Txt)
    }

    pub fn seq() -> Self {
        Target::simple("seq", Format::Seq)
    }

    pub fn seq_block(codec: CodecId) -> Self {
        let mut config = WriteConfig::default();
        config.seq = SeqVariant::Block {
            codec,
            target_bytes: crate::seq::DEFAULT_BLOCK_TARGET,
        };
        Target {
            label: format!("seq-block-{codec}"),
            format: Format::Seq,
            layout: format!("block:{codec}"),
            config,
        }
    }

    pub fn pax(rowgroup_bytes: u64, codec: CodecId) -> Self {
        let mib = rowgroup_bytes as f64 / MIB as f64;
        Target {
            label: format!("pax-{rowgroup_bytes}-{codec}"),
            format: Format::Pax,
            layout: format!("rowgroup:{mib}MiB:{codec}"),
            config: WriteConfig::with_pax(rowgroup_bytes, codec),
        }
    }

    pub fn cif(plan: LayoutPlan, split_bytes: u64) -> Self {
        let layout = plan.to_string();
        let mut config = WriteConfig::with_plan(plan);
        config.split_target = split_bytes;
        Target {
            label: format!("cif-{}", layout.replace([',', '=', ':'], "_")),
            format: Format::Cif,
            layout,
            config,
        }
    }

    fn simple(label: &str, format: Format) -> Self {
        Target {
            label: label.into(),
            format,
            layout: "-".into(),
            config: WriteConfig::default(),
        }
    }

    pub fn path_in(&self, dir: &Path, dataset: &str) -> PathBuf {
        dir.join(format!("{dataset}.{}", self.label))
    }
}

/// CIF layouts compared by the scan experiments: plain, skip list, both
/// block codecs, and dictionary skip lists on map columns.
pub fn cif_layouts(split_bytes: u64) -> Vec<Target> {
    [
        LayoutPlan::uniform(ColumnLayout::Plain),
        LayoutPlan::uniform(ColumnLayout::skip_list()),
        LayoutPlan::uniform(ColumnLayout::blocks(CodecId::FastLz)),
        LayoutPlan::uniform(ColumnLayout::blocks(CodecId::HighRatio)),
        LayoutPlan::uniform(ColumnLayout::dcsl()),
    ]
    .into_iter()
    .map(|p| Target::cif(p, split_bytes))
    .collect()
}

/// Generates `gen` into an uncompressed SEQ file unless it already exists.
pub fn ensure_source<G: Generator>(path: &Path, gen: impl FnOnce() -> G) -> Result<Dataset> {
    if !path.exists() {
        let g = gen();
        let schema = g.schema();
        let tmp = path.with_extension("partial");
        let _ = fs::remove_file(&tmp);
        write_dataset(&tmp, Format::Seq, schema, &WriteConfig::default(), g)?;
        let tmp_schema = crate::io::schema_sidecar(&tmp);
        fs::rename(&tmp_schema, crate::io::schema_sidecar(path)).at(path)?;
        fs::rename(&tmp, path).at(path)?;
    }
    Dataset::open(path, Format::Seq)
}

/// Converts `source` into `target` inside `dir` unless already present.
pub fn ensure_target(source: &Dataset, dir: &Path, dataset: &str, target: &Target) -> Result<Dataset> {
    let path = target.path_in(dir, dataset);
    let done = dir.join(format!(".{dataset}.{}.done", target.label));
    if !done.exists() {
        remove_path(&path)?;
        load(source.path(), Format::Seq, &path, target.format, &target.config)?;
        fs::write(&done, b"").at(&done)?;
    }
    Dataset::open(&path, target.format)
}

fn remove_path(path: &Path) -> Result<()> {
    if path.is_dir() {
        fs::remove_dir_all(path).at(path)?;
    } else if path.exists() {
        fs::remove_file(path).at(path)?;
    }
    let sidecar = crate::io::schema_sidecar(path);
    if sidecar.exists() {
        fs::remove_file(&sidecar).at(&sidecar)?;
    }
    Ok(())
}

/// Best-of-`reps` scan of every projected field.
pub fn timed_scan(
    ds: &Dataset,
    projection: &[String],
    mode: Materialization,
    opts: &ReadOptions,
    reps: u32,
    workers: usize,
) -> Result<ScanMetrics> {
    let mut best: Option<ScanMetrics> = None;
    for _ in 0..reps.max(1) {
        let m = scan_all(ds, projection, mode, opts, workers)?;
        if best.as_ref().is_none_or(|b| m.wall_time_secs < b.wall_time_secs) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least one repetition"))
}

/// Best-of-`reps` job run.
pub fn timed_job(
    ds: &Dataset,
    projection: &[String],
    job: &JobSpec,
    mode: Materialization,
    opts: &ReadOptions,
    reps: u32,
    workers: usize,
) -> Result<crate::jobs::JobResult> {
    let mut best: Option<crate::jobs::JobResult> = None;
    for _ in 0..reps.max(1) {
        let r = run_job(ds, projection, job, mode, opts, workers)?;
        if best
            .as_ref()
            .is_none_or(|b| r.metrics.wall_time_secs < b.metrics.wall_time_secs)
        {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one repetition"))
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn mode_for(target: &Target) -> Materialization {
    match target.format {
        Format::Cif => Materialization::Lazy,
        _ => Materialization::Eager,
    }
}

fn synthetic_source(spec: &ExperimentSpec, dir: &Path) -> Result<Dataset> {
    let n = spec.synthetic_records();
    let seed = spec.seed;
    ensure_source(&dir.join(format!("synthetic-{n}-{seed}.seq")), || Synthetic::new(n, seed))
}

pub fn scan_matrix(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<ReportRow>> {
    let source = synthetic_source(spec, dir)?;
    let name = "synthetic";
    let mut targets = vec![Target::txt(), Target::seq(), Target::seq_block(CodecId::HighRatio)];
    for &rg in &spec.rowgroup_bytes {
        targets.push(Target::pax(rg, CodecId::Raw));
    }
    targets.extend(cif_layouts(spec.split_bytes));
    let projections = [cols(&["int0"]), cols(&["str0"]), cols(&["map0"]), Vec::new()];
    let mut rows = Vec::new();
    for t in &targets {
        let ds = ensure_target(&source, dir, name, t)?;
        let size = ds.data_bytes()?;
        for p in &projections {
            let mode = mode_for(t);
            let m = timed_scan(&ds, p, mode, &spec.transfer(), spec.repetitions, spec.workers)?;
            let mut row = ReportRow::new(Experiment::ScanMatrix, name, t, p, mode).with_metrics(&m);
            row.data_bytes = size;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// CIF with eager records and plain columns against CIF-SL (lazy records,
/// skip-list columns) for the map aggregation at each selectivity.
pub fn selectivity_targets(split_bytes: u64) -> [(Target, Materialization); 2] {
    [
        (
            Target::cif(LayoutPlan::uniform(ColumnLayout::Plain), split_bytes),
            Materialization::Eager,
        ),
        (
            Target::cif(LayoutPlan::uniform(ColumnLayout::skip_list()), split_bytes),
            Materialization::Lazy,
        ),
    ]
}

pub fn selectivity_sweep(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<ReportRow>> {
    let source = synthetic_source(spec, dir)?;
    let name = "synthetic";
    let projection = cols(&["str0", "map0"]);
    let targets = selectivity_targets(spec.split_bytes);
    let datasets = targets
        .iter()
        .map(|(t, _)| ensure_target(&source, dir, name, t))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<JobSpec> = spec
        .selectivities
        .iter()
        .map(|&p| JobSpec::aggregate("str0", &selectivity_pattern(p).expect("validated"), "map0", ALL_KEYS))
        .collect();
    let mut best: Vec<Vec<Option<crate::jobs::JobResult>>> = vec![vec![None; jobs.len()]; targets.len()];
    for _ in 0..spec.repetitions.max(1) {
        for (j, job) in jobs.iter().enumerate() {
            for (((_, mode), ds), b) in targets.iter().zip(&datasets).zip(best.iter_mut()) {
                let r = run_job(ds, &projection, job, *mode, &spec.transfer(), spec.workers)?;
                let map_values = r.metrics.values_deserialized.get("map0").copied().unwrap_or(0);
                if *mode == Materialization::Lazy && map_values != r.matches {
                    return Err(Error::Invariant(format!(
                        "lazy scan deserialized {map_values} map values for {} matches",
                        r.matches
                    )));
                }
                if b[j]
                    .as_ref()
                    .is_none_or(|b| r.metrics.wall_time_secs < b.metrics.wall_time_secs)
                {
                    b[j] = Some(r);
                }
            }
        }
    }
    let mut rows = Vec::new();
    for ((t, mode), results) in targets.iter().zip(best) {
        for (&p, r) in spec.selectivities.iter().zip(results) {
            let r = r.expect("at least one repetition");
            let mut row = ReportRow::new(Experiment::Selectivity, name, t, &projection, *mode)
                .with_metrics(&r.metrics)
                .with_parameter(p as f64);
            row.matches = r.matches;
            row.extra.insert("sum".into(), r.output[0].parse().unwrap_or(0.0));
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn rowgroup_sweep(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<ReportRow>> {
    let source = synthetic_source(spec, dir)?;
    let name = "synthetic";
    let projection = cols(&["int0"]);
    let mut targets: Vec<Target> = spec
        .rowgroup_bytes
        .iter()
        .map(|&rg| Target::pax(rg, CodecId::Raw))
        .collect();
    targets.push(Target::cif(LayoutPlan::default(), spec.split_bytes));
    targets.push(Target::seq());
    let mut rows = Vec::new();
    for t in &targets {
        let ds = ensure_target(&source, dir, name, t)?;
        let mode = mode_for(t);
        let m = timed_scan(&ds, &projection, mode, &spec.transfer(), spec.repetitions, spec.workers)?;
        let mut row = ReportRow::new(Experiment::Rowgroup, name, t, &projection, mode)
            .with_metrics(&m)
            .with_parameter(match t.format {
                Format::Pax => t.config.pax.rowgroup_target_bytes as f64,
                _ => 0.0,
            });
        row.data_bytes = ds.data_bytes()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn width_sweep(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &w in &spec.widths {
        let seed = spec.seed;
        let bytes = spec.width_bytes;
        let name = format!("wide{w}");
        let source = ensure_source(&dir.join(format!("wide-{w}-{bytes}-{seed}.seq")), || {
            Wide::new(w, bytes, seed).expect("width validated")
        })?;
        let tenth = (w / 10).max(1);
        let projections = [
            vec!["col0".to_string()],
            (0..tenth).map(|i| format!("col{i}")).collect(),
            Vec::new(),
        ];
        for t in [
            Target::cif(LayoutPlan::default(), spec.split_bytes),
            Target::pax(16 * MIB, CodecId::Raw),
        ] {
            let ds = ensure_target(&source, dir, &name, &t)?;
            for p in &projections {
                let mode = mode_for(&t);
                let m = timed_scan(&ds, p, mode, &spec.transfer(), spec.repetitions, spec.workers)?;
                let mut row = ReportRow::new(Experiment::Width, &name, &t, p, mode)
                    .with_metrics(&m)
                    .with_parameter(w as f64);
                row.data_bytes = ds.data_bytes()?;
                row.extra.insert("bytes_per_record".into(), row.bytes_per_record());
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

pub fn deser_bench(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    let t = Target::seq();
    for kind in TypedKind::ALL {
        for &f in &spec.typed_fractions {
            let (n, seed) = (spec.deser_records, spec.seed);
            let name = format!("deser-{kind}-{f}");
            let ds = ensure_source(&dir.join(format!("deser-{kind}-{f}-{n}-{seed}.seq")), || {
                DeserBench::new(n, f, kind, seed).expect("fraction validated")
            })?;
            let m = timed_scan(&ds, &[], Materialization::Eager, &spec.transfer(), spec.repetitions, spec.workers)?;
            let mut row = ReportRow::new(Experiment::Deser, &name, &t, &[], Materialization::Eager)
                .with_metrics(&m)
                .with_parameter(f);
            let plain = n * crate::generate::DESER_RECORD_BYTES as u64;
            row.data_bytes = ds.data_bytes()?;
            row.extra.insert(
                "mib_per_sec".into(),
                plain as f64 / MIB as f64 / m.wall_time_secs.max(1e-9),
            );
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Bandwidth recorded by a deser row, in MiB/s of plain record bytes.
pub fn bandwidth(row: &ReportRow) -> f64 {
    row.extra.get("mib_per_sec").copied().unwrap_or(0.0)
}

pub fn placement(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<ReportRow>> {
    let source = synthetic_source(spec, dir)?;
    let name = "synthetic";
    let t = Target::cif(LayoutPlan::default(), spec.split_bytes);
    let ds = ensure_target(&source, dir, name, &t)?;
    let projection = cols(&["str0", "int0", "map0"]);
    let mut rows = Vec::new();
    for policy in [PlacementPolicy::Default, PlacementPolicy::ColumnPlacement] {
        for seed in 0..spec.placement_seeds {
            let config = spec.cluster(spec.seed.wrapping_add(seed));
            let sim = cluster::simulate(&ds, &projection, policy, &config, &[], seed == 0)?;
            let mut row = ReportRow::new(Experiment::Placement, name, &t, &projection, Materialization::Eager)
                .with_parameter(seed as f64);
            row.layout = policy.to_string();
            row.bytes_read_local = sim.report.local_bytes;
            row.bytes_read_remote = sim.report.remote_bytes;
            row.bytes_read = sim.report.total_bytes();
            row.extra.insert("fully_co_located_fraction".into(), sim.report.fully_co_located_fraction);
            row.extra.insert("local_capable_fraction".into(), sim.report.local_capable_fraction);
            row.extra.insert("tasks".into(), sim.report.tasks.len() as f64);
            row.extra.insert("tasks_fully_local".into(), sim.report.tasks_fully_local() as f64);
            row.extra.insert("full_parallelism".into(), sim.parallelism.full() as u8 as f64);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Load targets timed against each other.
pub fn load_targets(split_bytes: u64) -> Vec<Target> {
    vec![
        Target::txt(),
        Target::seq_block(CodecId::HighRatio),
        Target::pax(4 * MIB, CodecId::Raw),
        Target::cif(LayoutPlan::uniform(ColumnLayout::Plain), split_bytes),
        Target::cif(LayoutPlan::uniform(ColumnLayout::skip_list()), split_bytes),
        Target::cif(LayoutPlan::uniform(ColumnLayout::blocks(CodecId::HighRatio)), split_bytes),
        Target::cif(LayoutPlan::uniform(ColumnLayout::dcsl()), split_bytes),
    ]
}

/// Best-of-`reps` conversions of `source` into each target. Repetitions
/// cycle through the targets so that slow periods hit all of them alike.
pub fn timed_loads(source: &Dataset, outs: &[(PathBuf, Target)], reps: u32) -> Result<Vec<LoadReport>> {
    let mut best: Vec<Option<LoadReport>> = vec![None; outs.len()];
    for _ in 0..reps.max(1) {
        for ((out, target), b) in outs.iter().zip(best.iter_mut()) {
            remove_path(out)?;
            let r = load(source.path(), source.format(), out, target.format, &target.config)?;
            remove_path(out)?;
            if b.as_ref().is_none_or(|b| r.load_time_secs < b.load_time_secs) {
                *b = Some(r);
            }
        }
    }
    Ok(best.into_iter().map(|b| b.expect("at least one repetition")).collect())
}

pub fn load_times(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<ReportRow>> {
    let source = synthetic_source(spec, dir)?;
    let name = "synthetic";
    let out_dir = dir.join("load-times");
    let outs: Vec<(PathBuf, Target)> = load_targets(spec.split_bytes)
        .into_iter()
        .map(|t| (t.path_in(&out_dir, name), t))
        .collect();
    let reports = timed_loads(&source, &outs, spec.repetitions)?;
    let mut rows = Vec::new();
    for ((_, t), r) in outs.iter().zip(reports) {
        let mut row = ReportRow::new(Experiment::LoadTimes, name, t, &[], Materialization::Eager);
        row.load_time_secs = r.load_time_secs;
        row.records_emitted = r.summary.records;
        row.data_bytes = r.summary.bytes;
        row.extra.insert("units".into(), r.summary.units as f64);
        rows.push(row);
    }
    Ok(rows)
}

/// Runs one experiment, generating datasets under the spec's work
/// directory (or `report_dir/data`) and writing the reports into
/// `report_dir`.
pub fn run_experiment(experiment: Experiment, spec: &ExperimentSpec, report_dir: &Path) -> Result<Report> {
    spec.validate()?;
    let dir = spec
        .work_dir
        .clone()
        .unwrap_or_else(|| report_dir.join("data"));
    fs::create_dir_all(&dir).at(&dir)?;
    let rows = match experiment {
        Experiment::ScanMatrix => scan_matrix(spec, &dir)?,
        Experiment::Selectivity => selectivity_sweep(spec, &dir)?,
        Experiment::Rowgroup => rowgroup_sweep(spec, &dir)?,
        Experiment::Width => width_sweep(spec, &dir)?,
        Experiment::Deser => deser_bench(spec, &dir)?,
        Experiment::Placement => placement(spec, &dir)?,
        Experiment::LoadTimes => load_times(spec, &dir)?,
    };
    let report = Report {
        experiment,
        spec: spec.clone(),
        rows,
    };
    report.write_to(report_dir)?;
    Ok(report)
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use colgrove::cif::{LayoutPlan, DEFAULT_SPLIT_TARGET};
use colgrove::cluster::{self, parse_cluster_config};
use colgrove::dataset::{load, write_dataset, Dataset, Format, WriteConfig};
use colgrove::error::{Error, Result};
use colgrove::experiments::{run_experiment, Experiment, ExperimentSpec};
use colgrove::generate::{Crawl, DeserBench, Generator, Synthetic, TypedKind, Wide, DEFAULT_CONTENT_BYTES, WIDE_VALUE_LEN};
use colgrove::io::ReadOptions;
use colgrove::jobs::{run_job, JobKind, JobSpec};
use colgrove::pax::{PaxConfig, DEFAULT_ROWGROUP_TARGET};
use colgrove::seq::SeqVariant;
use colgrove_core::placement::{ClusterConfig, NodeId, PlacementPolicy};
use colgrove_core::{CodecId, Materialization, Metering};

#[derive(Parser)]
#[command(name = "colgrove", version, about = "Columnar storage formats and scan experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded dataset.
    Generate(GenerateArgs),
    /// Convert a dataset between formats.
    Load(LoadArgs),
    /// Run a built-in job over a dataset.
    Scan(ScanArgs),
    /// Run an experiment and write CSV and JSON reports.
    Bench(BenchArgs),
    /// Simulate block placement and scheduling for a column dataset.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct WriteOpts {
    /// Column layout plan: `layout[,field=layout...]`.
    #[arg(long, default_value = "plain")]
    layout: String,
    #[arg(long, default_value_t = DEFAULT_SPLIT_TARGET)]
    split_bytes: u64,
    #[arg(long, default_value_t = DEFAULT_ROWGROUP_TARGET)]
    rowgroup_bytes: u64,
    /// Codec for PAX column segments.
    #[arg(long, default_value = "raw")]
    pax_codec: CodecId,
    /// Write block-compressed SEQ with this codec.
    #[arg(long)]
    seq_block: Option<CodecId>,
    #[arg(long, default_value_t = colgrove::seq::DEFAULT_BLOCK_TARGET)]
    seq_block_bytes: u64,
}

impl WriteOpts {
    fn config(&self) -> Result<WriteConfig> {
        Ok(WriteConfig {
            seq: match self.seq_block {
                Some(codec) => SeqVariant::Block {
                    codec,
                    target_bytes: self.seq_block_bytes,
                },
                None => SeqVariant::Uncompressed,
            },
            pax: PaxConfig {
                rowgroup_target_bytes: self.rowgroup_bytes,
                codec: self.pax_codec,
            },
            plan: self.layout.parse::<LayoutPlan>()?,
            split_target: self.split_bytes,
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = ["synthetic", "crawl", "wide", "deser"])]
    kind: String,
    #[arg(long)]
    records: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "seq")]
    format: Format,
    #[arg(long, default_value_t = 0.06)]
    match_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_CONTENT_BYTES)]
    content_bytes: usize,
    #[arg(long, default_value_t = 20)]
    columns: usize,
    #[arg(long, default_value_t = 0.5)]
    typed_fraction: f64,
    #[arg(long, default_value = "int")]
    typed_kind: TypedKind,
    #[command(flatten)]
    write: WriteOpts,
}

#[derive(Args)]
struct LoadArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    in_format: Format,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    out_format: Format,
    #[command(flatten)]
    write: WriteOpts,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    format: Format,
    /// Projection; defaults to the job's columns.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    #[arg(long)]
    job: JobKind,
    #[arg(long, default_value = "")]
    predicate_col: String,
    #[arg(long, default_value = "")]
    pattern: String,
    #[arg(long, default_value = "")]
    target_col: String,
    #[arg(long)]
    map_key: Option<String>,
    #[arg(long, value_parser = ["eager", "lazy"], default_value = "lazy")]
    mode: String,
    #[arg(long, value_parser = ["exact", "transfer"], default_value = "transfer")]
    metering: String,
    #[arg(long, default_value_t = colgrove_core::metered::DEFAULT_TRANSFER_SIZE)]
    transfer_bytes: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also run the other materialization mode and check both agree.
    #[arg(long)]
    verify: bool,
    /// Write the scan counters as JSON to this file.
    #[arg(long)]
    metrics_json: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    experiment: Experiment,
    /// JSON experiment spec; omitted fields take their defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    report_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// `key=value` cluster file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<u32>,
    #[arg(long)]
    slots: Option<u32>,
    #[arg(long)]
    replication: Option<u32>,
    #[arg(long)]
    block_bytes: Option<u64>,
    #[arg(long)]
    policy: Option<PlacementPolicy>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    /// Pre-occupied slots as `node:slots`.
    #[arg(long, value_delimiter = ',')]
    busy: Vec<String>,
    /// Also scan every task's files and check the byte accounting.
    #[arg(long)]
    scan: bool,
    /// Write locality.csv and locality.json here instead of printing JSON.
    #[arg(long)]
    report_dir: Option<PathBuf>,
}

fn mode(s: &str) -> Materialization {
    if s == "eager" {
        Materialization::Eager
    } else {
        Materialization::Lazy
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let config = a.write.config()?;
    let write = |g: Box<dyn Generator>| -> Result<()> {
        let schema = g.schema();
        let s = write_dataset(&a.out, a.format, schema, &config, g)?;
        eprintln!("wrote {} records ({} bytes) to {}", s.records, s.bytes, a.out.display());
        Ok(())
    };
    match a.kind.as_str() {
        "synthetic" => write(Box::new(Synthetic::new(a.records, a.seed))),
        "crawl" => write(Box::new(Crawl::new(a.records, a.match_fraction, a.content_bytes, a.seed)?)),
        "wide" => {
            let total = a.records * a.columns as u64 * (4 + WIDE_VALUE_LEN as u64);
            write(Box::new(Wide::new(a.columns, total, a.seed)?))
        }
        _ => write(Box::new(DeserBench::new(a.records, a.typed_fraction, a.typed_kind, a.seed)?)),
    }
}

fn load_cmd(a: LoadArgs) -> Result<()> {
    let r = load(&a.input, a.in_format, &a.out, a.out_format, &a.write.config()?)?;
    println!(
        "records={} units={} bytes={} load_time_secs={:.6}",
        r.summary.records, r.summary.units, r.summary.bytes, r.load_time_secs
    );
    Ok(())
}

fn scan(a: ScanArgs) -> Result<()> {
    let ds = Dataset::open(&a.data, a.format)?;
    let job = match a.job {
        JobKind::DistinctValue => JobSpec::distinct(&a.predicate_col, &a.pattern, &a.target_col, a.map_key.as_deref()),
        JobKind::MapAggregate => JobSpec::aggregate(
            &a.predicate_col,
            &a.pattern,
            &a.target_col,
            a.map_key.as_deref().unwrap_or(colgrove::jobs::ALL_KEYS),
        ),
        JobKind::FullChecksum => JobSpec::checksum(),
    };
    let opts = ReadOptions {
        metering: match a.metering.as_str() {
            "exact" => Metering::Exact,
            _ => Metering::Transfer(a.transfer_bytes),
        },
        ..ReadOptions::default()
    };
    let m = mode(&a.mode);
    let r = run_job(&ds, &a.columns, &job, m, &opts, a.workers)?;
    if a.verify {
        let other = match m {
            Materialization::Lazy => Materialization::Eager,
            Materialization::Eager => Materialization::Lazy,
        };
        let o = run_job(&ds, &a.columns, &job, other, &opts, a.workers)?;
        if o.output != r.output {
            return Err(Error::Invariant("eager and lazy scans disagree".into()));
        }
        let (lazy, eager) = match m {
            Materialization::Lazy => (&r.metrics, &o.metrics),
            Materialization::Eager => (&o.metrics, &r.metrics),
        };
        if lazy.bytes_read() > eager.bytes_read() {
            return Err(Error::Invariant(format!(
                "lazy scan read {} bytes, eager {}",
                lazy.bytes_read(),
                eager.bytes_read()
            )));
        }
    }
    let mut out = std::io::stdout().lock();
    for line in &r.output {
        writeln!(out, "{line}").map_err(|e| Error::Report(e.to_string()))?;
    }
    let mt = &r.metrics;
    eprintln!(
        "records={} matches={} bytes_read={} (local {}, remote {}) values={} blocks={} wall={:.6}s",
        mt.records_emitted,
        r.matches,
        mt.bytes_read(),
        mt.bytes_read_local,
        mt.bytes_read_remote,
        mt.total_values_deserialized(),
        mt.blocks_decompressed,
        mt.wall_time_secs
    );
    if let Some(p) = a.metrics_json {
        let v = serde_json::json!({
            "bytes_read_local": mt.bytes_read_local,
            "bytes_read_remote": mt.bytes_read_remote,
            "values_deserialized": mt.values_deserialized,
            "blocks_decompressed": mt.blocks_decompressed,
            "bytes_decompressed": mt.bytes_decompressed,
            "records_emitted": mt.records_emitted,
            "wall_time_secs": mt.wall_time_secs,
            "matches": r.matches,
        });
        write_text(&p, &serde_json::to_string_pretty(&v)?)?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn bench(a: BenchArgs) -> Result<()> {
    let spec: ExperimentSpec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", p.display())))?
        }
        None => ExperimentSpec::default(),
    };
    let report = run_experiment(a.experiment, &spec, &a.report_dir)?;
    eprintln!(
        "{}: {} rows written to {}",
        a.experiment,
        report.rows.len(),
        a.report_dir.display()
    );
    Ok(())
}

fn parse_busy(items: &[String]) -> Result<Vec<(NodeId, u32)>> {
    items
        .iter()
        .map(|s| {
            let (n, k) = s
                .split_once(':')
                .ok_or_else(|| Error::Usage(format!("busy entry `{s}` is not node:slots")))?;
            let bad = || Error::Usage(format!("busy entry `{s}` is not node:slots"));
            Ok((n.parse().map_err(|_| bad())?, k.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let (mut config, file_policy) = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            parse_cluster_config(&text)?
        }
        None => (ClusterConfig::default(), None),
    };
    if let Some(v) = a.nodes {
        config.node_count = v;
    }
    if let Some(v) = a.slots {
        config.map_slots_per_node = v;
    }
    if let Some(v) = a.replication {
        config.replication_factor = v;
    }
    if let Some(v) = a.block_bytes {
        config.block_size = v;
    }
    if let Some(v) = a.seed {
        config.rng_seed = v;
    }
    config.validate()?;
    let policy = a.policy.or(file_policy).unwrap_or_default();
    let ds = Dataset::open(&a.data, Format::Cif)?;
    let sim = cluster::simulate(&ds, &a.columns, policy, &config, &parse_busy(&a.busy)?, a.scan)?;
    match &a.report_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            let csv_path = dir.join("locality.csv");
            let f = fs::File::create(&csv_path).map_err(|source| Error::Io {
                path: csv_path.clone(),
                source,
            })?;
            sim.write_csv(f)?;
            write_text(&dir.join("locality.json"), &serde_json::to_string_pretty(&sim.to_json())?)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&sim.to_json())?),
    }
    eprintln!(
        "policy={} splits={} fully_co_located={:.4} local_bytes={} remote_bytes={}",
        policy,
        sim.report.tasks.len(),
        sim.report.fully_co_located_fraction,
        sim.report.local_bytes,
        sim.report.remote_bytes
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Load(a) => load_cmd(a),
        Command::Scan(a) => scan(a),
        Command::Bench(a) => bench(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("colgrove: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Runs the simulated block store over a real column dataset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use colgrove_core::placement::{
    self, cif_parallelism, BlockMap, ClusterConfig, LocalityReport, PlacementPolicy, SplitTask,
    TaskAssignment,
};
use colgrove_core::placement::NodeId;
use colgrove_core::{IoStats, Materialization, Metering, RecordCursor};
use serde::Serialize;

use crate::cif::{cif_open_with_locality, SplitDirectory};
use crate::dataset::{Dataset, Format};
use crate::error::{Error, Result};
use crate::io::ReadOptions;
use crate::scan::current_values;

/// Parses `key = value` lines (`#` starts a comment). Keys: `nodes`,
/// `slots`, `replication`, `block_bytes`, `seed`, `policy`.
pub fn parse_cluster_config(text: &str) -> Result<(ClusterConfig, Option<PlacementPolicy>)> {
    let mut config = ClusterConfig::default();
    let mut policy = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Usage(format!("cluster config line {}: expected key=value", n + 1)))?;
        let num = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::Usage(format!("cluster config line {}: bad number {v:?}", n + 1)))
        };
        match key {
            "nodes" | "node_count" => config.node_count = num(value)? as u32,
            "slots" | "map_slots_per_node" => config.map_slots_per_node = num(value)? as u32,
            "replication" | "replication_factor" => config.replication_factor = num(value)? as u32,
            "block_bytes" | "block_size" => config.block_size = num(value)?,
            "seed" | "rng_seed" => config.rng_seed = num(value)?,
            "policy" => policy = Some(value.parse()?),
            other => {
                return Err(Error::Usage(format!(
                    "cluster config line {}: unknown key `{other}`",
                    n + 1
                )))
            }
        }
    }
    config.validate()?;
    Ok((config, policy))
}

fn relative(dataset: &Path, path: &Path) -> String {
    path.strip_prefix(dataset)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

fn projected_files(split: &SplitDirectory, projection: &[String]) -> Result<Vec<PathBuf>> {
    if projection.is_empty() {
        return Ok(split.column_files.clone());
    }
    projection
        .iter()
        .map(|c| {
            split
                .column_file(c)
                .map(Path::to_path_buf)
                .ok_or_else(|| Error::Usage(format!("unknown column `{c}`")))
        })
        .collect()
}

/// Block placement of every column file of a column dataset.
pub fn place_dataset(
    dataset: &Dataset,
    policy: PlacementPolicy,
    config: &ClusterConfig,
) -> Result<BlockMap> {
    if dataset.format() != Format::Cif {
        return Err(Error::Usage("cluster simulation needs a cif dataset".into()));
    }
    let mut files = Vec::new();
    for s in dataset.cif_splits() {
        for p in &s.column_files {
            let len = std::fs::metadata(p)
                .map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?
                .len();
            files.push((relative(dataset.path(), p), len));
        }
    }
    Ok(placement::place(&files, policy, config)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub policy: PlacementPolicy,
    pub config: ClusterConfig,
    pub assignment: Vec<TaskAssignment>,
    pub report: LocalityReport,
    /// Split count against total slots.
    pub parallelism: placement::ParallelismBound,
    /// Byte counters from really scanning each split on its node, when run.
    pub scanned: Option<IoStats>,
}

/// Places, schedules and accounts a scan of `projection` (empty = all).
/// `busy` pre-occupies slots as `(node, slots)`. With `scan`, every task
/// also reads its files through locality-tagged sources; measured local
/// and remote bytes may not exceed the accounted ones (layouts with skip
/// entries leave a few bytes unread) and a fully local plan must read
/// nothing remotely.
pub fn simulate(
    dataset: &Dataset,
    projection: &[String],
    policy: PlacementPolicy,
    config: &ClusterConfig,
    busy: &[(NodeId, u32)],
    scan: bool,
) -> Result<Simulation> {
    let blocks = place_dataset(dataset, policy, config)?;
    let splits = dataset.cif_splits();
    let mut tasks = Vec::with_capacity(splits.len());
    let mut by_name: BTreeMap<String, &SplitDirectory> = BTreeMap::new();
    for s in &splits {
        let name = relative(dataset.path(), &s.path);
        tasks.push(SplitTask {
            split: name.clone(),
            files: projected_files(s, projection)?
                .iter()
                .map(|p| relative(dataset.path(), p))
                .collect(),
        });
        by_name.insert(name, s);
    }
    let assignment = placement::schedule(&tasks, &blocks, config, busy)?;
    let report = placement::simulate_scan(&assignment, &blocks, config)?;
    let scanned = if scan {
        let mut io = IoStats::default();
        let opts = ReadOptions {
            metering: Metering::Exact,
            ..ReadOptions::default()
        };
        for a in &assignment {
            let split = by_name[&a.split];
            let mut cursor = cif_open_with_locality(
                split,
                projection,
                Materialization::Eager,
                &opts,
                |p| Ok(blocks.locality(&relative(dataset.path(), p), a.node)?),
            )?;
            while cursor.advance()? {
                current_values(&mut cursor)?;
            }
            io.merge(&cursor.io_stats());
        }
        let consistent = io.bytes_local <= report.local_bytes
            && io.bytes_remote <= report.remote_bytes
            && (report.remote_bytes > 0 || io.bytes_remote == 0);
        if !consistent {
            return Err(Error::Invariant(format!(
                "scanned {} local / {} remote bytes, placement accounts {} / {}",
                io.bytes_local, io.bytes_remote, report.local_bytes, report.remote_bytes
            )));
        }
        Some(io)
    } else {
        None
    };
    Ok(Simulation {
        policy,
        config: *config,
        parallelism: cif_parallelism(splits.len() as u64, config.total_slots()),
        assignment,
        report,
        scanned,
    })
}

#[derive(Debug, Serialize)]
pub struct TaskRow {
    pub split: String,
    pub node: NodeId,
    pub wave: u32,
    pub local_bytes: u64,
    pub remote_bytes: u64,
    pub common_replicas: u32,
}

#[derive(Debug, Serialize)]
pub struct SimulationJson {
    pub policy: String,
    pub node_count: u32,
    pub map_slots_per_node: u32,
    pub replication_factor: u32,
    pub block_size: u64,
    pub rng_seed: u64,
    pub splits: u64,
    pub total_slots: u64,
    pub full_parallelism: bool,
    pub fully_co_located_fraction: f64,
    pub local_capable_fraction: f64,
    pub local_bytes: u64,
    pub remote_bytes: u64,
    pub tasks: Vec<TaskRow>,
}

impl Simulation {
    pub fn task_rows(&self) -> Vec<TaskRow> {
        self.report
            .tasks
            .iter()
            .map(|t| TaskRow {
                split: t.split.clone(),
                node: t.node,
                wave: t.wave,
                local_bytes: t.local_bytes,
                remote_bytes: t.remote_bytes,
                common_replicas: t.common_replicas,
            })
            .collect()
    }

    pub fn to_json(&self) -> SimulationJson {
        SimulationJson {
            policy: self.policy.to_string(),
            node_count: self.config.node_count,
            map_slots_per_node: self.config.map_slots_per_node,
            replication_factor: self.config.replication_factor,
            block_size: self.config.block_size,
            rng_seed: self.config.rng_seed,
            splits: self.parallelism.bound,
            total_slots: self.parallelism.slots,
            full_parallelism: self.parallelism.full(),
            fully_co_located_fraction: self.report.fully_co_located_fraction,
            local_capable_fraction: self.report.local_capable_fraction,
            local_bytes: self.report.local_bytes,
            remote_bytes: self.report.remote_bytes,
            tasks: self.task_rows(),
        }
    }

    /// One CSV row per task.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.task_rows() {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::Report(e.to_string()))?;
        Ok(())
    }
}

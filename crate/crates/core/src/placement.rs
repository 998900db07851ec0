//! Simulated replicated block store: placement, locality-first scheduling
//! and local/remote byte accounting.
//!
//! Under [`PlacementPolicy::Default`] every block gets `replication_factor`
//! distinct nodes drawn uniformly at random. Under
//! [`PlacementPolicy::ColumnPlacement`] all blocks of all files inside one
//! split directory (a directory named `s<k>`) share the replica set drawn for
//! the first block of the directory's lexicographically first file. Files
//! outside that naming convention are placed as under the default policy.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metered::Locality;

pub type NodeId = u32;

pub const DEFAULT_BLOCK_SIZE: u64 = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterConfig {
    pub node_count: u32,
    pub map_slots_per_node: u32,
    pub replication_factor: u32,
    pub block_size: u64,
    pub rng_seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            node_count: 10,
            map_slots_per_node: 6,
            replication_factor: 3,
            block_size: DEFAULT_BLOCK_SIZE,
            rng_seed: 0,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::Config("cluster has no nodes".into()));
        }
        if self.map_slots_per_node == 0 {
            return Err(Error::Config("map_slots_per_node must be at least 1".into()));
        }
        if self.replication_factor == 0 || self.replication_factor > self.node_count {
            return Err(Error::Config(format!(
                "replication factor {} must be in 1..={}",
                self.replication_factor, self.node_count
            )));
        }
        if self.block_size == 0 {
            return Err(Error::Config("block_size must be positive".into()));
        }
        Ok(())
    }

    pub fn total_slots(&self) -> u64 {
        self.node_count as u64 * self.map_slots_per_node as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlacementPolicy {
    #[default]
    Default,
    ColumnPlacement,
}

impl fmt::Display for PlacementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlacementPolicy::Default => "default",
            PlacementPolicy::ColumnPlacement => "cpp",
        })
    }
}

impl FromStr for PlacementPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "default" | "random" => Ok(PlacementPolicy::Default),
            "cpp" | "column" => Ok(PlacementPolicy::ColumnPlacement),
            other => Err(Error::Config(format!("unknown placement policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub length: u64,
    /// Sorted, distinct.
    pub replicas: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockMap {
    block_size: u64,
    files: BTreeMap<String, Vec<BlockInfo>>,
}

impl BlockMap {
    pub fn block_size(&self) -> u64 {
        self.block_size
    }

    pub fn blocks(&self, path: &str) -> Option<&[BlockInfo]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn files(&self) -> impl Iterator<Item = (&str, &[BlockInfo])> {
        self.files.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn file_len(&self, path: &str) -> Option<u64> {
        self.blocks(path).map(|b| b.iter().map(|x| x.length).sum())
    }

    /// Nodes holding a replica of every block of every listed file.
    pub fn common_nodes<S: AsRef<str>>(&self, paths: &[S]) -> Result<Vec<NodeId>> {
        let mut common: Option<Vec<NodeId>> = None;
        for p in paths {
            let blocks = self
                .blocks(p.as_ref())
                .ok_or_else(|| Error::Config(format!("no blocks for `{}`", p.as_ref())))?;
            for b in blocks {
                common = Some(match common {
                    None => b.replicas.clone(),
                    Some(c) => c.into_iter().filter(|n| b.replicas.contains(n)).collect(),
                });
            }
        }
        Ok(common.unwrap_or_default())
    }

    /// Per-block locality of `path` as seen from `node`.
    pub fn locality(&self, path: &str, node: NodeId) -> Result<Locality> {
        let blocks = self
            .blocks(path)
            .ok_or_else(|| Error::Config(format!("no blocks for `{path}`")))?;
        Ok(Locality::PerBlock {
            block_size: self.block_size,
            remote: blocks.iter().map(|b| !b.replicas.contains(&node)).collect(),
        })
    }
}

/// The split directory a file belongs to: its parent directory when that
/// directory's name is `s` followed by decimal digits.
pub fn split_directory_of(path: &str) -> Option<&str> {
    let trimmed = path.trim_end_matches('/');
    let slash = trimmed.rfind('/')?;
    let dir = &trimmed[..slash];
    let name = dir.rsplit('/').next().unwrap_or(dir);
    let digits = name.strip_prefix('s')?;
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        Some(dir)
    } else {
        None
    }
}

fn draw_replicas(rng: &mut ChaCha8Rng, config: &ClusterConfig) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = rand::seq::index::sample(
        rng,
        config.node_count as usize,
        config.replication_factor as usize,
    )
    .into_iter()
    .map(|i| i as NodeId)
    .collect();
    v.sort_unstable();
    v
}

/// Chops files into blocks and assigns replica sets.
pub fn place<S: AsRef<str>>(
    files: &[(S, u64)],
    policy: PlacementPolicy,
    config: &ClusterConfig,
) -> Result<BlockMap> {
    config.validate()?;
    let mut sorted: Vec<(&str, u64)> = files.iter().map(|(p, l)| (p.as_ref(), *l)).collect();
    sorted.sort_unstable_by(|a, b| a.0.cmp(b.0));
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Config(format!("file `{}` listed twice", w[0].0)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut dir_sets: BTreeMap<&str, Vec<NodeId>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (path, len) in sorted {
        if len == 0 {
            return Err(Error::Config(format!("file `{path}` has zero length")));
        }
        let nblocks = len.div_ceil(config.block_size);
        let shared = match (policy, split_directory_of(path)) {
            (PlacementPolicy::ColumnPlacement, Some(dir)) => Some(
                dir_sets
                    .entry(dir)
                    .or_insert_with(|| draw_replicas(&mut rng, config))
                    .clone(),
            ),
            _ => None,
        };
        let blocks = (0..nblocks)
            .map(|i| BlockInfo {
                length: (len - i * config.block_size).min(config.block_size),
                replicas: match &shared {
                    Some(s) => s.clone(),
                    None => draw_replicas(&mut rng, config),
                },
            })
            .collect();
        out.insert(String::from(path), blocks);
    }
    Ok(BlockMap {
        block_size: config.block_size,
        files: out,
    })
}

/// One map task: a split and the column files its projection needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitTask {
    pub split: String,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskAssignment {
    pub split: String,
    pub node: NodeId,
    pub wave: u32,
    pub files: Vec<String>,
}

/// Locality-first scheduling in waves of `node_count × slots` tasks.
///
/// A task whose blocks share replica nodes only runs on one of them; when
/// they are all full it waits for the next wave. Tasks with no common node
/// take any free slot. `busy` pre-occupies slots in the first wave as
/// `(node, slots)` pairs. Assignments come back in task order.
pub fn schedule(
    tasks: &[SplitTask],
    blocks: &BlockMap,
    config: &ClusterConfig,
    busy: &[(NodeId, u32)],
) -> Result<Vec<TaskAssignment>> {
    config.validate()?;
    if tasks.is_empty() {
        return Err(Error::Config("no splits to schedule".into()));
    }
    let slots = config.map_slots_per_node;
    let mut free: Vec<u32> = alloc::vec![slots; config.node_count as usize];
    for &(node, n) in busy {
        let f = free
            .get_mut(node as usize)
            .ok_or_else(|| Error::Config(format!("busy node {node} is not in the cluster")))?;
        *f = f.saturating_sub(n);
    }
    let mut pending: Vec<(usize, Vec<NodeId>)> = Vec::with_capacity(tasks.len());
    for (i, t) in tasks.iter().enumerate() {
        pending.push((i, blocks.common_nodes(&t.files)?));
    }
    let mut placed: Vec<Option<(NodeId, u32)>> = alloc::vec![None; tasks.len()];
    let mut wave = 0u32;
    while !pending.is_empty() {
        let mut deferred = Vec::new();
        for (i, common) in pending {
            let least_loaded = |candidates: &mut dyn Iterator<Item = NodeId>| {
                candidates
                    .filter(|&n| free[n as usize] > 0)
                    .max_by_key(|&n| (free[n as usize], core::cmp::Reverse(n)))
            };
            let node = if common.is_empty() {
                least_loaded(&mut (0..config.node_count))
            } else {
                least_loaded(&mut common.iter().copied())
            };
            match node {
                Some(n) => {
                    free[n as usize] -= 1;
                    placed[i] = Some((n, wave));
                }
                None => deferred.push((i, common)),
            }
        }
        pending = deferred;
        wave += 1;
        free.iter_mut().for_each(|f| *f = slots);
    }
    Ok(tasks
        .iter()
        .zip(placed)
        .map(|(t, p)| {
            let (node, wave) = p.expect("every task placed");
            TaskAssignment {
                split: t.split.clone(),
                node,
                wave,
                files: t.files.clone(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskLocality {
    pub split: String,
    pub node: NodeId,
    pub wave: u32,
    pub local_bytes: u64,
    pub remote_bytes: u64,
    /// Size of the replica set shared by every block the task reads.
    pub common_replicas: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalityReport {
    pub tasks: Vec<TaskLocality>,
    /// Splits whose blocks all share one full replica set.
    pub fully_co_located_fraction: f64,
    /// Splits with at least one node holding all their blocks.
    pub local_capable_fraction: f64,
    pub local_bytes: u64,
    pub remote_bytes: u64,
}

impl LocalityReport {
    fn from_tasks(tasks: Vec<TaskLocality>, replication_factor: u32) -> Self {
        let n = tasks.len().max(1) as f64;
        let full = tasks
            .iter()
            .filter(|t| t.common_replicas >= replication_factor)
            .count();
        let capable = tasks.iter().filter(|t| t.common_replicas > 0).count();
        LocalityReport {
            fully_co_located_fraction: full as f64 / n,
            local_capable_fraction: capable as f64 / n,
            local_bytes: tasks.iter().map(|t| t.local_bytes).sum(),
            remote_bytes: tasks.iter().map(|t| t.remote_bytes).sum(),
            tasks,
        }
    }

    pub fn total_bytes(&self) -> u64 {
        self.local_bytes + self.remote_bytes
    }

    pub fn tasks_fully_local(&self) -> usize {
        self.tasks.iter().filter(|t| t.remote_bytes == 0).count()
    }
}

/// Counts each task's projected bytes as local or remote to its node.
pub fn simulate_scan(
    assignment: &[TaskAssignment],
    blocks: &BlockMap,
    config: &ClusterConfig,
) -> Result<LocalityReport> {
    let mut tasks = Vec::with_capacity(assignment.len());
    for a in assignment {
        let (mut local, mut remote) = (0u64, 0u64);
        for f in &a.files {
            let bl = blocks
                .blocks(f)
                .ok_or_else(|| Error::Config(format!("no blocks for `{f}`")))?;
            for b in bl {
                if b.replicas.contains(&a.node) {
                    local += b.length;
                } else {
                    remote += b.length;
                }
            }
        }
        tasks.push(TaskLocality {
            split: a.split.clone(),
            node: a.node,
            wave: a.wave,
            local_bytes: local,
            remote_bytes: remote,
            common_replicas: blocks.common_nodes(&a.files)?.len() as u32,
        });
    }
    Ok(LocalityReport::from_tasks(tasks, config.replication_factor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParallelismBound {
    /// Maximum number of map tasks that can do useful work.
    pub bound: u64,
    pub slots: u64,
}

impl ParallelismBound {
    pub fn full(&self) -> bool {
        self.bound >= self.slots
    }
}

/// CIF parallelism is one task per split directory.
pub fn cif_parallelism(split_directories: u64, slots: u64) -> ParallelismBound {
    ParallelismBound {
        bound: split_directories,
        slots,
    }
}

/// PAX parallelism is one task per row group.
pub fn pax_parallelism(row_groups: u64, slots: u64) -> ParallelismBound {
    ParallelismBound {
        bound: row_groups,
        slots,
    }
}

/// Smallest CIF dataset that fills `slots` tasks when every column file
/// occupies at least one block.
pub fn cif_full_parallelism_bytes(slots: u64, block_size: u64, columns: u64) -> u64 {
    slots * block_size * columns
}

/// Smallest PAX dataset, in blocks, that fills `slots` tasks with
/// `row_groups_per_block` row groups in each block.
pub fn pax_full_parallelism_blocks(slots: u64, row_groups_per_block: u64) -> u64 {
    slots.div_ceil(row_groups_per_block.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn cfg(nodes: u32, seed: u64) -> ClusterConfig {
        ClusterConfig {
            node_count: nodes,
            block_size: 1 << 20,
            rng_seed: seed,
            ..ClusterConfig::default()
        }
    }

    fn split_files(dir: &str, n: usize, len: u64) -> Vec<(String, u64)> {
        (0..n).map(|i| (format!("{dir}/c{i}"), len)).collect()
    }

    #[test]
    fn split_directory_convention() {
        assert_eq!(split_directory_of("data/s0/url"), Some("data/s0"));
        assert_eq!(split_directory_of("s12/x"), Some("s12"));
        assert_eq!(split_directory_of("data/sx/url"), None);
        assert_eq!(split_directory_of("data/s/url"), None);
        assert_eq!(split_directory_of("url"), None);
    }

    #[test]
    fn cpp_shares_one_replica_set() {
        for seed in 0..50 {
            let c = cfg(10, seed);
            let files = split_files("t/s0", 3, 3 << 20);
            let m = place(&files, PlacementPolicy::ColumnPlacement, &c).unwrap();
            let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
            assert_eq!(m.common_nodes(&names).unwrap().len(), 3);
            for (_, blocks) in m.files() {
                assert_eq!(blocks.len(), 3);
            }
        }
    }

    #[test]
    fn block_lengths_and_replica_invariants() {
        let c = cfg(5, 1);
        let m = place(&[("a", (5 << 20) / 2)], PlacementPolicy::Default, &c).unwrap();
        let b = m.blocks("a").unwrap();
        assert_eq!(b.iter().map(|x| x.length).collect::<Vec<_>>(), [1 << 20, 1 << 20, 1 << 19]);
        for x in b {
            assert_eq!(x.replicas.len(), 3);
            assert!(x.replicas.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn errors() {
        let c = ClusterConfig {
            replication_factor: 4,
            ..cfg(3, 0)
        };
        assert!(place(&[("a", 1)], PlacementPolicy::Default, &c).is_err());
        assert!(place(&[("a", 0)], PlacementPolicy::Default, &cfg(3, 0)).is_err());
        assert!(schedule(&[], &BlockMap::default(), &cfg(3, 0), &[]).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let files = split_files("s1", 4, 5 << 20);
        let a = place(&files, PlacementPolicy::Default, &cfg(20, 9)).unwrap();
        let b = place(&files, PlacementPolicy::Default, &cfg(20, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn busy_preferred_node_under_cpp_stays_local() {
        let c = cfg(10, 3);
        let files = split_files("d/s0", 3, 1 << 20);
        let m = place(&files, PlacementPolicy::ColumnPlacement, &c).unwrap();
        let names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
        let replicas = m.common_nodes(&names).unwrap();
        let task = SplitTask {
            split: "d/s0".to_string(),
            files: names,
        };
        let busy = [(replicas[0], 6), (replicas[1], 6)];
        let a = schedule(&[task], &m, &c, &busy).unwrap();
        assert_eq!(a[0].node, replicas[2]);
        let r = simulate_scan(&a, &m, &c).unwrap();
        assert_eq!(r.remote_bytes, 0);
        assert_eq!(r.local_bytes, 3 << 20);
    }

    #[test]
    fn figure_three_remote_column() {
        let mut m = BlockMap {
            block_size: 100,
            files: BTreeMap::new(),
        };
        for (name, nodes) in [("s0/c1", vec![1, 2, 3]), ("s0/c2", vec![1, 2, 4]), ("s0/c3", vec![2, 5, 6])] {
            m.files.insert(
                name.to_string(),
                vec![BlockInfo {
                    length: 100,
                    replicas: nodes,
                }],
            );
        }
        let a = [TaskAssignment {
            split: "s0".into(),
            node: 1,
            wave: 0,
            files: vec!["s0/c1".into(), "s0/c2".into(), "s0/c3".into()],
        }];
        let r = simulate_scan(&a, &m, &cfg(10, 0)).unwrap();
        assert_eq!((r.local_bytes, r.remote_bytes), (200, 100));
        assert_eq!(r.tasks[0].common_replicas, 1);
    }

    #[test]
    fn waves_release_slots() {
        let c = ClusterConfig {
            map_slots_per_node: 1,
            replication_factor: 2,
            ..cfg(2, 0)
        };
        let files: Vec<(String, u64)> = (0..5).map(|i| (format!("s{i}/a"), 10)).collect();
        let m = place(&files, PlacementPolicy::ColumnPlacement, &c).unwrap();
        let tasks: Vec<SplitTask> = files
            .iter()
            .map(|(p, _)| SplitTask {
                split: p.clone(),
                files: vec![p.clone()],
            })
            .collect();
        let a = schedule(&tasks, &m, &c, &[]).unwrap();
        assert_eq!(a.iter().map(|t| t.wave).collect::<Vec<_>>(), [0, 0, 1, 1, 2]);
        // Two nodes, r = 2: every node holds every block.
        assert_eq!(simulate_scan(&a, &m, &c).unwrap().remote_bytes, 0);
    }

    #[test]
    fn parallelism() {
        assert_eq!(cif_full_parallelism_bytes(200, 64 << 20, 10), 200 * 10 * (64 << 20));
        assert!(!cif_parallelism(5, 240).full());
        assert_eq!(pax_full_parallelism_blocks(200, 4), 50);
        assert!(pax_parallelism(200, 200).full());
    }
}
